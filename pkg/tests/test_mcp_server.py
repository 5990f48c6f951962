"""
Tests for the MCP server structure: tool listing and dispatch.
"""
import sys
import inspect
sys.path.insert(0, 'src')

import pytest

import server as server_module
from server import app, call_tool, list_tools


class TestServerStructure:
    """Test that the server exposes the expected tools and handlers."""

    def test_server_name(self):
        """Test the server instance name."""
        assert app.name == "mcmc-vqa-simulator"

    def test_handlers_are_coroutines(self):
        """Test every tool handler is async."""
        for name in ("handle_generate_graph", "handle_solve_ground_truth", "handle_run_vqe", "handle_run_mcmc_vqa"):
            assert inspect.iscoroutinefunction(getattr(server_module, name)), name

    @pytest.mark.asyncio
    async def test_list_tools(self):
        """Test the advertised tool names and required arguments."""
        tools = await list_tools()
        names = [t.name for t in tools]
        assert names == ["generate_graph", "solve_ground_truth", "run_vqe", "run_mcmc_vqa"]
        run_mcmc = next(t for t in tools if t.name == "run_mcmc_vqa")
        assert run_mcmc.inputSchema["required"] == ["graph"]
        assert "beta" in run_mcmc.inputSchema["properties"]
        assert "eta_close" in run_mcmc.inputSchema["properties"]


class TestDispatch:
    """Test call_tool routing and error reporting."""

    @pytest.mark.asyncio
    async def test_unknown_tool(self):
        """Test an unknown tool name is reported, not raised."""
        result = await call_tool("no_such_tool", {})
        assert result[0].text == "Unknown tool: no_such_tool"

    @pytest.mark.asyncio
    async def test_errors_become_text(self):
        """Test handler exceptions are returned as error text."""
        result = await call_tool("solve_ground_truth", {})
        assert result[0].text.startswith("Error:")
        assert "graph" in result[0].text

    @pytest.mark.asyncio
    async def test_invalid_hyperparameters(self):
        """Test configuration errors surface through the dispatcher."""
        graph = {"n": 2, "edges": [[0, 1, 1.0]]}
        result = await call_tool("run_mcmc_vqa", {"graph": graph, "beta": -1.0})
        assert result[0].text.startswith("Error:")
