"""
Unit tests for MCP tool handlers.

Handlers run real (small) simulations; graphs are kept at a few vertices.
"""
import sys
sys.path.insert(0, 'src')

import json

import pytest
from unittest.mock import patch
from mcp.types import TextContent

from mcmc import run_mcmc_vqa
from server import (
    handle_generate_graph,
    handle_run_mcmc_vqa,
    handle_run_vqe,
    handle_solve_ground_truth,
)

TRIANGLE = {"n": 3, "edges": [[0, 1, 1.0], [0, 2, 1.0], [1, 2, 1.0]]}


def payload(result) -> dict:
    assert len(result) == 1
    assert isinstance(result[0], TextContent)
    return json.loads(result[0].text)


class TestGenerateGraph:
    """Test generate_graph tool handler."""

    @pytest.mark.asyncio
    async def test_shape(self):
        """Test the returned graph document."""
        data = payload(await handle_generate_graph({"n": 6, "m": 7, "seed": 3}))
        assert data["n"] == 6
        assert len(data["edges"]) == 7

    @pytest.mark.asyncio
    async def test_seeded(self):
        """Test the same seed returns the same graph."""
        first = payload(await handle_generate_graph({"seed": 5}))
        second = payload(await handle_generate_graph({"seed": 5}))
        assert first == second
        assert first["n"] == 10

    @pytest.mark.asyncio
    async def test_too_many_edges(self):
        """Test invalid edge counts raise."""
        with pytest.raises(ValueError):
            await handle_generate_graph({"n": 3, "m": 4})


class TestSolveGroundTruth:
    """Test solve_ground_truth tool handler."""

    @pytest.mark.asyncio
    async def test_triangle(self):
        """Test the unit triangle: e_min -1, e_max 3, best cut 2."""
        data = payload(await handle_solve_ground_truth({"graph": TRIANGLE}))
        assert data["e_min"] == -1.0
        assert data["e_max"] == 3.0
        assert data["max_cut"] == 2.0
        assert len(data["argmin"]) == 3


class TestRunVqe:
    """Test run_vqe tool handler."""

    @pytest.mark.asyncio
    async def test_summary(self):
        """Test a short VQE run reports loss and accuracy."""
        data = payload(await handle_run_vqe({"graph": TRIANGLE, "n_epochs": 20, "eta": 0.2, "seed": 1}))
        assert data["method"] == "vqe"
        assert data["epochs"] == 20
        assert -1.0 - 1e-9 <= data["final_loss"] <= 3.0 + 1e-9
        assert 0.0 <= data["accuracy"] <= 1.0


class TestRunMcmcVqa:
    """Test run_mcmc_vqa tool handler."""

    @pytest.mark.asyncio
    async def test_summary(self):
        """Test a short chain reports its best loss, acceptance and echoed config."""
        data = payload(await handle_run_mcmc_vqa({
            "graph": TRIANGLE, "t_mc": 15, "t_close": 5, "beta": 0.8, "xi": 0.3, "seed": 2
        }))
        assert data["method"] == "mcmc-vqa"
        assert 0.0 <= data["accepted_fraction"] <= 1.0
        assert data["lambda_min"] >= -1.0 - 1e-9
        assert data["config"]["beta"] == 0.8
        assert data["config"]["t_mc"] == 15
        assert 0.0 <= data["accuracy"] <= 1.0

    @pytest.mark.asyncio
    async def test_finite_shots(self):
        """Test a finite shot count is accepted."""
        data = payload(await handle_run_mcmc_vqa({
            "graph": TRIANGLE, "t_mc": 5, "t_close": 2, "m_shots": 500, "seed": 3
        }))
        assert data["config"]["m_shots"] == 500

    @pytest.mark.asyncio
    async def test_closing_learning_rate_defaults_to_eta(self):
        """Test the closing learning rate falls back to eta."""
        with patch('server.run_mcmc_vqa', wraps=run_mcmc_vqa) as mock_run:
            await handle_run_mcmc_vqa({"graph": TRIANGLE, "t_mc": 3, "t_close": 1, "eta": 0.25, "seed": 4})

            mock_run.assert_called_once()
            cfg = mock_run.call_args.args[3]
            assert cfg.eta == 0.25
            assert cfg.closing_eta == 0.25

    @pytest.mark.asyncio
    async def test_closing_learning_rate_passed_through(self):
        """Test an explicit eta_close reaches the chain and is echoed."""
        with patch('server.run_mcmc_vqa', wraps=run_mcmc_vqa) as mock_run:
            data = payload(await handle_run_mcmc_vqa({
                "graph": TRIANGLE, "t_mc": 3, "t_close": 1, "eta": 0.25, "eta_close": 0.05, "seed": 4
            }))

            cfg = mock_run.call_args.args[3]
            assert cfg.eta == 0.25
            assert cfg.closing_eta == 0.05
            assert data["config"]["eta_close"] == 0.05

    @pytest.mark.asyncio
    async def test_invalid_closing_learning_rate(self):
        """Test a non-positive eta_close is a configuration error."""
        with pytest.raises(ValueError):
            await handle_run_mcmc_vqa({"graph": TRIANGLE, "t_mc": 1, "t_close": 1, "eta_close": -1.0})
