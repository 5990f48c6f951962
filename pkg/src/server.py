"""
MCP Server for MCMC-VQA simulations.

Exposes graph generation, exact ground truths and single VQE / MCMC-VQA runs
as tools, returning JSON summaries.
"""
import asyncio
import json
import logging

import numpy as np
from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import TextContent, Tool

from analysis import normalized_error
from config import ChainConfig, validated
from errors import InvalidArgumentError
from graph import WeightedGraph, brute_force_extrema, generate_random_graph, maxcut_objective
from mcmc import run_mcmc_vqa
from qsim import Ansatz
from vqe import LossLandscape, random_initial_parameters, run_vqe


# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


# Create MCP server instance
app = Server("mcmc-vqa-simulator")


GRAPH_SCHEMA = {
    "type": "object",
    "description": "Weighted graph {\"n\": int, \"edges\": [[a, b, w], ...]}",
    "properties": {
        "n": {"type": "integer"},
        "edges": {"type": "array", "items": {"type": "array"}}
    },
    "required": ["n", "edges"]
}

RUN_PROPERTIES = {
    "graph": GRAPH_SCHEMA,
    "eta": {"type": "number", "description": "Learning rate", "default": 0.1},
    "epsilon": {"type": "number", "description": "Finite-difference shift", "default": 0.01},
    "m_shots": {
        "description": "Measurements per observable, or 'exact'",
        "anyOf": [{"type": "integer", "minimum": 1}, {"type": "string", "enum": ["exact"]}],
        "default": "exact"
    },
    "seed": {"type": "integer", "description": "Seed for initial parameters and sampling", "default": 0},
    "n_layers": {"type": "integer", "default": 1},
    "connectivity": {"type": "string", "enum": ["linear", "ring", "none"], "default": "linear"}
}


@app.list_tools()
async def list_tools() -> list[Tool]:
    """List available tools."""
    return [
        Tool(
            name="generate_graph",
            description="Generate a random graph with m distinct edges and standard-normal weights",
            inputSchema={
                "type": "object",
                "properties": {
                    "n": {"type": "integer", "description": "Vertices", "default": 10},
                    "m": {"type": "integer", "description": "Edges", "default": 10},
                    "seed": {"type": "integer", "default": 0}
                }
            }
        ),
        Tool(
            name="solve_ground_truth",
            description="Exact minimum / maximum Ising energy and optimal cut by exhaustive search",
            inputSchema={
                "type": "object",
                "properties": {"graph": GRAPH_SCHEMA},
                "required": ["graph"]
            }
        ),
        Tool(
            name="run_vqe",
            description="Run plain VQE gradient descent on a graph's Ising Hamiltonian",
            inputSchema={
                "type": "object",
                "properties": {
                    **RUN_PROPERTIES,
                    "n_epochs": {"type": "integer", "default": 100}
                },
                "required": ["graph"]
            }
        ),
        Tool(
            name="run_mcmc_vqa",
            description="Run MCMC-VQA (Metropolis-Hastings over circuit parameters, then closing VQE)",
            inputSchema={
                "type": "object",
                "properties": {
                    **RUN_PROPERTIES,
                    "beta": {"type": "number", "description": "Inverse temperature", "default": 0.2},
                    "xi": {"type": "number", "description": "Proposal noise scale", "default": 0.5},
                    "t_mc": {"type": "integer", "default": 400},
                    "t_close": {"type": "integer", "default": 100},
                    "eta_close": {"type": "number", "description": "Closing learning rate (defaults to eta)"}
                },
                "required": ["graph"]
            }
        )
    ]


@app.call_tool()
async def call_tool(name: str, arguments: dict) -> list[TextContent]:
    """Handle tool calls."""
    try:
        if name == "generate_graph":
            return await handle_generate_graph(arguments)
        elif name == "solve_ground_truth":
            return await handle_solve_ground_truth(arguments)
        elif name == "run_vqe":
            return await handle_run_vqe(arguments)
        elif name == "run_mcmc_vqa":
            return await handle_run_mcmc_vqa(arguments)
        else:
            return [TextContent(type="text", text=f"Unknown tool: {name}")]
    except Exception as e:
        logger.error(f"Error in tool {name}: {e}", exc_info=True)
        return [TextContent(type="text", text=f"Error: {str(e)}")]


def _text(data: dict) -> list[TextContent]:
    return [TextContent(type="text", text=json.dumps(data, indent=2))]


def _graph_argument(arguments: dict) -> WeightedGraph:
    if "graph" not in arguments:
        raise InvalidArgumentError("Missing 'graph' argument")
    return WeightedGraph.from_dict(arguments["graph"])


def _ansatz_for(graph: WeightedGraph, arguments: dict) -> Ansatz:
    return Ansatz.build(
        graph.n_vertices,
        int(arguments.get("n_layers", 1)),
        arguments.get("connectivity", "linear")
    )


def _accuracy(graph: WeightedGraph, final_loss: float) -> dict:
    gt = brute_force_extrema(graph)
    result = {"e_min": gt.e_min, "e_max": gt.e_max}
    if gt.e_max > gt.e_min:
        result["accuracy"] = 1.0 - normalized_error(final_loss, gt)
    return result


async def handle_generate_graph(arguments: dict) -> list[TextContent]:
    """Handle generate_graph tool."""
    n = int(arguments.get("n", 10))
    m = int(arguments.get("m", 10))
    seed = int(arguments.get("seed", 0))
    graph = generate_random_graph(n, m, np.random.default_rng(seed))
    return _text(graph.to_dict())


async def handle_solve_ground_truth(arguments: dict) -> list[TextContent]:
    """Handle solve_ground_truth tool."""
    graph = _graph_argument(arguments)
    gt = brute_force_extrema(graph)
    return _text({**gt.to_dict(), "max_cut": maxcut_objective(graph, gt.argmin)})


async def handle_run_vqe(arguments: dict) -> list[TextContent]:
    """Handle run_vqe tool."""
    graph = _graph_argument(arguments)
    ansatz = _ansatz_for(graph, arguments)
    rng = np.random.default_rng(int(arguments.get("seed", 0)))
    eta = float(arguments.get("eta", 0.1))
    epsilon = float(arguments.get("epsilon", 1e-2))
    n_epochs = int(arguments.get("n_epochs", 100))
    m_shots = arguments.get("m_shots", "exact")

    theta0 = random_initial_parameters(ansatz, rng)
    logger.info(f"VQE: {graph.n_vertices} qubits, {n_epochs} epochs, eta={eta}")
    # CPU-bound; run off the event loop
    theta, trace = await asyncio.to_thread(run_vqe, graph, ansatz, theta0, eta, epsilon, n_epochs, m_shots, rng)

    final_loss = LossLandscape(graph=graph, ansatz=ansatz).exact_loss(theta)
    return _text({
        "method": "vqe",
        "final_loss": final_loss,
        "epochs": len(trace.records),
        **_accuracy(graph, final_loss)
    })


async def handle_run_mcmc_vqa(arguments: dict) -> list[TextContent]:
    """Handle run_mcmc_vqa tool."""
    graph = _graph_argument(arguments)
    ansatz = _ansatz_for(graph, arguments)
    rng = np.random.default_rng(int(arguments.get("seed", 0)))
    cfg = validated(
        ChainConfig,
        beta=arguments.get("beta", 0.2),
        xi=arguments.get("xi", 0.5),
        eta=arguments.get("eta", 0.1),
        epsilon=arguments.get("epsilon", 1e-2),
        m_shots=arguments.get("m_shots", "exact"),
        t_mc=arguments.get("t_mc", 400),
        t_close=arguments.get("t_close", 100),
        eta_close=arguments.get("eta_close")
    )

    theta0 = random_initial_parameters(ansatz, rng)
    logger.info(f"MCMC-VQA: beta={cfg.beta}, xi={cfg.xi}, t_mc={cfg.t_mc}, t_close={cfg.t_close}")
    theta, trace = await asyncio.to_thread(run_mcmc_vqa, graph, ansatz, theta0, cfg, rng)

    final_loss = LossLandscape(graph=graph, ansatz=ansatz).exact_loss(theta)
    return _text({
        "method": "mcmc-vqa",
        "lambda_min": trace.lambda_min,
        "final_loss": final_loss,
        "accepted_fraction": trace.accepted_fraction,
        "config": cfg.model_dump(mode='json'),
        **_accuracy(graph, final_loss)
    })


async def main():
    """Run the MCP server."""
    logger.info("Starting MCMC-VQA MCP Server...")

    async with stdio_server() as (read_stream, write_stream):
        await app.run(
            read_stream,
            write_stream,
            app.create_initialization_options()
        )


if __name__ == "__main__":
    asyncio.run(main())
