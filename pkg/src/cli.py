#!/usr/bin/env python3
"""
Command-line entry point for MCMC-VQA experiments.

Subcommands:
    gen-graphs   write a seeded set of random weighted graphs
    brute-force  write exact ground truths for graph files
    run          execute an experiment config (graphs x seeds x hyperparameters)
    analyze      aggregate accuracies and fit mixing curves from a run manifest
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from config import Config
from errors import SimulatorError
from experiment import analyze_manifest, generate_graph_files, run_experiment, write_groundtruth

logger = logging.getLogger(__name__)


def cmd_gen_graphs(args: argparse.Namespace) -> int:
    paths = generate_graph_files(args.n, args.m, args.count, args.seed, Path(args.outdir))
    print(f"✓ {len(paths)} graph file(s) in {args.outdir}")
    return 0


def cmd_brute_force(args: argparse.Namespace) -> int:
    outdir = Path(args.outdir) if args.outdir else None
    for graph_file in args.graphs:
        path = write_groundtruth(Path(graph_file), outdir)
        print(f"✓ {path}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = Config(Path(args.config))

    m_shots = None
    if args.exact:
        m_shots = "exact"
    elif args.shots is not None:
        m_shots = args.shots

    # CLI flags override the config file; the merged config is what the manifest records
    config.update_hyperparameters(
        master_seed=args.seed,
        workers=args.workers,
        outdir=args.outdir,
        m_shots=m_shots,
    )

    manifest = run_experiment(config)
    failed = manifest.failed_cells
    print(f"✓ {len(manifest.cells) - len(failed)}/{len(manifest.cells)} cells completed; manifest: {config.manifest_file}")
    if failed:
        for cell in failed:
            print(f"✗ cell {cell.index} ({cell.graph_id}, {cell.method}): {cell.error}")
        return 1
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    report = analyze_manifest(
        Path(args.manifest),
        [Path(p) for p in args.groundtruth],
        Path(args.outdir) if args.outdir else None,
    )
    print(report.aggregate.to_string(index=False))
    for fit in report.fits:
        print(f"beta={fit['beta']}: amplitude={fit['amplitude']:.4g}, rate={fit['rate']:.4g}, "
              f"residual={fit['residual']:.4g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcmc-vqa", description="MCMC-enhanced VQE experiments on weighted MaxCut")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-graphs", help="Generate random weighted graphs")
    gen.add_argument("--n", type=int, default=10, help="Vertices per graph")
    gen.add_argument("--m", type=int, default=10, help="Edges per graph")
    gen.add_argument("--count", type=int, default=10, help="Number of graphs")
    gen.add_argument("--seed", type=int, default=0, help="Master seed (u64)")
    gen.add_argument("--outdir", type=str, default="graphs")
    gen.set_defaults(handler=cmd_gen_graphs)

    brute = sub.add_parser("brute-force", help="Exact ground truth for graph files")
    brute.add_argument("graphs", nargs="+", help="Graph JSON files")
    brute.add_argument("--outdir", type=str, default=None, help="Defaults to each graph's directory")
    brute.set_defaults(handler=cmd_brute_force)

    run = sub.add_parser("run", help="Run an experiment config")
    run.add_argument("--config", type=str, required=True)
    run.add_argument("--seed", type=int, default=None, help="Override master seed (u64)")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--outdir", type=str, default=None)
    shots = run.add_mutually_exclusive_group()
    shots.add_argument("--exact", action="store_true", help="Exact expectation values (large-M limit)")
    shots.add_argument("--shots", type=int, default=None, help="Measurements per observable")
    run.set_defaults(handler=cmd_run)

    analyze = sub.add_parser("analyze", help="Aggregate a run")
    analyze.add_argument("--manifest", type=str, required=True)
    analyze.add_argument("--groundtruth", nargs="*", default=[], help="Ground-truth JSON files")
    analyze.add_argument("--outdir", type=str, default=None, help="Defaults to the manifest's directory")
    analyze.set_defaults(handler=cmd_analyze)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)

    try:
        return args.handler(args)
    except SimulatorError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=args.verbose)
        print(f"✗ {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
