"""
Seeded experiment orchestration: graph sets, cell sweeps, manifests and analysis.

Every cell owns a random source derived from the master seed and its index,
so cells can run in any order or in parallel with identical results.
"""
import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from analysis import (
    AccuracyRecord,
    MixingFit,
    aggregate_accuracy,
    ensemble_error_curve,
    fit_mixing_curve,
    optimal_xi_by_beta,
    pi_star_proxy,
    select_best_learning_rate,
)
from config import CellRecord, ChainConfig, Config, ExperimentConfig, Manifest
from errors import CellIOError, InvalidArgumentError
from graph import GroundTruth, brute_force_extrema, generate_random_graph, load_graph, save_graph
from mcmc import run_mcmc_vqa
from qsim import Ansatz
from vqe import LossLandscape, random_initial_parameters, run_vqe

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Separate the initial-parameter and graph streams from the per-cell stream
_INIT_STREAM = 0x5EED_1A17_0000_0001
_GRAPH_STREAM = 0x5EED_6AA9_0000_0002


def derive_seed(master_seed: int, index: int) -> int:
    """
    SplitMix64 output for (master_seed, index).

    For a fixed master seed the map index -> seed is a bijection on 64-bit
    integers, so distinct indices never collide.
    """
    z = (master_seed + (index + 1) * _GOLDEN_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def init_seed_for(master_seed: int, graph_index: int, seed_index: int) -> int:
    """Seed of the initial parameters, shared by every hyperparameter cell of (graph, seed)."""
    return derive_seed(derive_seed(master_seed ^ _INIT_STREAM, graph_index), seed_index)


def graph_seed_for(seed: int, graph_index: int) -> int:
    return derive_seed(seed ^ _GRAPH_STREAM, graph_index)


def generate_graph_files(n: int, m: int, count: int, seed: int, outdir: Path) -> list[Path]:
    """Write `count` random graphs as graph_000.json, graph_001.json, ..."""
    outdir = Path(outdir)
    paths = []
    for i in range(count):
        graph = generate_random_graph(n, m, np.random.default_rng(graph_seed_for(seed, i)))
        paths.append(save_graph(graph, outdir / f"graph_{i:03d}.json"))
    logger.info(f"Wrote {count} graphs (n={n}, m={m}) to {outdir}")
    return paths


def groundtruth_path_for(graph_path: Path, outdir: Optional[Path] = None) -> Path:
    graph_path = Path(graph_path)
    directory = Path(outdir) if outdir is not None else graph_path.parent
    return directory / f"{graph_path.stem}.groundtruth.json"


def write_groundtruth(graph_path: Path, outdir: Optional[Path] = None) -> Path:
    """Brute-force a graph file and write <stem>.groundtruth.json."""
    gt = brute_force_extrema(load_graph(Path(graph_path)))
    path = groundtruth_path_for(graph_path, outdir)
    data = {"graph_id": Path(graph_path).stem, **gt.to_dict()}
    _write_json(path, data)
    logger.info(f"{Path(graph_path).stem}: e_min={gt.e_min:.6f}, e_max={gt.e_max:.6f}")
    return path


def load_groundtruth(path: Path) -> tuple[str, GroundTruth]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        raise CellIOError(f"Cannot read ground truth {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidArgumentError(f"Ground truth {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"Ground truth {path} is not a JSON object")
    graph_id = data.get("graph_id", Path(path).name.replace(".groundtruth.json", ""))
    return graph_id, GroundTruth.from_dict(data)


def _write_json(path: Path, data: dict):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2)
    except OSError as e:
        raise CellIOError(f"Cannot write {path}: {e}") from e


def enumerate_cells(config: Config) -> list[CellRecord]:
    """
    Expand the sweep into cells: graphs x seeds x methods x hyperparameters.

    Baseline VQE cells (include_baseline) reuse the learning-rate grid and the
    initial parameters of their (graph, seed).
    """
    exp = config.experiment
    methods = [exp.method]
    if exp.include_baseline and exp.method == "mcmc-vqa":
        methods.append("vqe")

    cells = []
    for graph_index, path in enumerate(config.graph_paths()):
        graph_id = path.stem
        for seed_index in range(exp.n_seeds):
            init_seed = init_seed_for(exp.master_seed, graph_index, seed_index)
            for method in methods:
                if method == "mcmc-vqa":
                    grid = [(beta, xi, eta) for beta in exp.betas for xi in exp.xis for eta in exp.etas]
                else:
                    grid = [(None, None, eta) for eta in exp.etas]
                for beta, xi, eta in grid:
                    index = len(cells)
                    stem = f"cells/{index:06d}_{graph_id}_{method}"
                    cells.append(CellRecord(
                        index=index,
                        graph_id=graph_id,
                        graph_path=str(path),
                        graph_index=graph_index,
                        seed_index=seed_index,
                        method=method,
                        beta=beta,
                        xi=xi,
                        eta=eta,
                        cell_seed=derive_seed(exp.master_seed, index),
                        init_seed=init_seed,
                        trace_file=f"{stem}.trace.csv",
                        summary_file=f"{stem}.summary.json",
                    ))
    return cells


def run_cell(cell: CellRecord, exp: ExperimentConfig) -> CellRecord:
    """Execute one cell and write its trace CSV and summary JSON; never raises."""
    outdir = Path(exp.outdir)
    try:
        graph = load_graph(Path(cell.graph_path))
        ansatz = Ansatz.build(graph.n_vertices, exp.ansatz.n_layers, exp.ansatz.connectivity)
        theta0 = random_initial_parameters(ansatz, np.random.default_rng(cell.init_seed))
        rng = np.random.default_rng(cell.cell_seed)

        if cell.method == "mcmc-vqa":
            chain_cfg = ChainConfig(
                beta=cell.beta, xi=cell.xi, eta=cell.eta, epsilon=exp.epsilon, m_shots=exp.m_shots,
                t_mc=exp.t_mc, t_close=exp.t_close, eta_close=exp.eta_close
            )
            theta, trace = run_mcmc_vqa(graph, ansatz, theta0, chain_cfg, rng)
            frame = trace.to_frame()
            lambda_min = trace.lambda_min
            accepted_fraction = trace.accepted_fraction
            echo = chain_cfg.model_dump(mode='json')
        else:
            theta, trace = run_vqe(graph, ansatz, theta0, cell.eta, exp.epsilon, exp.vqe_epochs, exp.m_shots, rng)
            frame = trace.to_frame()
            lambda_min = float(trace.losses.min()) if trace.records else None
            accepted_fraction = None
            echo = {"eta": cell.eta, "epsilon": exp.epsilon, "m_shots": exp.m_shots, "n_epochs": exp.vqe_epochs}

        final_loss = LossLandscape(graph=graph, ansatz=ansatz).exact_loss(theta)

        trace_path = outdir / cell.trace_file
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(trace_path, index=False)
        _write_json(outdir / cell.summary_file, {
            "graph_id": cell.graph_id,
            "method": cell.method,
            "seed": cell.cell_seed,
            "init_seed": cell.init_seed,
            "seed_index": cell.seed_index,
            "lambda_min": lambda_min,
            "final_loss": final_loss,
            "accepted_fraction": accepted_fraction,
            "theta_final": [float(x) for x in theta],
            "config": echo,
        })
        return cell.model_copy(update={"status": "ok"})

    except Exception as e:
        logger.error(f"Cell {cell.index} ({cell.graph_id}, {cell.method}) failed: {e}", exc_info=True)
        return cell.model_copy(update={"status": "failed", "error": str(e)})


def run_experiment(config: Config) -> Manifest:
    """Run every cell (in parallel up to `workers`) and write the manifest once at the end."""
    exp = config.experiment
    config.save_config_echo()
    cells = enumerate_cells(config)
    logger.info(f"Running {len(cells)} cells with {exp.workers} worker(s) into {config.output_dir}")

    finished: list[CellRecord] = []
    if exp.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=exp.workers) as executor:
            futures = {executor.submit(run_cell, cell, exp): cell for cell in cells}
            for future in as_completed(futures):
                cell = futures[future]
                try:
                    finished.append(future.result())
                except Exception as e:
                    # run_cell never raises; only a dead worker process gets here
                    logger.error(f"Cell {cell.index} ({cell.graph_id}, {cell.method}) lost its worker: {e!r}")
                    finished.append(cell.model_copy(update={"status": "failed", "error": f"worker failed: {e!r}"}))
    else:
        for cell in cells:
            finished.append(run_cell(cell, exp))

    finished.sort(key=lambda c: c.index)
    manifest = Manifest(master_seed=exp.master_seed, config=exp.model_dump(mode='json'), cells=finished)
    config.save_manifest(manifest)

    failed = manifest.failed_cells
    if failed:
        logger.warning(f"{len(failed)} of {len(cells)} cells failed")
    return manifest


@dataclass
class AnalysisReport:
    records: list[AccuracyRecord]
    aggregate: pd.DataFrame
    xi_optimum: pd.DataFrame
    fits: list[dict]


def _read_cell_json(path: Path, cell: CellRecord) -> dict:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        raise CellIOError(f"Missing summary for cell {cell.index} ({cell.graph_id}): {path}") from e
    except json.JSONDecodeError as e:
        raise CellIOError(f"Corrupt summary for cell {cell.index} ({cell.graph_id}): {path}: {e}") from e
    if not isinstance(data, dict) or "final_loss" not in data:
        raise CellIOError(f"Summary for cell {cell.index} ({cell.graph_id}) has no final_loss: {path}")
    return data


def _read_markov_losses(path: Path, cell: CellRecord) -> np.ndarray:
    try:
        frame = pd.read_csv(path)
    except OSError as e:
        raise CellIOError(f"Missing trace for cell {cell.index} ({cell.graph_id}): {path}") from e
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise CellIOError(f"Corrupt trace for cell {cell.index} ({cell.graph_id}): {path}: {e}") from e
    if not {"phase", "loss"} <= set(frame.columns):
        raise CellIOError(f"Trace for cell {cell.index} ({cell.graph_id}) lacks phase/loss columns: {path}")
    return frame.loc[frame["phase"] == "markov", "loss"].to_numpy(dtype=float)


def analyze_manifest(
    manifest_path: Path,
    groundtruth_files: Sequence[Path] = (),
    outdir: Optional[Path] = None
) -> AnalysisReport:
    """
    Compute accuracies, per-group aggregates, optimal xi per beta and mixing fits.

    Everything is computed before any file is written, so a failure leaves no
    partial output. Writes aggregate.csv, xi_optimum.csv and fits.json.

    Raises:
        InvalidArgumentError: If the manifest lists no successful cells
        CellIOError: If a listed trace or summary file is missing
    """
    manifest_path = Path(manifest_path)
    manifest = Config.load_manifest(manifest_path)
    # Cell files are relative to the directory holding the manifest
    run_dir = manifest_path.parent
    outdir = Path(outdir) if outdir is not None else run_dir

    cells = [c for c in manifest.cells if c.status == "ok"]
    if not cells:
        raise InvalidArgumentError(f"Manifest {manifest_path} lists no successful cells")
    skipped = len(manifest.cells) - len(cells)
    if skipped:
        logger.warning(f"Skipping {skipped} failed cell(s)")

    truths: dict[str, GroundTruth] = {}
    for path in groundtruth_files:
        graph_id, gt = load_groundtruth(Path(path))
        truths[graph_id] = gt
    for cell in cells:
        if cell.graph_id not in truths:
            logger.info(f"No ground truth file for {cell.graph_id}; brute-forcing")
            truths[cell.graph_id] = brute_force_extrema(load_graph(Path(cell.graph_path)))

    records = []
    for cell in cells:
        summary = _read_cell_json(run_dir / cell.summary_file, cell)
        records.append(AccuracyRecord.from_final_loss(
            summary["final_loss"], truths[cell.graph_id],
            graph_id=cell.graph_id, seed=cell.seed_index, method=cell.method,
            beta=cell.beta, xi=cell.xi, eta=cell.eta
        ))

    selected = select_best_learning_rate(records)
    summaries = aggregate_accuracy(selected, ("method", "beta", "xi"))
    best_eta = {(r.method, r.beta, r.xi): r.eta for r in selected}

    aggregate = pd.DataFrame(
        [[method, beta, xi, best_eta[(method, beta, xi)], s.mean_accuracy, s.std, s.n]
         for (method, beta, xi), s in summaries.items()],
        columns=["method", "beta", "xi", "eta", "mean_accuracy", "std", "n"]
    )

    xi_best = optimal_xi_by_beta(summaries)
    xi_optimum = pd.DataFrame(
        [[beta, xi, mean] for beta, (xi, mean) in xi_best.items()],
        columns=["beta", "xi", "mean_accuracy"]
    )

    fits = []
    for beta, (xi, _) in xi_best.items():
        eta = best_eta[("mcmc-vqa", beta, xi)]
        group = [c for c in cells if c.method == "mcmc-vqa" and c.beta == beta and c.xi == xi and c.eta == eta]
        curves = [_read_markov_losses(run_dir / c.trace_file, c) for c in group]
        if not curves or min(len(c) for c in curves) < 3:
            logger.warning(f"beta={beta}: fewer than 3 Markov epochs, no mixing fit")
            continue
        gts = [truths[c.graph_id] for c in group]
        error = ensemble_error_curve(curves, gts)
        points = [(t, a) for t, a in enumerate(error) if a > 0]
        if len(points) < len(error):
            logger.warning(f"beta={beta}: dropped {len(error) - len(points)} zero-error epochs from the fit")
        if len(points) < 3:
            continue
        fit: MixingFit = fit_mixing_curve(points)
        proxy = float(np.mean([pi_star_proxy(gt, beta) for gt in gts]))
        fits.append({"beta": beta, "xi": xi, "eta": eta, **fit.model_dump(), "pi_star_proxy": proxy})

    outdir.mkdir(parents=True, exist_ok=True)
    aggregate.to_csv(outdir / "aggregate.csv", index=False)
    xi_optimum.to_csv(outdir / "xi_optimum.csv", index=False)
    _write_json(outdir / "fits.json", {"fits": fits})
    logger.info(f"Analysis of {len(records)} cells written to {outdir}")

    return AnalysisReport(records=records, aggregate=aggregate, xi_optimum=xi_optimum, fits=fits)
