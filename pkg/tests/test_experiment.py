"""
Integration tests for seeded graph sets, experiment sweeps and analysis.
"""
import sys
sys.path.insert(0, 'src')

import json
from concurrent.futures import Future
from concurrent.futures.process import BrokenProcessPool
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

from config import Config, ExperimentConfig, Manifest
from errors import CellIOError, InvalidArgumentError
from experiment import (
    analyze_manifest,
    derive_seed,
    enumerate_cells,
    generate_graph_files,
    graph_seed_for,
    init_seed_for,
    load_groundtruth,
    run_cell,
    run_experiment,
    write_groundtruth,
)
from graph import generate_random_graph, load_graph


def make_config(tmp_path, outdir="run", **overrides) -> Config:
    graphs = generate_graph_files(4, 4, 2, seed=11, outdir=tmp_path / "graphs")
    data = {
        "graphs": [str(p) for p in graphs],
        "method": "mcmc-vqa",
        "include_baseline": True,
        "betas": [0.2, 0.8],
        "xis": [0.5],
        "etas": [0.1],
        "t_mc": 10,
        "t_close": 5,
        "vqe_epochs": 5,
        "n_seeds": 2,
        "master_seed": 3,
        "outdir": str(tmp_path / outdir),
    }
    data.update(overrides)
    return Config(experiment=ExperimentConfig(**data))


def cell_files(outdir) -> dict:
    return {p.name: p.read_bytes() for p in sorted((outdir / "cells").iterdir())}


class TestSeeds:
    """Test seed derivation."""

    def test_collision_free(self):
        """Test 10^5 cell indices map to distinct seeds."""
        for master in (0, 1, 2 ** 64 - 1):
            seeds = {derive_seed(master, i) for i in range(100_000)}
            assert len(seeds) == 100_000

    def test_deterministic_u64(self):
        """Test seeds are reproducible 64-bit integers."""
        assert derive_seed(5, 9) == derive_seed(5, 9)
        assert derive_seed(5, 9) != derive_seed(6, 9)
        assert 0 <= derive_seed(2 ** 64 - 1, 10 ** 6) < 2 ** 64

    def test_initial_parameter_stream(self):
        """Test init seeds vary by graph and seed index and differ from cell seeds."""
        assert init_seed_for(0, 0, 0) != init_seed_for(0, 0, 1)
        assert init_seed_for(0, 0, 1) != init_seed_for(0, 1, 1)
        assert init_seed_for(0, 0, 0) != derive_seed(0, 0)

    def test_graph_stream_separate_from_cells(self, tmp_path):
        """Test graph i and cell i do not share a seed, and graph files use the graph stream."""
        for i in range(1000):
            assert graph_seed_for(0, i) != derive_seed(0, i)
            assert graph_seed_for(0, i) != init_seed_for(0, i, 0)

        path = generate_graph_files(10, 10, 1, 0, tmp_path)[0]
        assert load_graph(path) == generate_random_graph(10, 10, np.random.default_rng(graph_seed_for(0, 0)))


class TestGraphFiles:
    """Test seeded graph generation and ground-truth files."""

    def test_same_seed_same_bytes(self, tmp_path):
        """Test regenerating with the same seed writes identical files."""
        first = generate_graph_files(10, 10, 3, 42, tmp_path / "a")
        second = generate_graph_files(10, 10, 3, 42, tmp_path / "b")
        assert [p.name for p in first] == ["graph_000.json", "graph_001.json", "graph_002.json"]
        for p, q in zip(first, second):
            assert p.read_bytes() == q.read_bytes()

    def test_different_seeds_differ(self, tmp_path):
        """Test different master seeds give different graphs."""
        a = generate_graph_files(10, 10, 1, 1, tmp_path / "a")[0]
        b = generate_graph_files(10, 10, 1, 2, tmp_path / "b")[0]
        assert load_graph(a) != load_graph(b)

    def test_zero_count(self, tmp_path):
        """Test count=0 writes nothing."""
        assert generate_graph_files(10, 10, 0, 0, tmp_path / "none") == []
        assert not (tmp_path / "none").exists()

    def test_groundtruth_file(self, tmp_path):
        """Test <stem>.groundtruth.json next to the graph."""
        graph_path = generate_graph_files(6, 6, 1, 0, tmp_path)[0]
        gt_path = write_groundtruth(graph_path)
        assert gt_path.name == "graph_000.groundtruth.json"
        graph_id, gt = load_groundtruth(gt_path)
        assert graph_id == "graph_000"
        assert gt.e_min <= gt.e_max


class TestEnumerateCells:
    """Test sweep expansion."""

    def test_counts_and_shared_initialization(self, tmp_path):
        """Test graphs x seeds x (betas x xis x etas + baseline etas)."""
        cells = enumerate_cells(make_config(tmp_path))
        assert len(cells) == 2 * 2 * 3
        assert [c.index for c in cells] == list(range(12))
        assert len({c.cell_seed for c in cells}) == 12

        for graph_index in (0, 1):
            for seed_index in (0, 1):
                group = [c for c in cells if c.graph_index == graph_index and c.seed_index == seed_index]
                assert {c.method for c in group} == {"mcmc-vqa", "vqe"}
                assert len({c.init_seed for c in group}) == 1

    def test_beta_sweep_size(self, tmp_path):
        """Test a single graph and seed over three betas yields three cells."""
        config = make_config(tmp_path, betas=[0.2, 0.5, 0.8], include_baseline=False, n_seeds=1)
        config.update_hyperparameters(graphs=config.experiment.graphs[:1])
        assert len(enumerate_cells(config)) == 3


class TestRunExperiment:
    """Test running a small sweep end to end."""

    def test_manifest_lists_every_file(self, tmp_path):
        """Test every cell succeeds and every file on disk is in the manifest."""
        config = make_config(tmp_path)
        manifest = run_experiment(config)

        assert config.manifest_file.exists()
        assert all(c.status == "ok" for c in manifest.cells)
        listed = set()
        for c in manifest.cells:
            listed.update({c.trace_file, c.summary_file})
        on_disk = {f"cells/{p.name}" for p in (tmp_path / "run" / "cells").iterdir()}
        assert listed == on_disk

    def test_trace_shapes(self, tmp_path):
        """Test MCMC traces switch phase at t_mc and VQE traces have one row per epoch."""
        config = make_config(tmp_path)
        manifest = run_experiment(config)
        outdir = tmp_path / "run"

        mcmc = next(c for c in manifest.cells if c.method == "mcmc-vqa")
        chain = pd.read_csv(outdir / mcmc.trace_file)
        assert list(chain["phase"]) == ["markov"] * 10 + ["closing"] * 5

        summary = json.loads((outdir / mcmc.summary_file).read_text())
        assert summary["init_seed"] == mcmc.init_seed
        assert summary["lambda_min"] <= chain.loc[chain["phase"] == "markov", "loss"].min() + 1e-12
        assert len(summary["theta_final"]) == 4

        vqe = next(c for c in manifest.cells if c.method == "vqe")
        frame = pd.read_csv(outdir / vqe.trace_file)
        assert list(frame.columns) == ["epoch", "loss", "phase"]
        assert len(frame) == 5

    def test_rerun_is_identical(self, tmp_path):
        """Test the same config and seed reproduce every cell file byte for byte."""
        run_experiment(make_config(tmp_path, outdir="first"))
        run_experiment(make_config(tmp_path, outdir="second"))
        assert cell_files(tmp_path / "first") == cell_files(tmp_path / "second")

    def test_parallel_matches_sequential(self, tmp_path):
        """Test worker count does not change results."""
        run_experiment(make_config(tmp_path, outdir="serial", workers=1))
        run_experiment(make_config(tmp_path, outdir="parallel", workers=2))
        assert cell_files(tmp_path / "serial") == cell_files(tmp_path / "parallel")

    def test_failed_cell_is_recorded(self, tmp_path):
        """Test a cell that cannot load its graph is marked failed instead of raising."""
        config = make_config(tmp_path)
        cell = enumerate_cells(config)[0].model_copy(update={"graph_path": str(tmp_path / "gone.json")})
        result = run_cell(cell, config.experiment)
        assert result.status == "failed"
        assert result.error

    def test_dead_worker_marks_cell_failed(self, tmp_path):
        """Test a worker process that dies leaves its cell failed and the manifest written."""
        class DyingWorkerPool:
            def __init__(self, max_workers):
                self.max_workers = max_workers

            def __enter__(self):
                return self

            def __exit__(self, *exc):
                return False

            def submit(self, fn, cell, exp):
                future = Future()
                if cell.index == 1:
                    future.set_exception(BrokenProcessPool("worker terminated abruptly"))
                else:
                    future.set_result(fn(cell, exp))
                return future

        config = make_config(tmp_path, workers=2)
        with patch('experiment.ProcessPoolExecutor', DyingWorkerPool):
            manifest = run_experiment(config)

        assert [c.index for c in manifest.failed_cells] == [1]
        assert "worker terminated abruptly" in manifest.failed_cells[0].error
        assert len(manifest.cells) == len(enumerate_cells(config))
        assert Config.load_manifest(config.manifest_file).failed_cells[0].index == 1


class TestAnalyzeManifest:
    """Test post-run analysis."""

    def test_outputs(self, tmp_path):
        """Test aggregate, optimal-xi and fit outputs of a small sweep."""
        config = make_config(tmp_path)
        run_experiment(config)
        gts = [write_groundtruth(p) for p in config.graph_paths()]

        report = analyze_manifest(config.manifest_file, gts)
        outdir = tmp_path / "run"

        aggregate = pd.read_csv(outdir / "aggregate.csv")
        assert len(aggregate) == 3
        assert list(aggregate["method"]) == ["mcmc-vqa", "mcmc-vqa", "vqe"]
        assert aggregate["mean_accuracy"].between(0, 1).all()
        assert len(pd.read_csv(outdir / "xi_optimum.csv")) == 2

        fits = json.loads((outdir / "fits.json").read_text())["fits"]
        assert [f["beta"] for f in fits] == [0.2, 0.8]
        assert fits[1]["pi_star_proxy"] == pytest.approx(4 * fits[0]["pi_star_proxy"])
        assert len(report.records) == 12

    def test_without_groundtruth_files(self, tmp_path):
        """Test missing ground truths are brute-forced."""
        config = make_config(tmp_path, include_baseline=False, n_seeds=1)
        run_experiment(config)
        report = analyze_manifest(config.manifest_file)
        assert all(0.0 <= r.accuracy <= 1.0 for r in report.records)

    def test_empty_manifest(self, tmp_path):
        """Test an empty manifest is rejected without writing outputs."""
        outdir = tmp_path / "run"
        outdir.mkdir()
        manifest_path = outdir / "manifest.json"
        manifest_path.write_text(Manifest(master_seed=0, config={}, cells=[]).model_dump_json())

        with pytest.raises(InvalidArgumentError):
            analyze_manifest(manifest_path)
        assert not (outdir / "aggregate.csv").exists()
        assert not (outdir / "fits.json").exists()

    def test_missing_summary_names_cell(self, tmp_path):
        """Test a missing cell file is reported with its cell index."""
        config = make_config(tmp_path)
        manifest = run_experiment(config)
        (tmp_path / "run" / manifest.cells[4].summary_file).unlink()

        with pytest.raises(CellIOError, match="cell 4"):
            analyze_manifest(config.manifest_file)
        assert not (tmp_path / "run" / "aggregate.csv").exists()

    def test_corrupt_summary_names_cell(self, tmp_path):
        """Test an unparsable cell summary is an I/O error naming the cell."""
        config = make_config(tmp_path)
        manifest = run_experiment(config)
        (tmp_path / "run" / manifest.cells[2].summary_file).write_text('{"final_loss": ')

        with pytest.raises(CellIOError, match="cell 2"):
            analyze_manifest(config.manifest_file)
        assert not (tmp_path / "run" / "aggregate.csv").exists()

    def test_corrupt_groundtruth(self, tmp_path):
        """Test ground-truth files that are not JSON or lack fields are invalid arguments."""
        path = tmp_path / "graph_000.groundtruth.json"
        path.write_text("not json")
        with pytest.raises(InvalidArgumentError):
            load_groundtruth(path)

        path.write_text(json.dumps({"graph_id": "graph_000", "e_min": -1.0}))
        with pytest.raises(InvalidArgumentError):
            load_groundtruth(path)
