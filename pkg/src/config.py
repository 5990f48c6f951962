"""
Configuration models and experiment file storage for the MCMC-VQA simulator.
"""
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from errors import CellIOError, InvalidConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_LEARNING_RATES = [0.01, 0.05, 0.1, 0.5, 1.0]


def _check_shots(value):
    if value == "exact":
        return value
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValueError(f"m_shots must be a positive integer or 'exact', got {value!r}")
    return value


class AnsatzConfig(BaseModel):
    """Circuit layout."""
    n_layers: int = Field(default=1, ge=1, description="Number of RY + CZ layers")
    connectivity: Literal["linear", "ring", "none"] = Field(
        default="linear", description="CZ entangler layout"
    )


class ChainConfig(BaseModel):
    """Hyperparameters of one MCMC-VQA run."""
    beta: float = Field(default=0.2, gt=0, description="Inverse temperature")
    xi: float = Field(default=0.5, ge=0, description="Proposal noise scale")
    eta: float = Field(default=0.1, gt=0, description="Learning rate")
    epsilon: float = Field(default=1e-2, gt=0, description="Finite-difference shift")
    m_shots: Union[int, Literal["exact"]] = Field(default="exact", description="Measurements per observable")
    t_mc: int = Field(default=400, ge=0, description="Markovian epochs")
    t_close: int = Field(default=100, ge=0, description="Closing VQE epochs")
    eta_close: Optional[float] = Field(default=None, gt=0, description="Closing learning rate (defaults to eta)")

    @field_validator('m_shots')
    @classmethod
    def _check_m_shots(cls, value):
        return _check_shots(value)

    @model_validator(mode='after')
    def _noise_required_for_chain(self):
        if self.t_mc > 0 and self.xi <= 0:
            raise ValueError("xi must be positive when t_mc > 0")
        return self

    @property
    def closing_eta(self) -> float:
        return self.eta_close if self.eta_close is not None else self.eta


class ExperimentConfig(BaseModel):
    """A sweep over graphs, seeds and hyperparameters."""
    graphs: list[str] = Field(default_factory=list, description="Graph JSON files")
    ansatz: AnsatzConfig = Field(default_factory=AnsatzConfig)
    method: Literal["vqe", "mcmc-vqa"] = Field(default="mcmc-vqa")
    include_baseline: bool = Field(default=False, description="Add plain-VQE cells on the same graphs and seeds")
    betas: list[float] = Field(default_factory=lambda: [0.2])
    xis: list[float] = Field(default_factory=lambda: [0.5])
    etas: list[float] = Field(default_factory=lambda: list(DEFAULT_LEARNING_RATES))
    epsilon: float = Field(default=1e-2, gt=0)
    m_shots: Union[int, Literal["exact"]] = Field(default="exact")
    t_mc: int = Field(default=400, ge=0)
    t_close: int = Field(default=100, ge=0)
    eta_close: Optional[float] = Field(default=None, gt=0)
    vqe_epochs: int = Field(default=100, ge=0, description="Epochs of plain-VQE cells")
    n_seeds: int = Field(default=20, ge=1, description="Random initializations per graph")
    master_seed: int = Field(default=0, ge=0, lt=2 ** 64)
    outdir: str = Field(default="results")
    workers: int = Field(default=1, ge=1)

    @field_validator('m_shots')
    @classmethod
    def _check_m_shots(cls, value):
        return _check_shots(value)

    @model_validator(mode='after')
    def _check_grids(self):
        if not self.etas:
            raise ValueError("etas must not be empty")
        if self.method == "mcmc-vqa":
            if not self.betas or not self.xis:
                raise ValueError("betas and xis must not be empty for mcmc-vqa")
            for beta in self.betas:
                if beta <= 0:
                    raise ValueError(f"beta must be positive, got {beta}")
            for xi in self.xis:
                if xi < 0 or (xi == 0 and self.t_mc > 0):
                    raise ValueError(f"xi must be positive when t_mc > 0, got {xi}")
        for eta in self.etas:
            if eta <= 0:
                raise ValueError(f"eta must be positive, got {eta}")
        return self


class CellRecord(BaseModel):
    """One (graph x seed x hyperparameter) run of an experiment."""
    index: int
    graph_id: str
    graph_path: str
    graph_index: int
    seed_index: int
    method: Literal["vqe", "mcmc-vqa"]
    beta: Optional[float] = None
    xi: Optional[float] = None
    eta: float
    cell_seed: int
    init_seed: int
    trace_file: str
    summary_file: str
    status: Literal["pending", "ok", "failed"] = "pending"
    error: Optional[str] = None


class Manifest(BaseModel):
    """Index of every cell of a run and the files it produced."""
    created_at: datetime = Field(default_factory=datetime.now)
    master_seed: int
    config: dict
    cells: list[CellRecord] = Field(default_factory=list)

    @property
    def failed_cells(self) -> list[CellRecord]:
        return [c for c in self.cells if c.status == "failed"]


def validated(model_cls, **data):
    """Build a pydantic model, reporting violations as InvalidConfigurationError."""
    try:
        return model_cls(**data)
    except ValidationError as e:
        raise InvalidConfigurationError(str(e)) from e


class Config:
    """Main configuration manager for one experiment."""

    def __init__(self, config_file: Optional[Path] = None, experiment: Optional[ExperimentConfig] = None):
        """
        Initialize configuration manager.

        Args:
            config_file: Experiment JSON file; relative graph paths resolve against its directory
            experiment: In-memory configuration, used when no file is given
        """
        self.config_file = Path(config_file) if config_file is not None else None
        self.base_dir = self.config_file.parent if self.config_file is not None else Path.cwd()

        if self.config_file is not None:
            self._load_config()
        else:
            self.experiment = experiment if experiment is not None else ExperimentConfig()

    @property
    def output_dir(self) -> Path:
        return Path(self.experiment.outdir)

    @property
    def manifest_file(self) -> Path:
        return self.output_dir / "manifest.json"

    def _load_config(self):
        """Load configuration from file."""
        if not self.config_file.exists():
            raise InvalidConfigurationError(f"Config file not found: {self.config_file}")
        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidConfigurationError(f"Config file {self.config_file} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise InvalidConfigurationError(f"Config file {self.config_file} is not a JSON object")
        self.experiment = validated(ExperimentConfig, **data)

    def update_hyperparameters(self, **kwargs):
        """Apply overrides (e.g. from CLI flags); None values are ignored."""
        data = self.experiment.model_dump()
        for key, value in kwargs.items():
            if value is None:
                continue
            if key not in data:
                raise InvalidConfigurationError(f"Unknown configuration field '{key}'")
            data[key] = value
        self.experiment = validated(ExperimentConfig, **data)

    def graph_paths(self) -> list[Path]:
        """Resolved graph files; each must exist."""
        paths = []
        for name in self.experiment.graphs:
            path = Path(name)
            if not path.is_absolute():
                path = self.base_dir / path
            if not path.exists():
                raise InvalidConfigurationError(f"Graph file not found: {path}")
            paths.append(path)
        return paths

    def save_config_echo(self) -> Path:
        """Write the effective configuration into the output directory."""
        path = self.output_dir / "config.json"
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(self.experiment.model_dump(mode='json'), f, indent=2)
        except OSError as e:
            raise CellIOError(f"Cannot write {path}: {e}") from e
        return path

    def save_manifest(self, manifest: Manifest) -> Path:
        """Save run manifest."""
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            with open(self.manifest_file, 'w', encoding='utf-8') as f:
                json.dump(manifest.model_dump(mode='json'), f, indent=2)
        except OSError as e:
            raise CellIOError(f"Cannot write manifest {self.manifest_file}: {e}") from e
        return self.manifest_file

    @staticmethod
    def load_manifest(path: Path) -> Manifest:
        """Load a run manifest."""
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except OSError as e:
            raise CellIOError(f"Cannot read manifest {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise CellIOError(f"Manifest {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise CellIOError(f"Manifest {path} is not a JSON object")
        return validated(Manifest, **data)
