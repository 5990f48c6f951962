"""
Plain VQE training: finite-difference gradients and gradient-descent epochs.

Used standalone as the baseline and as the closing sequence of MCMC-VQA.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from errors import InvalidArgumentError
from graph import WeightedGraph
from qsim import EXACT, Ansatz, LossStatistics, ShotCount, as_parameters, is_exact, loss_statistics, prepare_state

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GradientStatistics:
    """Central-difference gradient and the per-component variance loss_variance / 2 eps^2."""
    gradient: np.ndarray
    gradient_variance: float
    epsilon: float


@dataclass(frozen=True)
class VqeRecord:
    epoch: int
    loss: float
    theta: Optional[np.ndarray] = None


@dataclass
class VqeTrace:
    """Per-epoch losses of a VQE run."""
    records: list[VqeRecord] = field(default_factory=list)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records], dtype=float)

    def append(self, loss: float, theta: Optional[np.ndarray] = None):
        self.records.append(VqeRecord(epoch=len(self.records), loss=loss, theta=theta))

    def to_frame(self) -> pd.DataFrame:
        """Rows (epoch, loss, phase='vqe')."""
        return pd.DataFrame({
            "epoch": [r.epoch for r in self.records],
            "loss": [r.loss for r in self.records],
            "phase": ["vqe"] * len(self.records),
        }, columns=["epoch", "loss", "phase"])


def finite_diff_gradient(
    g: WeightedGraph,
    a: Ansatz,
    theta: Sequence[float],
    epsilon: float,
    m_shots: ShotCount = EXACT,
    rng: Optional[np.random.Generator] = None,
    center: Optional[LossStatistics] = None
) -> GradientStatistics:
    """
    Central-difference gradient from 2K shifted circuit evaluations.

    Args:
        center: Statistics already measured at theta; only needed for the
            variance in finite-M mode and measured here when omitted

    Raises:
        InvalidArgumentError: If epsilon <= 0 or theta has the wrong length
    """
    if epsilon <= 0:
        raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
    angles = as_parameters(theta, a.parameter_count)

    gradient = np.empty(angles.shape[0])
    for k in range(angles.shape[0]):
        shifted = angles.copy()
        shifted[k] = angles[k] + epsilon
        plus = loss_statistics(g, prepare_state(a, shifted), m_shots, rng).loss
        shifted[k] = angles[k] - epsilon
        minus = loss_statistics(g, prepare_state(a, shifted), m_shots, rng).loss
        gradient[k] = (plus - minus) / (2 * epsilon)

    if is_exact(m_shots):
        variance = 0.0
    else:
        if center is None:
            center = loss_statistics(g, prepare_state(a, angles), m_shots, rng)
        variance = center.loss_variance / (2 * epsilon ** 2)

    return GradientStatistics(gradient=gradient, gradient_variance=variance, epsilon=epsilon)


def vqe_epoch(theta: Sequence[float], grad: GradientStatistics, eta: float) -> np.ndarray:
    """One gradient-descent step theta - eta * gradient."""
    if eta <= 0:
        raise InvalidArgumentError(f"eta must be positive, got {eta}")
    angles = as_parameters(theta)
    if angles.shape != grad.gradient.shape:
        raise InvalidArgumentError(
            f"Parameter length {angles.shape[0]} does not match gradient length {grad.gradient.shape[0]}"
        )
    return angles - eta * grad.gradient


@dataclass
class LossLandscape:
    """Loss, statistics and gradients of one graph under one ansatz and shot mode."""
    graph: WeightedGraph
    ansatz: Ansatz
    epsilon: float = 1e-2
    m_shots: ShotCount = EXACT
    rng: Optional[np.random.Generator] = None

    def statistics(self, theta: Sequence[float]) -> LossStatistics:
        return loss_statistics(self.graph, prepare_state(self.ansatz, theta), self.m_shots, self.rng)

    def exact_loss(self, theta: Sequence[float]) -> float:
        return loss_statistics(self.graph, prepare_state(self.ansatz, theta), EXACT).loss

    def gradient(self, theta: Sequence[float], center: Optional[LossStatistics] = None) -> GradientStatistics:
        return finite_diff_gradient(
            self.graph, self.ansatz, theta, self.epsilon, self.m_shots, self.rng, center=center
        )


def random_initial_parameters(a: Ansatz, rng: np.random.Generator) -> np.ndarray:
    """Angles drawn uniformly from [0, 2 pi)."""
    return rng.uniform(0.0, 2 * np.pi, a.parameter_count)


def run_vqe(
    g: WeightedGraph,
    a: Ansatz,
    theta0: Sequence[float],
    eta: float,
    epsilon: float,
    n_epochs: int,
    m_shots: ShotCount = EXACT,
    rng: Optional[np.random.Generator] = None,
    keep_parameters: bool = False
) -> tuple[np.ndarray, VqeTrace]:
    """
    Run n_epochs of gradient descent from theta0.

    Each record holds the loss at the parameters the epoch's gradient is taken at.

    Returns:
        (final parameters, trace)
    """
    if n_epochs < 0:
        raise InvalidArgumentError(f"n_epochs must be non-negative, got {n_epochs}")

    landscape = LossLandscape(graph=g, ansatz=a, epsilon=epsilon, m_shots=m_shots, rng=rng)
    theta = as_parameters(theta0, a.parameter_count)
    trace = VqeTrace()

    for epoch in range(n_epochs):
        center = landscape.statistics(theta)
        grad = landscape.gradient(theta, center=center)
        trace.append(center.loss, theta.copy() if keep_parameters else None)
        theta = vqe_epoch(theta, grad, eta)

    if n_epochs:
        logger.debug(f"VQE finished {n_epochs} epochs, last recorded loss {trace.records[-1].loss:.6f}")
    return theta, trace
