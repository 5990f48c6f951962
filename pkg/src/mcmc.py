"""
MCMC-VQA: a Metropolis-Hastings chain over circuit parameters.

The target is the unnormalized Boltzmann weight exp(-beta * loss); candidates
come from a noisy gradient step, and the acceptance ratio includes the
forward and reverse proposal densities. After t_mc Markovian epochs a short
VQE sequence is run from the best parameters visited.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence

import numpy as np
import pandas as pd

from config import ChainConfig
from errors import InvalidConfigurationError
from graph import WeightedGraph
from qsim import Ansatz, as_parameters
from vqe import LossLandscape, run_vqe

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2 * math.pi)

TRACE_COLUMNS = ["epoch", "phase", "loss", "proposed_loss", "log_accept_ratio", "accepted"]


@dataclass(frozen=True)
class EndpointEvaluation:
    """Everything the acceptance ratio needs at one parameter vector."""
    theta: np.ndarray
    loss: float
    loss_variance: float
    gradient: np.ndarray


@dataclass(frozen=True)
class StepRecord:
    epoch: int
    phase: Literal["markov", "closing"]
    loss: float
    proposed_loss: Optional[float] = None
    log_accept_ratio: Optional[float] = None
    accepted: Optional[bool] = None


@dataclass
class ChainTrace:
    """Per-epoch record of a run and the best state of its Markov phase."""
    records: list[StepRecord] = field(default_factory=list)
    theta_min: Optional[np.ndarray] = None
    lambda_min: float = math.inf

    def markov_records(self) -> list[StepRecord]:
        return [r for r in self.records if r.phase == "markov"]

    @property
    def accepted_fraction(self) -> Optional[float]:
        markov = self.markov_records()
        if not markov:
            return None
        return sum(1 for r in markov if r.accepted) / len(markov)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[r.epoch, r.phase, r.loss, r.proposed_loss, r.log_accept_ratio, r.accepted] for r in self.records],
            columns=TRACE_COLUMNS
        )


Evaluator = Callable[[np.ndarray], EndpointEvaluation]


def evaluate_endpoint(landscape: LossLandscape, theta: Sequence[float]) -> EndpointEvaluation:
    """Measure loss, loss variance and gradient once at theta."""
    angles = as_parameters(theta, landscape.ansatz.parameter_count)
    center = landscape.statistics(angles)
    grad = landscape.gradient(angles, center=center)
    return EndpointEvaluation(
        theta=angles,
        loss=center.loss,
        loss_variance=center.loss_variance,
        gradient=grad.gradient
    )


def boltzmann_log_weight(loss: float, beta: float) -> float:
    """Unnormalized log target -beta * loss."""
    return -beta * loss


def proposal_variance(endpoint: EndpointEvaluation, cfg: ChainConfig) -> float:
    """xi^2 + eta^2 * loss_variance / 2 eps^2 for proposals made from endpoint."""
    return cfg.xi ** 2 + cfg.eta ** 2 * endpoint.loss_variance / (2 * cfg.epsilon ** 2)


def draw_candidate(current: EndpointEvaluation, cfg: ChainConfig, rng: np.random.Generator) -> np.ndarray:
    """theta' = theta - eta * gradient + xi * z, z standard normal."""
    noise = rng.standard_normal(current.theta.shape[0])
    return current.theta - cfg.eta * current.gradient + cfg.xi * noise


def proposal_log_density(source: EndpointEvaluation, to_theta: Sequence[float], cfg: ChainConfig) -> float:
    """
    Log density of proposing to_theta from source.

    Each component of (source.theta - to_theta) is Gaussian with mean
    eta * gradient and variance proposal_variance(source). The reverse
    density is this function with the endpoints exchanged.

    Raises:
        InvalidConfigurationError: If the proposal variance is zero
    """
    variance = proposal_variance(source, cfg)
    if not variance > 0:
        raise InvalidConfigurationError(
            "Proposal variance is zero; xi must be positive (or shots finite) for a proposal density"
        )
    residual = source.theta - np.asarray(to_theta, dtype=float) - cfg.eta * source.gradient
    k = residual.shape[0]
    return float(-0.5 * k * (LOG_2PI + math.log(variance)) - np.dot(residual, residual) / (2 * variance))


def acceptance_log_ratio(current: EndpointEvaluation, candidate: EndpointEvaluation, cfg: ChainConfig) -> float:
    """log min(1, P(theta') G(theta | theta') / (P(theta) G(theta' | theta)))."""
    forward = boltzmann_log_weight(current.loss, cfg.beta) + proposal_log_density(current, candidate.theta, cfg)
    backward = boltzmann_log_weight(candidate.loss, cfg.beta) + proposal_log_density(candidate, current.theta, cfg)
    log_ratio = backward - forward
    if math.isnan(log_ratio):
        return -math.inf
    return min(0.0, log_ratio)


def mh_step(
    state: EndpointEvaluation,
    cfg: ChainConfig,
    rng: np.random.Generator,
    evaluate: Evaluator,
    epoch: int = 0
) -> tuple[EndpointEvaluation, StepRecord]:
    """
    One Metropolis-Hastings epoch.

    The candidate is evaluated once; on acceptance that evaluation becomes the
    next state, on rejection the input state is returned unchanged.
    """
    candidate = evaluate(draw_candidate(state, cfg, rng))
    log_ratio = acceptance_log_ratio(state, candidate, cfg)
    u = rng.random()
    accepted = u < math.exp(log_ratio)

    next_state = candidate if accepted else state
    record = StepRecord(
        epoch=epoch,
        phase="markov",
        loss=next_state.loss,
        proposed_loss=candidate.loss,
        log_accept_ratio=log_ratio,
        accepted=accepted
    )
    return next_state, record


def run_mcmc_vqa(
    g: WeightedGraph,
    a: Ansatz,
    theta0: Sequence[float],
    cfg: ChainConfig,
    rng: np.random.Generator
) -> tuple[np.ndarray, ChainTrace]:
    """
    Run t_mc Markovian epochs then t_close VQE epochs from theta_min.

    theta_min is the earliest lowest-loss state among theta0 and every
    post-decision state of the Markov phase.

    Returns:
        (final parameters, trace covering both phases)
    """
    landscape = LossLandscape(graph=g, ansatz=a, epsilon=cfg.epsilon, m_shots=cfg.m_shots, rng=rng)

    def evaluate(theta: np.ndarray) -> EndpointEvaluation:
        return evaluate_endpoint(landscape, theta)

    state = evaluate(theta0)
    trace = ChainTrace(theta_min=state.theta.copy(), lambda_min=state.loss)

    for epoch in range(cfg.t_mc):
        state, record = mh_step(state, cfg, rng, evaluate, epoch=epoch)
        trace.records.append(record)
        if state.loss < trace.lambda_min:
            trace.lambda_min = state.loss
            trace.theta_min = state.theta.copy()

    if cfg.t_mc:
        logger.debug(
            f"Markov phase done: lambda_min={trace.lambda_min:.6f}, "
            f"accepted {trace.accepted_fraction:.1%} of {cfg.t_mc} proposals"
        )

    theta, closing = run_vqe(
        g, a, trace.theta_min, cfg.closing_eta, cfg.epsilon, cfg.t_close, cfg.m_shots, rng
    )
    for r in closing.records:
        trace.records.append(StepRecord(epoch=cfg.t_mc + r.epoch, phase="closing", loss=r.loss))

    return theta, trace
