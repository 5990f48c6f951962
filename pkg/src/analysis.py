"""
Accuracy metrics, ensemble aggregation and the mixing-time exponential fit.
"""
import logging
import math
from typing import Callable, Hashable, Iterable, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from errors import InvalidArgumentError
from graph import GroundTruth

logger = logging.getLogger(__name__)


class AccuracyRecord(BaseModel):
    """Final accuracy of one run."""
    graph_id: str
    seed: int
    method: str = "mcmc-vqa"
    beta: Optional[float] = None
    xi: Optional[float] = None
    eta: float
    final_loss: float
    alpha: float = Field(ge=0.0, le=1.0, description="Normalized error")
    accuracy: float = Field(ge=0.0, le=1.0)

    @model_validator(mode='after')
    def _complementary(self):
        if abs(self.alpha + self.accuracy - 1.0) > 1e-12:
            raise ValueError("accuracy must equal 1 - alpha")
        return self

    @classmethod
    def from_final_loss(cls, final_loss: float, gt: GroundTruth, **fields) -> "AccuracyRecord":
        alpha = normalized_error(final_loss, gt)
        return cls(final_loss=final_loss, alpha=alpha, accuracy=1.0 - alpha, **fields)


class AccuracySummary(BaseModel):
    mean_accuracy: float
    std: float
    n: int


class MixingFit(BaseModel):
    """alpha(t) = amplitude * exp(-rate * t), fitted in the log domain."""
    amplitude: float
    rate: float
    residual: float

    def predict(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return self.amplitude * np.exp(-self.rate * np.asarray(t, dtype=float))


def normalized_error(final_loss: float, gt: GroundTruth) -> float:
    """
    (final_loss - e_min) / (e_max - e_min), clamped to [0, 1].

    Raises:
        InvalidArgumentError: If the ground truth is degenerate (e_max == e_min)
    """
    span = gt.e_max - gt.e_min
    if not span > 0:
        raise InvalidArgumentError(f"Degenerate ground truth: e_min={gt.e_min}, e_max={gt.e_max}")
    return min(1.0, max(0.0, (final_loss - gt.e_min) / span))


GroupKey = Union[Sequence[str], Callable[[AccuracyRecord], Hashable]]


def _key_function(group_key: GroupKey) -> Callable[[AccuracyRecord], tuple]:
    if callable(group_key):
        return lambda r: group_key(r)
    fields = tuple(group_key)
    return lambda r: tuple(getattr(r, f) for f in fields)


def _sortable(key) -> tuple:
    # None sorts first; keeps mixed (None, float) columns orderable
    parts = key if isinstance(key, tuple) else (key,)
    return tuple((v is not None, v if v is not None else 0) for v in parts)


def aggregate_accuracy(records: Sequence[AccuracyRecord], group_key: GroupKey) -> dict:
    """
    Population mean and standard deviation of accuracy per group.

    Args:
        records: Accuracy records
        group_key: Field names (e.g. ('method', 'beta')) or a key function

    Returns:
        {key: AccuracySummary}, ordered by key
    """
    if not records:
        raise InvalidArgumentError("Cannot aggregate an empty record list")

    key_of = _key_function(group_key)
    groups: dict = {}
    for record in records:
        groups.setdefault(key_of(record), []).append(record.accuracy)

    result = {}
    for key in sorted(groups, key=_sortable):
        values = np.array(groups[key], dtype=float)
        result[key] = AccuracySummary(
            mean_accuracy=float(values.mean()),
            std=float(values.std()),
            n=int(values.shape[0])
        )
    return result


def select_best_learning_rate(records: Sequence[AccuracyRecord]) -> list[AccuracyRecord]:
    """
    Keep, per (method, beta, xi), only the records of the eta with the highest mean accuracy.

    Ties go to the smaller eta.
    """
    by_eta = aggregate_accuracy(records, ("method", "beta", "xi", "eta"))
    best: dict = {}
    for (method, beta, xi, eta), summary in by_eta.items():
        group = (method, beta, xi)
        if group not in best or summary.mean_accuracy > best[group][1]:
            best[group] = (eta, summary.mean_accuracy)

    chosen = {(g[0], g[1], g[2], eta) for g, (eta, _) in best.items()}
    for group, (eta, mean) in best.items():
        logger.info(f"Best learning rate for {group}: eta={eta} (mean accuracy {mean:.4f})")
    return [r for r in records if (r.method, r.beta, r.xi, r.eta) in chosen]


def optimal_xi_by_beta(summaries: dict) -> dict:
    """
    The xi with the highest mean accuracy for every beta.

    Args:
        summaries: {(method, beta, xi): AccuracySummary}; non-MCMC rows are ignored

    Returns:
        {beta: (xi, mean_accuracy)}, ordered by beta
    """
    best: dict = {}
    for (method, beta, xi), summary in summaries.items():
        if method != "mcmc-vqa" or beta is None:
            continue
        if beta not in best or summary.mean_accuracy > best[beta][1]:
            best[beta] = (xi, summary.mean_accuracy)
    return {beta: best[beta] for beta in sorted(best)}


def fit_mixing_curve(points: Iterable[tuple[float, float]]) -> MixingFit:
    """
    Fit alpha_t = a * exp(-b t) by linear regression of log alpha_t on t.

    Raises:
        InvalidArgumentError: With fewer than 3 points or any alpha_t <= 0
    """
    data = np.array(list(points), dtype=float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise InvalidArgumentError("Mixing fit needs at least 3 (t, alpha) points")
    t, alpha = data[:, 0], data[:, 1]
    if np.any(alpha <= 0):
        raise InvalidArgumentError("Mixing fit needs strictly positive alpha values")

    log_alpha = np.log(alpha)
    slope, intercept = np.polyfit(t, log_alpha, 1)
    residual = float(np.sum((log_alpha - (intercept + slope * t)) ** 2))
    return MixingFit(amplitude=float(math.exp(intercept)), rate=float(-slope), residual=residual)


def pi_star_proxy(gt: GroundTruth, beta: float) -> float:
    """beta * (e_max - e_min) / 2, standing in for ln(1 / sqrt(pi*))."""
    if beta <= 0:
        raise InvalidArgumentError(f"beta must be positive, got {beta}")
    return beta * (gt.e_max - gt.e_min) / 2


def best_so_far_curve(losses: Sequence[float], initial: Optional[float] = None) -> np.ndarray:
    """Running minimum of a loss sequence, optionally seeded with the starting loss."""
    curve = np.minimum.accumulate(np.asarray(losses, dtype=float))
    if initial is not None and curve.shape[0]:
        curve = np.minimum(curve, initial)
    return curve


def _gap_matrix(loss_curves: Sequence[Sequence[float]], gts: Sequence[GroundTruth]) -> np.ndarray:
    if len(loss_curves) != len(gts):
        raise InvalidArgumentError("Need one ground truth per loss curve")
    if not loss_curves:
        raise InvalidArgumentError("No loss curves given")
    length = min(len(c) for c in loss_curves)
    rows = []
    for curve, gt in zip(loss_curves, gts):
        best = best_so_far_curve(curve[:length])
        rows.append([normalized_error(loss, gt) for loss in best])
    return np.array(rows, dtype=float)


def ensemble_error_curve(loss_curves: Sequence[Sequence[float]], gts: Sequence[GroundTruth]) -> np.ndarray:
    """Mean best-so-far normalized error per epoch across runs (truncated to the shortest run)."""
    return _gap_matrix(loss_curves, gts).mean(axis=0)


def fraction_within_gap(
    loss_curves: Sequence[Sequence[float]],
    gts: Sequence[GroundTruth],
    epoch: int,
    threshold: float
) -> float:
    """Fraction of runs whose best-so-far normalized error at `epoch` is <= threshold."""
    gaps = _gap_matrix(loss_curves, gts)
    if not 0 <= epoch < gaps.shape[1]:
        raise InvalidArgumentError(f"Epoch {epoch} outside 0..{gaps.shape[1] - 1}")
    return float(np.mean(gaps[:, epoch] <= threshold))
