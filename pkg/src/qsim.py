"""
Dense statevector simulation of the RY/CZ layered ansatz and its Ising observables.

Amplitude layout is little-endian: bit k of the basis index is qubit k.
"""
import json
import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Union

import numpy as np

from errors import InvalidArgumentError
from graph import WeightedGraph

logger = logging.getLogger(__name__)

EXACT = "exact"

ShotCount = Union[int, Literal["exact"]]


def is_exact(m_shots: ShotCount) -> bool:
    return m_shots == EXACT


@dataclass(frozen=True)
class Statevector:
    """2^n complex amplitudes; value semantics, gates return new instances."""
    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise InvalidArgumentError(f"n_qubits must be positive, got {self.n_qubits}")
        amplitudes = np.array(self.amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << self.n_qubits,):
            raise InvalidArgumentError(
                f"Expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {amplitudes.shape}"
            )
        amplitudes.flags.writeable = False
        object.__setattr__(self, 'amplitudes', amplitudes)

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        """|0...0>."""
        amplitudes = np.zeros(1 << n_qubits, dtype=np.complex128)
        amplitudes[0] = 1.0
        return cls(amplitudes, n_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_json(self) -> str:
        """Debug dump as a JSON array of [re, im] pairs."""
        return json.dumps([[float(a.real), float(a.imag)] for a in self.amplitudes])


@dataclass(frozen=True)
class Ansatz:
    """Alternating layers of RY rotations and CZ entanglers."""
    n_qubits: int
    entangler_pairs: tuple[tuple[int, int], ...]
    n_layers: int = 1
    rotation_axis: str = "y"

    def __post_init__(self):
        if self.n_qubits < 1:
            raise InvalidArgumentError(f"n_qubits must be positive, got {self.n_qubits}")
        if self.n_layers < 1:
            raise InvalidArgumentError(f"n_layers must be positive, got {self.n_layers}")
        if self.rotation_axis != "y":
            raise InvalidArgumentError("Only y-axis rotations are supported")
        pairs = tuple((int(a), int(b)) for a, b in self.entangler_pairs)
        for a, b in pairs:
            if a == b or not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise InvalidArgumentError(f"Invalid entangler pair ({a}, {b}) for {self.n_qubits} qubits")
        object.__setattr__(self, 'entangler_pairs', pairs)

    @property
    def parameter_count(self) -> int:
        return self.n_qubits * self.n_layers

    @classmethod
    def build(cls, n_qubits: int, n_layers: int = 1, connectivity: str = "linear") -> "Ansatz":
        """
        Build an ansatz with a named entangler layout.

        Args:
            n_qubits: Number of qubits (one per graph vertex)
            n_layers: Number of RY+CZ layers
            connectivity: 'linear' (i, i+1), 'ring' (linear plus (n-1, 0)) or 'none'
        """
        if connectivity == "linear":
            pairs = [(i, i + 1) for i in range(n_qubits - 1)]
        elif connectivity == "ring":
            pairs = [(i, i + 1) for i in range(n_qubits - 1)]
            if n_qubits > 2:
                pairs.append((n_qubits - 1, 0))
        elif connectivity == "none":
            pairs = []
        else:
            raise InvalidArgumentError(f"Unknown connectivity '{connectivity}'")
        return cls(n_qubits=n_qubits, entangler_pairs=tuple(pairs), n_layers=n_layers)


def as_parameters(theta: Sequence[float], expected: Optional[int] = None) -> np.ndarray:
    """Validate a parameter vector: finite float entries, optional length check."""
    angles = np.array(theta, dtype=float).reshape(-1)
    if expected is not None and angles.shape[0] != expected:
        raise InvalidArgumentError(f"Expected {expected} parameters, got {angles.shape[0]}")
    if not np.all(np.isfinite(angles)):
        raise InvalidArgumentError("Parameter vector contains non-finite entries")
    return angles


def _check_qubit(s: Statevector, qubit: int):
    if not 0 <= qubit < s.n_qubits:
        raise InvalidArgumentError(f"Qubit index {qubit} out of range for {s.n_qubits} qubits")


def apply_ry(s: Statevector, qubit: int, angle: float) -> Statevector:
    """Apply exp(-i angle Y / 2) to one qubit."""
    _check_qubit(s, qubit)
    c, sn = np.cos(angle / 2), np.sin(angle / 2)

    # View as (high, bit, low) so the middle axis is the target qubit
    psi = s.amplitudes.reshape(-1, 2, 1 << qubit)
    out = np.empty_like(psi)
    out[:, 0, :] = c * psi[:, 0, :] - sn * psi[:, 1, :]
    out[:, 1, :] = sn * psi[:, 0, :] + c * psi[:, 1, :]
    return Statevector(out.reshape(-1), s.n_qubits)


def apply_cz(s: Statevector, q1: int, q2: int) -> Statevector:
    """Negate amplitudes where both qubits are 1."""
    _check_qubit(s, q1)
    _check_qubit(s, q2)
    if q1 == q2:
        raise InvalidArgumentError(f"CZ needs two distinct qubits, got {q1} twice")

    indices = np.arange(s.amplitudes.shape[0])
    both = ((indices >> q1) & 1).astype(bool) & ((indices >> q2) & 1).astype(bool)
    out = s.amplitudes.copy()
    out[both] = -out[both]
    return Statevector(out, s.n_qubits)


def prepare_state(a: Ansatz, theta: Sequence[float]) -> Statevector:
    """
    Run the ansatz on |0...0>.

    Parameter k*n_qubits + q is the RY angle of qubit q in layer k.
    """
    angles = as_parameters(theta, a.parameter_count)
    state = Statevector.zero(a.n_qubits)
    for layer in range(a.n_layers):
        offset = layer * a.n_qubits
        for q in range(a.n_qubits):
            state = apply_ry(state, q, angles[offset + q])
        for q1, q2 in a.entangler_pairs:
            state = apply_cz(state, q1, q2)
    return state


def expectation_zz(s: Statevector, i: int, j: int) -> float:
    """<Z_i Z_j>, clipped to [-1, 1] against rounding."""
    _check_qubit(s, i)
    _check_qubit(s, j)
    if i == j:
        raise InvalidArgumentError(f"ZZ expectation needs two distinct qubits, got {i} twice")

    indices = np.arange(s.amplitudes.shape[0])
    parity = 1 - 2 * (((indices >> i) ^ (indices >> j)) & 1)
    value = float(np.dot(s.probabilities(), parity))
    return min(1.0, max(-1.0, value))


@dataclass(frozen=True)
class LossStatistics:
    """
    Loss value and its measurement statistics.

    term_means are unweighted <ZZ> values (exact) or their estimates (finite M);
    term_variances follow w^2 (1 - mean^2); loss_variance is Σ term_variances / M,
    and zero in exact mode.
    """
    loss: float
    term_means: np.ndarray
    term_variances: np.ndarray
    loss_variance: float
    m_shots: ShotCount


def loss_statistics(
    g: WeightedGraph,
    s: Statevector,
    m_shots: ShotCount = EXACT,
    rng: Optional[np.random.Generator] = None
) -> LossStatistics:
    """
    Evaluate the Ising loss of a state, exactly or as a finite-M estimate.

    In finite-M mode each term mean is drawn from the CLT surrogate
    N(mu, (1 - mu^2) / M), clamped to [-1, 1], so that the weighted term has
    variance w^2 (1 - mu^2) / M. Variances are then recomputed from the estimates.

    Raises:
        InvalidArgumentError: If m_shots < 1, or no rng is given in finite-M mode
    """
    if g.n_vertices > s.n_qubits:
        raise InvalidArgumentError(f"Graph has {g.n_vertices} vertices but state has {s.n_qubits} qubits")

    weights = g.weights
    mu = np.array([expectation_zz(s, a, b) for a, b, _ in g.edges], dtype=float)

    if is_exact(m_shots):
        loss = float(np.dot(weights, mu))
        term_variances = weights ** 2 * (1.0 - mu ** 2)
        return LossStatistics(
            loss=loss,
            term_means=mu,
            term_variances=term_variances,
            loss_variance=0.0,
            m_shots=EXACT
        )

    if not isinstance(m_shots, (int, np.integer)) or m_shots < 1:
        raise InvalidArgumentError(f"m_shots must be a positive integer or 'exact', got {m_shots!r}")
    if rng is None:
        raise InvalidArgumentError("Finite-M sampling requires a random generator")

    spread = np.sqrt(np.clip(1.0 - mu ** 2, 0.0, None) / m_shots)
    q = np.clip(mu + spread * rng.standard_normal(mu.shape[0]), -1.0, 1.0)
    term_variances = weights ** 2 * (1.0 - q ** 2)
    return LossStatistics(
        loss=float(np.dot(weights, q)),
        term_means=q,
        term_variances=term_variances,
        loss_variance=float(term_variances.sum() / m_shots),
        m_shots=int(m_shots)
    )
