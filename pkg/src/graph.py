"""
Weighted graphs for MaxCut, their Ising energies and an exhaustive ground-truth oracle.

Spin convention: vertex k of assignment index i (in ascending binary order) has
spin +1 when bit k of i is 0 and -1 when it is 1, matching qubit k in |0> / |1>.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from errors import CellIOError, InvalidArgumentError, ResourceLimitError

logger = logging.getLogger(__name__)

# Exhaustive search is limited to 2^24 assignments
MAX_BRUTE_FORCE_VERTICES = 24

# Assignments evaluated per vectorized block during enumeration
_ENUMERATION_BLOCK = 1 << 16


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph; also the term list of the Ising Hamiltonian."""
    n_vertices: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n_vertices < 1:
            raise InvalidArgumentError(f"n_vertices must be positive, got {self.n_vertices}")

        normalized = []
        seen = set()
        for edge in self.edges:
            a, b, w = int(edge[0]), int(edge[1]), float(edge[2])
            if not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices):
                raise InvalidArgumentError(f"Edge ({a}, {b}) references a vertex outside 0..{self.n_vertices - 1}")
            if a == b:
                raise InvalidArgumentError(f"Self-loop on vertex {a} is not allowed")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise InvalidArgumentError(f"Duplicate edge {key}")
            seen.add(key)
            normalized.append((a, b, w))
        object.__setattr__(self, 'edges', tuple(normalized))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.edges], dtype=float)

    @property
    def total_weight(self) -> float:
        total = 0.0
        for _, _, w in self.edges:
            total += w
        return total

    def to_dict(self) -> dict:
        """Serialize as {"n": int, "edges": [[a, b, w], ...]}."""
        return {"n": self.n_vertices, "edges": [[a, b, w] for a, b, w in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "WeightedGraph":
        try:
            return cls(
                n_vertices=int(data["n"]),
                edges=tuple((int(a), int(b), float(w)) for a, b, w in data["edges"])
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, InvalidArgumentError):
                raise
            raise InvalidArgumentError(f"Malformed graph document: {e}") from e


@dataclass(frozen=True)
class VertexAssignment:
    """A ±1 spin per vertex."""
    spins: tuple[int, ...]

    def __post_init__(self):
        spins = tuple(int(s) for s in self.spins)
        for s in spins:
            if s not in (-1, 1):
                raise InvalidArgumentError(f"Spins must be -1 or +1, got {s}")
        object.__setattr__(self, 'spins', spins)

    def __len__(self) -> int:
        return len(self.spins)

    def flipped(self) -> "VertexAssignment":
        """Global spin flip."""
        return VertexAssignment(tuple(-s for s in self.spins))

    @classmethod
    def from_index(cls, index: int, n_vertices: int) -> "VertexAssignment":
        """Assignment at position `index` of the ascending binary enumeration."""
        return cls(tuple(1 - 2 * ((index >> k) & 1) for k in range(n_vertices)))


@dataclass(frozen=True)
class GroundTruth:
    """Exact energy extrema of a graph's Ising Hamiltonian."""
    e_min: float
    e_max: float
    argmin: VertexAssignment

    def to_dict(self) -> dict:
        return {"e_min": self.e_min, "e_max": self.e_max, "argmin": list(self.argmin.spins)}

    @classmethod
    def from_dict(cls, data: dict) -> "GroundTruth":
        try:
            return cls(
                e_min=float(data["e_min"]),
                e_max=float(data["e_max"]),
                argmin=VertexAssignment(tuple(data["argmin"]))
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, InvalidArgumentError):
                raise
            raise InvalidArgumentError(f"Malformed ground truth document: {e}") from e


AssignmentLike = Union[VertexAssignment, Sequence[int]]


def _spins_for(g: WeightedGraph, x: AssignmentLike) -> tuple[int, ...]:
    assignment = x if isinstance(x, VertexAssignment) else VertexAssignment(tuple(x))
    if len(assignment) != g.n_vertices:
        raise InvalidArgumentError(
            f"Assignment has {len(assignment)} spins but graph has {g.n_vertices} vertices"
        )
    return assignment.spins


def generate_random_graph(n: int, m: int, rng: np.random.Generator) -> WeightedGraph:
    """
    Draw a graph with exactly m distinct edges and standard-normal weights.

    Edges are chosen uniformly without replacement from all n(n-1)/2 unordered
    pairs and stored in ascending pair order.

    Raises:
        InvalidArgumentError: If n < 1, m < 1 or m exceeds the number of pairs
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be positive, got {n}")
    n_pairs = n * (n - 1) // 2
    if m < 1 or m > n_pairs:
        raise InvalidArgumentError(f"m must be in 1..{n_pairs} for n={n}, got {m}")

    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    chosen = np.sort(rng.choice(n_pairs, size=m, replace=False))
    weights = rng.standard_normal(m)

    edges = tuple((pairs[i][0], pairs[i][1], float(w)) for i, w in zip(chosen, weights))
    return WeightedGraph(n_vertices=n, edges=edges)


def maxcut_objective(g: WeightedGraph, x: AssignmentLike) -> float:
    """Cut value ½ Σ w (1 - s_a s_b)."""
    spins = _spins_for(g, x)
    value = 0.0
    for a, b, w in g.edges:
        value += w * (1 - spins[a] * spins[b])
    return 0.5 * value


def ising_energy(g: WeightedGraph, x: AssignmentLike) -> float:
    """Classical Ising energy Σ w s_a s_b."""
    spins = _spins_for(g, x)
    energy = 0.0
    for a, b, w in g.edges:
        energy += w * (spins[a] * spins[b])
    return energy


def brute_force_extrema(g: WeightedGraph) -> GroundTruth:
    """
    Enumerate all 2^n assignments for the exact minimum and maximum energy.

    Ties for the minimum go to the lowest assignment index.

    Raises:
        ResourceLimitError: If the graph has more than MAX_BRUTE_FORCE_VERTICES vertices
    """
    n = g.n_vertices
    if n > MAX_BRUTE_FORCE_VERTICES:
        raise ResourceLimitError(
            f"Brute force limited to {MAX_BRUTE_FORCE_VERTICES} vertices, graph has {n}"
        )

    total = 1 << n
    e_min, e_max = np.inf, -np.inf
    argmin_index = 0

    for start in range(0, total, _ENUMERATION_BLOCK):
        indices = np.arange(start, min(start + _ENUMERATION_BLOCK, total), dtype=np.int64)
        spins = 1 - 2 * ((indices[None, :] >> np.arange(n, dtype=np.int64)[:, None]) & 1)

        # Same accumulation order as ising_energy so argmin reproduces e_min bit-exactly
        energies = np.zeros(indices.shape[0])
        for a, b, w in g.edges:
            energies += w * (spins[a] * spins[b])

        block_min = int(np.argmin(energies))
        if energies[block_min] < e_min:
            e_min = float(energies[block_min])
            argmin_index = int(indices[block_min])
        e_max = max(e_max, float(energies.max()))

    logger.debug(f"Brute force over {total} assignments: e_min={e_min}, e_max={e_max}")
    return GroundTruth(
        e_min=e_min,
        e_max=e_max,
        argmin=VertexAssignment.from_index(argmin_index, n)
    )


def save_graph(g: WeightedGraph, path: Path) -> Path:
    """Write a graph as JSON."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(g.to_dict(), f, indent=2)
    except OSError as e:
        raise CellIOError(f"Cannot write graph file {path}: {e}") from e
    return path


def load_graph(path: Path) -> WeightedGraph:
    """Read and validate a graph JSON file."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        raise CellIOError(f"Cannot read graph file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidArgumentError(f"Graph file {path} is not valid JSON: {e}") from e
    return WeightedGraph.from_dict(data)
