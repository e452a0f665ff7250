"""Hadamard random forest reconstruction and its analytic error bounds."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .forest import Forest, HypercubeGraph, SpanningTree, generate_forest, popcount
from .sampling import AssignmentMatrix, CountTable, mitigate_readout
from .state import RealState

__all__ = [
    "EdgeSignOracle",
    "ErrorBudget",
    "Reconstruction",
    "default_n_tree",
    "edge_sign",
    "tree_signs",
    "forest_signs",
    "majority_vote",
    "reconstruct",
    "reconstruct_from_probs",
    "choose_root",
    "edge_error_bound",
    "tree_error_bound",
    "voting_error_bound",
    "budget",
    "error_budget",
    "minimal_overlap",
]


def default_n_tree(n_qubits: int) -> int:
    return 11 if n_qubits <= 5 else 111


@lru_cache(maxsize=None)
def _layers(n_qubits: int) -> tuple[np.ndarray, ...]:
    weight = popcount(np.arange(1 << n_qubits))
    return tuple(np.flatnonzero(weight == w) for w in range(1, n_qubits + 1))


def _sgn(x: np.ndarray) -> np.ndarray:
    # sgn(0) := +1
    return np.where(x >= 0, 1, -1).astype(np.int8)


@dataclass
class EdgeSignOracle:
    """Z-basis probabilities plus the ``n`` single-Hadamard distributions.

    ``x_probs[k]`` is the distribution measured with a Hadamard on the qubit that
    controls index bit ``k``.
    """

    z_probs: np.ndarray
    x_probs: Sequence[np.ndarray]

    def __post_init__(self):
        self.z_probs = np.asarray(self.z_probs, dtype=float)
        self.x_probs = [np.asarray(p, dtype=float) for p in self.x_probs]
        dim = self.z_probs.size
        if dim < 2 or dim & (dim - 1):
            raise ValueError("probability vectors must have power-of-two length")
        if len(self.x_probs) != self.n_qubits:
            raise ValueError(f"need {self.n_qubits} Hadamard settings, got {len(self.x_probs)}")
        for p in [self.z_probs, *self.x_probs]:
            if p.shape != (dim,):
                raise ValueError("dimension mismatch between settings")
            if abs(p.sum() - 1.0) > 1e-8:
                raise ValueError(f"distribution sums to {p.sum()!r}")

    @property
    def n_qubits(self) -> int:
        return self.z_probs.size.bit_length() - 1

    def edge_table(self) -> np.ndarray:
        """``table[k, j]`` is the inferred relative sign across edge ``(j, j ^ 2**k)``.

        Both endpoints of an edge hold the same entry.
        """
        n, dim = self.n_qubits, self.z_probs.size
        table = np.empty((n, dim), dtype=np.int8)
        for k in range(n):
            z = self.z_probs.reshape(-1, 2, 1 << k)
            x = self.x_probs[k].reshape(-1, 2, 1 << k)
            s = _sgn(2 * x[:, 0, :] - z[:, 0, :] - z[:, 1, :])
            table[k] = np.stack([s, s], axis=1).reshape(-1)
        return table


def edge_sign(oracle: EdgeSignOracle, j: int, k: int) -> int:
    """Relative sign of amplitudes ``j`` and ``j + 2**k`` (bit ``k`` of ``j`` must be clear)."""
    if j >> k & 1:
        raise ValueError(f"bit {k} of {j} is set")
    partner = j | (1 << k)
    val = 2 * oracle.x_probs[k][j] - oracle.z_probs[j] - oracle.z_probs[partner]
    return 1 if val >= 0 else -1


def forest_signs(oracle: EdgeSignOracle, forest: Sequence[SpanningTree], root: int = 0) -> np.ndarray:
    """Per-tree sign vectors, shape ``(n_tree, 2**n)``.

    With ``root != 0`` every tree is relabeled by ``j -> j ^ root`` so that its
    root lands on node ``root``; the sign at ``root`` is then +1.
    """
    table = oracle.edge_table()
    n, dim = oracle.n_qubits, table.shape[1]
    forest = Forest.from_trees(forest)
    if forest.n_qubits != n:
        raise ValueError(f"trees over {forest.n_qubits} qubits used with {n}-qubit data")
    parents, labels = forest.parent, forest.label
    orig = np.arange(dim) ^ root
    signs = np.ones((len(forest), dim), dtype=np.int8)
    for layer in _layers(n):
        lab = labels[:, layer]
        rel = table[lab, orig[layer]]
        up = np.take_along_axis(signs, parents[:, layer], axis=1)
        signs[:, layer] = rel * up
    # tree node i stands for basis index i ^ root
    return signs[:, orig]


def tree_signs(oracle: EdgeSignOracle, tree: SpanningTree) -> np.ndarray:
    """Signs of one tree: product of inferred edge signs along each node's path to 0."""
    return forest_signs(oracle, [tree])[0]


def majority_vote(per_tree) -> np.ndarray:
    """Sign of the per-node vote sum; ties go to +1."""
    votes = np.asarray(per_tree, dtype=np.int64)
    if votes.ndim == 1:
        votes = votes[None, :]
    if votes.shape[0] == 0:
        raise ValueError("majority vote needs at least one sign vector")
    return _sgn(votes.sum(axis=0))


@dataclass
class Reconstruction:
    """Result of one HRF run, with phase timings in milliseconds."""

    state: RealState
    signs: np.ndarray
    root: int = 0
    timing_ms: dict = field(default_factory=dict)


def choose_root(z_probs: np.ndarray, policy="max", shots: float | None = None) -> int:
    """Root node for sign propagation.

    ``"max"`` roots every tree at the most probable basis state, ``"auto"`` keeps
    node 0 unless ``z_probs[0] < 10 / shots`` (or is zero), and an int is used as is.
    All trees share the edges leaving the root, so errors there are common to the
    whole forest and voting cannot remove them.
    """
    if policy == "max":
        return int(np.argmax(z_probs))
    if policy == "auto":
        threshold = 10.0 / shots if shots else 0.0
        if z_probs[0] > threshold and z_probs[0] > 0:
            return 0
        return int(np.argmax(z_probs))
    root = int(policy)
    if not 0 <= root < len(z_probs):
        raise ValueError(f"root {root} out of range")
    return root


def reconstruct_from_probs(
    z_probs,
    x_probs,
    n_tree: int | None = None,
    seed: int = 0,
    *,
    forest: Sequence[SpanningTree] | None = None,
    root="max",
    shots: float | None = None,
) -> Reconstruction:
    """Run the forest/vote/assemble stages on (empirical or exact) probabilities.

    Trees are relabeled by ``j -> j ^ r`` for the root ``r`` picked by
    :func:`choose_root`; ``root=0`` is the unmodified node-0 propagation.
    """
    t0 = time.perf_counter()
    oracle = EdgeSignOracle(z_probs, x_probs)
    n = oracle.n_qubits
    if forest is None:
        n_tree = default_n_tree(n) if n_tree is None else n_tree
        forest = generate_forest(HypercubeGraph(n), n_tree, seed)
    t1 = time.perf_counter()
    root = choose_root(oracle.z_probs, root, shots)
    signs = majority_vote(forest_signs(oracle, forest, root))
    t2 = time.perf_counter()
    amps = signs * np.sqrt(np.clip(oracle.z_probs, 0.0, None))
    state = RealState.from_amplitudes(amps)
    t3 = time.perf_counter()
    timing = {"forest": 1e3 * (t1 - t0), "voting": 1e3 * (t2 - t1), "assemble": 1e3 * (t3 - t2)}
    return Reconstruction(state, signs, root, timing)


def reconstruct(
    z_counts: CountTable,
    x_counts: Sequence[CountTable],
    n_tree: int | None = None,
    seed: int = 0,
    *,
    assignment: AssignmentMatrix | None = None,
    forest: Sequence[SpanningTree] | None = None,
    root="max",
) -> RealState:
    """Reconstruct a real state from one Z table and ``n`` Hadamard tables.

    ``x_counts`` may be in any order; each table is matched to its bit via its
    setting. With ``assignment`` the readout channel is inverted first.
    """
    n = z_counts.n_qubits
    if z_counts.key != "Z":
        raise ValueError(f"first table must be the Z setting, got {z_counts.key}")
    by_key = {t.key: t for t in x_counts}
    missing = [f"X{k}" for k in range(n) if f"X{k}" not in by_key]
    if missing:
        raise ValueError(f"missing Hadamard settings: {', '.join(missing)}")
    if len(x_counts) != n:
        raise ValueError(f"expected {n} Hadamard tables, got {len(x_counts)}")
    tables = [z_counts] + [by_key[f"X{k}"] for k in range(n)]
    if any(t.n_qubits != n for t in tables):
        raise ValueError("count tables disagree on the number of qubits")
    if assignment is not None:
        probs = [mitigate_readout(t, assignment) for t in tables]
    else:
        probs = [t.frequencies() for t in tables]
    rec = reconstruct_from_probs(
        probs[0], probs[1:], n_tree, seed, forest=forest, root=root, shots=z_counts.shots
    )
    return rec.state


# ---------------------------------------------------------------- error bounds


def edge_error_bound(n_samp: float, amp_product: float) -> float:
    """Hoeffding bound ``exp(-2 N m**2)`` on a wrong relative sign, ``m = |psi_j psi_j'|``."""
    return math.exp(-2.0 * n_samp * float(amp_product) ** 2)


def tree_error_bound(p_e: float, L: int) -> float:
    """Probability that an odd number of ``L`` independent edges, each wrong w.p. ``p_e``, flip."""
    if not 0.0 <= p_e <= 1.0:
        raise ValueError("p_e must be a probability")
    return (1.0 - (1.0 - 2.0 * p_e) ** L) / 2.0


def voting_error_bound(p_j: float, n_tree: int) -> float:
    """Hoeffding bound on a wrong majority over ``n_tree`` trees with per-tree error ``p_j``."""
    if not 0.0 <= p_j < 0.5:
        raise ValueError(f"p_j = {p_j} >= 1/2 makes the voting bound vacuous")
    return math.exp(-2.0 * n_tree * (0.5 - p_j) ** 2)


def budget(delta: float, m: float, L: int, p_j: float) -> tuple[int, int]:
    """Samples per setting and trees needed for a node-error fraction ``delta``."""
    if m == 0:
        raise ValueError("zero minimal overlap: no finite sample budget")
    if not 0.0 <= p_j < 0.5:
        raise ValueError(f"p_j = {p_j} >= 1/2: majority voting cannot help")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    n_samp = math.ceil(math.log(L / delta) / (2.0 * m * m))
    n_tree = math.ceil(math.log(1.0 / delta) / (2.0 * (0.5 - p_j) ** 2))
    return max(n_samp, 1), max(n_tree, 1)


def minimal_overlap(state: RealState) -> float:
    """``min |psi_j psi_{j + 2**k}|`` over all hypercube edges."""
    amps = np.abs(state.amplitudes)
    best = np.inf
    for k in range(state.n_qubits):
        pairs = amps.reshape(-1, 2, 1 << k)
        best = min(best, float((pairs[:, 0, :] * pairs[:, 1, :]).min()))
    return best


@dataclass
class ErrorBudget:
    p_e: float
    p_j: float
    delta: float
    m: float
    L: int
    n_samp_required: int
    n_tree_required: int


def error_budget(delta: float, m: float, L: int) -> ErrorBudget:
    """Full chain: sample budget -> edge bound -> tree bound -> tree budget."""
    n_samp, _ = budget(delta, m, L, 0.0)
    p_e = edge_error_bound(n_samp, m)
    p_j = tree_error_bound(p_e, L)
    _, n_tree = budget(delta, m, L, p_j)
    return ErrorBudget(p_e, p_j, delta, m, L, n_samp, n_tree)
