"""State properties computed from exact or reconstructed states."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import hadamard

from .sampling import NoiseModel
from .state import DensityMatrix, RealState, to_density

__all__ = [
    "BipartiteSplit",
    "PathIndexState",
    "fidelity",
    "state_fidelity",
    "partial_transpose",
    "log_negativity",
    "pauli_expectation_table",
    "stabilizer_entropy",
    "circle_path",
    "overlap",
    "swap_test",
    "swap_test_gate_count",
    "property_report",
]


def _matrix(rho) -> np.ndarray:
    if isinstance(rho, RealState):
        return to_density(rho).matrix
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


def _psd_sqrt(mat: np.ndarray, tol: float) -> np.ndarray:
    evals, evecs = np.linalg.eigh((mat + mat.conj().T) / 2)
    if evals.min() < -tol:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {evals.min():.3g})")
    return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T


def fidelity(rho, sigma, tol: float = 1e-8) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Evaluated as the squared trace norm of ``sqrt(rho) sqrt(sigma)``, which keeps
    round-off eigenvalues of rank-deficient inputs from entering at first order.
    Accepts DensityMatrix, RealState, or raw arrays.
    """
    a, b = _matrix(rho), _matrix(sigma)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    sv = np.linalg.svd(_psd_sqrt(a, tol) @ _psd_sqrt(b, tol), compute_uv=False)
    return float(min(1.0, sv.sum() ** 2))


def state_fidelity(a: RealState, b: RealState) -> float:
    """``|<a|b>|**2`` for pure real states."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    return float(np.dot(a.amplitudes, b.amplitudes) ** 2)


@dataclass(frozen=True)
class BipartiteSplit:
    """Subsystem A is the first ``n_a`` qubits (the most significant index bits)."""

    n_qubits: int
    n_a: int

    def __post_init__(self):
        if not 0 < self.n_a < self.n_qubits:
            raise ValueError("both subsystems must be non-empty")

    @classmethod
    def half(cls, n_qubits: int) -> "BipartiteSplit":
        return cls(n_qubits, math.ceil(n_qubits / 2))

    @property
    def subsystem_a_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n_a))


def partial_transpose(mat: np.ndarray, split: BipartiteSplit) -> np.ndarray:
    dim_a = 1 << split.n_a
    dim_b = 1 << (split.n_qubits - split.n_a)
    t = np.asarray(mat).reshape(dim_a, dim_b, dim_a, dim_b)
    return t.transpose(2, 1, 0, 3).reshape(dim_a * dim_b, dim_a * dim_b)


def log_negativity(rho, split: BipartiteSplit | None = None) -> float:
    """``log2`` of the trace norm of the partial transpose over subsystem A."""
    mat = _matrix(rho)
    n = mat.shape[0].bit_length() - 1
    split = split or BipartiteSplit.half(n)
    if split.n_qubits != n:
        raise ValueError("split does not match the state size")
    pt = partial_transpose(mat, split)
    trace_norm = np.abs(np.linalg.eigvalsh((pt + pt.conj().T) / 2)).sum()
    return float(max(0.0, np.log2(trace_norm)))


def pauli_expectation_table(state: RealState) -> np.ndarray:
    """Real-state Pauli expectations up to phase, ``T[x, z] = sum_c psi[c ^ x] psi[c] (-1)**|z & c|``.

    ``<P_xz> = i**|x & z| * T[x, z]``; entries with odd ``|x & z|`` (odd number of
    Y factors) vanish for real states.
    """
    psi = state.amplitudes
    idx = np.arange(psi.size)
    shifted = psi[idx[:, None] ^ idx[None, :]] * psi[None, :]
    return shifted @ hadamard(psi.size)


def _odd_y_mask(dim: int) -> np.ndarray:
    idx = np.arange(dim)
    overlap_bits = idx[:, None] & idx[None, :]
    parity = np.zeros_like(overlap_bits)
    while np.any(overlap_bits):
        parity ^= overlap_bits & 1
        overlap_bits >>= 1
    return parity.astype(bool)


def stabilizer_entropy(state: RealState, alpha: float = 2.0, *, max_qubits: int = 8, skip_odd_y: bool = True) -> float:
    """Stabilizer Renyi entropy ``M_alpha`` summed over all ``4**n`` Pauli strings."""
    if alpha == 1:
        raise ValueError("alpha = 1 is the von Neumann limit and is not supported")
    n = state.n_qubits
    if n > max_qubits:
        raise ValueError(f"{n} qubits exceeds max_qubits={max_qubits} (cost grows as 4**n)")
    moments = np.abs(pauli_expectation_table(state)) ** (2 * alpha)
    if skip_odd_y:
        moments = moments[~_odd_y_mask(state.dim)]
    total = moments.sum() / state.dim
    return float(max(0.0, np.log2(total) / (1 - alpha)))


@dataclass(frozen=True)
class PathIndexState:
    """Uniform superposition over lattice cells of a path, flattened row by row."""

    n_qubits: int
    side: int
    path: tuple
    state: RealState

    @property
    def indices(self) -> list[int]:
        return [r * self.side + c for r, c in self.path]


def circle_path(n_qubits: int) -> PathIndexState:
    """Ring of cells on the ``side x side`` lattice, ``side = 2**(n/2)``.

    A cell belongs to the disc if its centre lies within distance ``side / 2`` of
    the lattice centre; the path is the disc's boundary: disc cells with at least
    one 4-neighbour outside the disc or off the lattice. For 4 qubits this gives
    the eight cells ``{1, 2, 4, 7, 8, 11, 13, 14}``.
    """
    if n_qubits < 2 or n_qubits % 2:
        raise ValueError("circle path needs an even number of qubits >= 2")
    side = 1 << (n_qubits // 2)
    centre = (side - 1) / 2
    rows, cols = np.mgrid[0:side, 0:side]
    disc = (rows - centre) ** 2 + (cols - centre) ** 2 <= (side / 2) ** 2
    padded = np.pad(disc, 1, constant_values=False)
    interior = padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    ring = disc & ~interior
    cells = tuple((int(r), int(c)) for r, c in zip(*np.nonzero(ring)))
    amps = np.zeros(side * side)
    amps[ring.reshape(-1)] = 1.0 / np.sqrt(len(cells))
    return PathIndexState(n_qubits, side, cells, RealState.from_amplitudes(amps))


def overlap(state: RealState, index: PathIndexState | RealState) -> float:
    """``|<index|state>|**2``."""
    ref = index.state if isinstance(index, PathIndexState) else index
    return state_fidelity(state, ref)


def swap_test_gate_count(n_qubits: int, n_layers: int = 4) -> int:
    """Two-qubit gates in a SWAP test of two ansatz states.

    Two preparations of ``n_layers * (n - 1)`` CNOTs each plus ``n`` controlled
    SWAPs at 8 CNOTs apiece.
    """
    return 2 * n_layers * (n_qubits - 1) + 8 * n_qubits


def swap_test(
    state_a: RealState,
    state_b: RealState,
    shots: int,
    noise: NoiseModel | None = None,
    seed=0,
    n_gates: int | None = None,
) -> float:
    """Estimate ``|<a|b>|**2`` from simulated ancilla statistics of a SWAP test.

    The ancilla reads 0 with probability ``(1 + S) / 2``. Gate noise shrinks this
    toward 1/2 by the white-noise weight of ``n_gates`` two-qubit gates, and the
    ancilla readout uses the first qubit's error rates.
    """
    if state_a.dim != state_b.dim:
        raise ValueError("dimension mismatch")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    s = state_fidelity(state_a, state_b)
    p0 = (1 + s) / 2
    if noise is not None:
        gates = swap_test_gate_count(state_a.n_qubits) if n_gates is None else n_gates
        lam = noise.white_noise_weight(gates)
        p0 = (1 - lam) * p0 + lam / 2
        if noise.readout:
            p01, p10 = noise.readout[0]
            p0 = p0 * (1 - p01) + (1 - p0) * p10
    zeros = rng.binomial(int(shots), min(max(p0, 0.0), 1.0))
    return float(np.clip(2 * zeros / shots - 1, 0.0, 1.0))


def property_report(name: str, exact: float, reconstructed: float) -> dict:
    """Exact-vs-reconstructed row; the relative difference falls back to the absolute one at ``exact == 0``."""
    diff = abs(exact - reconstructed)
    rel = diff / abs(exact) if exact != 0 else diff
    return {"property": name, "exact": float(exact), "reconstructed": float(reconstructed), "relative_difference": float(rel)}
