"""Full Pauli-basis state tomography by linear inversion plus projection to the physical set."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.linalg import hadamard

from .sampling import (
    CountTable,
    NoiseModel,
    apply_readout_noise,
    depolarize,
    mitigate_readout,
    sample_counts,
    setting_rng,
)
from .state import DensityMatrix, RealState

__all__ = [
    "PauliSetting",
    "enumerate_settings",
    "setting_probabilities",
    "measure_setting",
    "measure_all",
    "pauli_expectations",
    "linear_inversion",
    "project_physical",
    "simplex_projection",
    "fqst",
]

_ROTATIONS = {
    "Z": np.eye(2, dtype=complex),
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    # H S^dagger maps the +1 eigenstate of Y to |0>
    "Y": np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2),
}


@dataclass(frozen=True)
class PauliSetting:
    """Measurement basis per qubit, ``bases[q]`` for physical qubit ``q``."""

    bases: str

    def __post_init__(self):
        if not self.bases or set(self.bases) - set("XYZ"):
            raise ValueError(f"invalid Pauli setting {self.bases!r}")

    @property
    def key(self) -> str:
        return "P" + self.bases

    @property
    def n_qubits(self) -> int:
        return len(self.bases)


def enumerate_settings(n_qubits: int) -> list[PauliSetting]:
    """All ``3**n`` settings in lexicographic order (X < Y < Z)."""
    return [PauliSetting("".join(b)) for b in itertools.product("XYZ", repeat=n_qubits)]


def setting_probabilities(state: RealState, setting: PauliSetting) -> np.ndarray:
    n = state.n_qubits
    if setting.n_qubits != n:
        raise ValueError("setting and state disagree on the number of qubits")
    psi = state.amplitudes.astype(complex).reshape((2,) * n)
    for q, b in enumerate(setting.bases):
        if b != "Z":
            psi = np.moveaxis(np.tensordot(_ROTATIONS[b], psi, axes=([1], [q])), 0, q)
    probs = np.abs(psi.reshape(-1)) ** 2
    return probs / probs.sum()


def measure_setting(
    state: RealState,
    setting: PauliSetting,
    shots: int,
    noise: NoiseModel | None = None,
    seed=0,
    n_gates: int = 0,
) -> CountTable:
    """Rotate into ``setting``, then sample with optional white noise and readout flips."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    probs = setting_probabilities(state, setting)
    if noise is not None:
        probs = depolarize(probs, noise.white_noise_weight(n_gates))
    table = sample_counts(probs, shots, rng, setting)
    if noise is not None:
        table = apply_readout_noise(table, noise, rng)
    return table


def measure_all(
    state: RealState,
    shots: int,
    noise: NoiseModel | None = None,
    seed: int = 0,
    n_gates: int = 0,
    stream: tuple[int, ...] = (),
):
    """Tables for every Pauli setting, setting ``i`` sampled from stream ``(seed, *stream, i)``."""
    return {
        s.key: measure_setting(state, s, shots, noise, setting_rng(seed, *stream, i), n_gates)
        for i, s in enumerate(enumerate_settings(state.n_qubits))
    }


def pauli_expectations(tables, n_qubits: int) -> np.ndarray:
    """Estimated ``<P>`` for every Pauli string, indexed ``[x_mask, z_mask]``.

    ``tables`` maps setting keys (or PauliSettings) to CountTables or to outcome
    distributions. A string is averaged over every setting that agrees with it on
    its support.
    """
    n = n_qubits
    dim = 1 << n
    settings = enumerate_settings(n)
    lookup = {}
    for key, val in (tables.items() if isinstance(tables, Mapping) else ((t.key, t) for t in tables)):
        key = key if isinstance(key, str) else key.key
        lookup[key] = val.frequencies() if isinstance(val, CountTable) else np.asarray(val, dtype=float)
    missing = [s.key for s in settings if s.key not in lookup]
    if missing:
        raise ValueError(f"missing {len(missing)} Pauli settings, e.g. {missing[0]}")

    freqs = np.stack([lookup[s.key] for s in settings])
    if freqs.shape[1] != dim:
        raise ValueError("count table dimension does not match n_qubits")
    # parity[s, S] = sum_j f_s(j) (-1)^{|j & S|}
    parity = freqs @ hadamard(dim).T

    # per-qubit codes of each setting: 0 -> X, 1 -> Y, 2 -> Z
    codes = np.array([[("XYZ".index(b)) for b in s.bases] for s in settings])
    masks = np.arange(dim)
    total = np.zeros((dim, dim))
    count = np.zeros((dim, dim))
    bit_of_q = [1 << (n - 1 - q) for q in range(n)]
    in_support = np.array([[(S & b) != 0 for b in bit_of_q] for S in masks])  # (dim, n)
    # x part: X or Y on support; z part: Z or Y on support
    is_x = (codes == 0) | (codes == 1)
    is_z = (codes == 2) | (codes == 1)
    weights = np.array(bit_of_q)
    x_mask = (in_support[None, :, :] & is_x[:, None, :]) @ weights
    z_mask = (in_support[None, :, :] & is_z[:, None, :]) @ weights
    np.add.at(total, (x_mask.ravel(), z_mask.ravel()), parity.ravel())
    np.add.at(count, (x_mask.ravel(), z_mask.ravel()), 1)
    return total / np.maximum(count, 1)


def linear_inversion(tables, n_qubits: int | None = None) -> DensityMatrix:
    """Assemble ``rho = 2**-n sum_P <P> P`` from Pauli-setting statistics."""
    if n_qubits is None:
        first = next(iter(tables.values())) if isinstance(tables, Mapping) else tables[0]
        n_qubits = first.n_qubits if isinstance(first, CountTable) else int(np.asarray(first).size).bit_length() - 1
    n = n_qubits
    dim = 1 << n
    expect = pauli_expectations(tables, n)
    expect[0, 0] = 1.0
    cols = np.arange(dim)
    z_sign = hadamard(dim)  # z_sign[z, c] = (-1)^{|z & c|}
    rho = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        # sum_z <X^x Z^z-type string> i^{|x&z|} (-1)^{|z&c|}
        phase = 1j ** (np.array([bin(x & z).count("1") for z in range(dim)]) % 4)
        col_vals = (expect[x] * phase) @ z_sign  # indexed by column c
        rho[cols ^ x, cols] += col_vals
    rho /= dim
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho)


def simplex_projection(values: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    v = np.asarray(values, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    r = idx[cond][-1]
    theta = css[cond][-1] / r
    return np.clip(v - theta, 0.0, None)


def project_physical(rho: DensityMatrix) -> DensityMatrix:
    """Closest unit-trace PSD matrix in Frobenius norm (eigenvalue water-filling)."""
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    herm = (mat + mat.conj().T) / 2
    evals, evecs = np.linalg.eigh(herm)
    lam = simplex_projection(evals)
    return DensityMatrix((evecs * lam) @ evecs.conj().T)


def fqst(state: RealState, shots: int, noise: NoiseModel | None = None, seed: int = 0, n_gates: int = 0,
         assignment=None) -> DensityMatrix:
    """Measure every Pauli setting of ``state`` and return the projected estimate."""
    tables = measure_all(state, shots, noise, seed, n_gates)
    if assignment is not None:
        tables = {k: mitigate_readout(t, assignment) for k, t in tables.items()}
    return project_physical(linear_inversion(tables, state.n_qubits))
