"""Finite-shot sampling, readout noise, and tensor-product readout mitigation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .state import MeasurementSetting

__all__ = [
    "CountTable",
    "NoiseModel",
    "AssignmentMatrix",
    "TABLE1_READOUT",
    "TABLE1_TWO_QUBIT",
    "sample_counts",
    "apply_readout_noise",
    "depolarize",
    "mitigate_readout",
    "setting_rng",
]

# Per-qubit readout error and native two-qubit gate error of a 10-qubit chain
# (qubits Q0..Q9; the 2Q error of Q_i refers to the pair (Q_i, Q_{i+1})).
TABLE1_READOUT = (4.64e-3, 4.88e-3, 4.39e-3, 6.34e-3, 1.56e-2, 5.62e-3, 9.28e-3, 4.15e-3, 1.29e-2, 4.64e-3)
TABLE1_TWO_QUBIT = (2.74e-3, 2.69e-3, 3.02e-3, 3.35e-3, 3.35e-3, 3.48e-3, 5.54e-3, 3.42e-3, 3.65e-3)
TABLE1_READOUT_AVG = 7.24e-3
TABLE1_TWO_QUBIT_AVG = 3.47e-3

NEG_TOL = 1e-12


def setting_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for the stream ``(seed, *stream)``."""
    return np.random.default_rng([int(seed), *map(int, stream)])


def _setting_key(setting) -> str:
    return setting if isinstance(setting, str) else setting.key


@dataclass
class CountTable:
    """Shot counts of one measurement setting, stored densely over basis indices."""

    setting: object
    shots: int
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size & (counts.size - 1):
            raise ValueError("counts must be a 1-D array with power-of-two length")
        if counts.min() < 0:
            raise ValueError("counts must be non-negative")
        if int(counts.sum()) != int(self.shots):
            raise ValueError(f"counts sum to {counts.sum()} but shots = {self.shots}")
        self.counts = counts
        self.shots = int(self.shots)

    @property
    def n_qubits(self) -> int:
        return self.counts.size.bit_length() - 1

    @property
    def key(self) -> str:
        return _setting_key(self.setting)

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots

    def as_dict(self) -> dict[int, int]:
        nz = np.flatnonzero(self.counts)
        return {int(j): int(self.counts[j]) for j in nz}

    def to_json(self) -> dict:
        n = self.n_qubits
        return {
            "setting": self.key,
            "shots": self.shots,
            "counts": {format(j, f"0{n}b"): c for j, c in self.as_dict().items()},
        }

    @classmethod
    def from_json(cls, data: Union[dict, str]) -> "CountTable":
        if isinstance(data, str):
            data = json.loads(data)
        key = data["setting"]
        raw = data["counts"]
        if not raw:
            raise ValueError("count table has no outcomes")
        n = len(next(iter(raw)))
        counts = np.zeros(1 << n, dtype=np.int64)
        for bits, c in raw.items():
            if len(bits) != n:
                raise ValueError("inconsistent bitstring lengths")
            counts[int(bits, 2)] += int(c)
        if key.startswith("P"):
            from .fqst import PauliSetting

            setting = PauliSetting(key[1:])
        else:
            setting = MeasurementSetting.from_key(key)
        return cls(setting, int(data["shots"]), counts)


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit readout flips ``(p01, p10)`` plus an optional two-qubit gate error.

    ``p01`` is the probability of reading 1 when the qubit is in 0, ``p10`` the
    reverse. ``readout[q]`` belongs to physical qubit ``q``.
    """

    readout: tuple = ()
    two_qubit_depol: float | None = None

    def __post_init__(self):
        pairs = tuple((float(a), float(b)) for a, b in self.readout)
        for p in (x for pair in pairs for x in pair):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"readout probability {p} outside [0, 1]")
        if self.two_qubit_depol is not None and not 0.0 <= self.two_qubit_depol <= 1.0:
            raise ValueError("two-qubit error must lie in [0, 1]")
        object.__setattr__(self, "readout", pairs)

    @classmethod
    def noiseless(cls, n_qubits: int = 0) -> "NoiseModel":
        return cls(((0.0, 0.0),) * n_qubits)

    @classmethod
    def symmetric(cls, eps: Sequence[float], two_qubit_depol: float | None = None) -> "NoiseModel":
        return cls(tuple((e, e) for e in eps), two_qubit_depol)

    @classmethod
    def table1(cls, n_qubits: int, two_qubit: bool = True) -> "NoiseModel":
        """Calibration-table defaults for the first ``n_qubits`` qubits of the chain.

        Qubits past the tabulated ten reuse the chain average. The two-qubit rate is
        the mean over the ``n_qubits - 1`` adjacent pairs in use.
        """
        eps = [TABLE1_READOUT[q] if q < len(TABLE1_READOUT) else TABLE1_READOUT_AVG for q in range(n_qubits)]
        depol = None
        if two_qubit and n_qubits > 1:
            pairs = [TABLE1_TWO_QUBIT[q] if q < len(TABLE1_TWO_QUBIT) else TABLE1_TWO_QUBIT_AVG for q in range(n_qubits - 1)]
            depol = float(np.mean(pairs))
        return cls.symmetric(eps, depol)

    @classmethod
    def from_json(cls, data: Union[dict, str]) -> "NoiseModel":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(tuple(tuple(p) for p in data.get("readout", ())), data.get("two_qubit_depol"))

    def to_json(self) -> dict:
        return {"readout": [list(p) for p in self.readout], "two_qubit_depol": self.two_qubit_depol}

    def for_qubits(self, n_qubits: int) -> tuple:
        if not self.readout:
            return ((0.0, 0.0),) * n_qubits
        if len(self.readout) < n_qubits:
            raise ValueError(f"noise model covers {len(self.readout)} qubits, need {n_qubits}")
        return self.readout[:n_qubits]

    def is_trivial(self) -> bool:
        return all(a == 0 and b == 0 for a, b in self.readout) and not self.two_qubit_depol

    def white_noise_weight(self, n_gates: int) -> float:
        """Weight ``1 - (1 - eps_2q)**n_gates`` of the uniform component."""
        if not self.two_qubit_depol or n_gates <= 0:
            return 0.0
        return 1.0 - (1.0 - self.two_qubit_depol) ** n_gates


@dataclass(frozen=True)
class AssignmentMatrix:
    """Per-qubit column-stochastic confusion matrices ``M[observed, true]``."""

    matrices: tuple = field(default=())

    def __post_init__(self):
        mats = tuple(np.asarray(m, dtype=float) for m in self.matrices)
        for m in mats:
            if m.shape != (2, 2):
                raise ValueError("each assignment matrix must be 2x2")
            if np.any(m < 0) or not np.allclose(m.sum(axis=0), 1.0):
                raise ValueError("assignment matrix columns must be probability vectors")
        object.__setattr__(self, "matrices", mats)

    @classmethod
    def from_noise(cls, noise: NoiseModel, n_qubits: int) -> "AssignmentMatrix":
        return cls(tuple(np.array([[1 - p01, p10], [p01, 1 - p10]]) for p01, p10 in noise.for_qubits(n_qubits)))

    @classmethod
    def identity(cls, n_qubits: int) -> "AssignmentMatrix":
        return cls(tuple(np.eye(2) for _ in range(n_qubits)))

    @property
    def n_qubits(self) -> int:
        return len(self.matrices)

    def apply(self, probs: np.ndarray) -> np.ndarray:
        """Push a true outcome distribution through the confusion channel."""
        return _apply_per_qubit(probs, self.matrices)

    def inverse(self) -> tuple:
        inv = []
        for q, m in enumerate(self.matrices):
            if abs(np.linalg.det(m)) < 1e-12:
                raise np.linalg.LinAlgError(f"assignment matrix of qubit {q} is singular")
            inv.append(np.linalg.inv(m))
        return tuple(inv)


def _apply_per_qubit(vec: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    n = len(mats)
    t = np.asarray(vec, dtype=float).reshape((2,) * n)
    for q, m in enumerate(mats):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def _clean_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1:
        raise ValueError("probabilities must be a vector")
    if p.min() < -NEG_TOL:
        raise ValueError(f"negative probability {p.min()!r}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"probabilities sum to {total!r}")
    return p / total


def sample_counts(probs, shots: int, seed, setting=None) -> CountTable:
    """Multinomial draw of ``shots`` outcomes.

    ``seed`` may be an int or an existing Generator.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = _clean_probs(probs)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    counts = rng.multinomial(int(shots), p)
    return CountTable(setting if setting is not None else MeasurementSetting.z(), int(shots), counts)


def depolarize(probs, weight: float) -> np.ndarray:
    """Mix an outcome distribution with the uniform one."""
    p = np.asarray(probs, dtype=float)
    if weight <= 0:
        return p
    return (1.0 - weight) * p + weight / p.size


def apply_readout_noise(counts: CountTable, noise: NoiseModel, seed) -> CountTable:
    """Flip each recorded bit of every shot independently with its qubit's error rate."""
    n = counts.n_qubits
    rates = noise.for_qubits(n)
    if all(a == 0 and b == 0 for a, b in rates):
        return CountTable(counts.setting, counts.shots, counts.counts.copy())
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    outcomes = np.repeat(np.arange(counts.counts.size), counts.counts)
    for q, (p01, p10) in enumerate(rates):
        mask = 1 << (n - 1 - q)
        bit = (outcomes & mask) != 0
        flip_p = np.where(bit, p10, p01)
        flips = rng.random(outcomes.size) < flip_p
        outcomes = outcomes ^ (flips * mask)
    return CountTable(counts.setting, counts.shots, np.bincount(outcomes, minlength=counts.counts.size))


def mitigate_readout(counts, assign: AssignmentMatrix) -> np.ndarray:
    """Invert the tensor-product confusion channel on an empirical distribution.

    Accepts a CountTable or a frequency vector. Negative quasi-probabilities are
    clipped to zero and the result renormalized.
    """
    freqs = counts.frequencies() if isinstance(counts, CountTable) else np.asarray(counts, dtype=float)
    n = freqs.size.bit_length() - 1
    if assign.n_qubits != n:
        raise ValueError(f"assignment matrix covers {assign.n_qubits} qubits, data has {n}")
    quasi = _apply_per_qubit(freqs, assign.inverse())
    p = np.clip(quasi, 0.0, None)
    total = p.sum()
    if total <= 0:
        raise ValueError("mitigated distribution has no positive mass")
    return p / total
