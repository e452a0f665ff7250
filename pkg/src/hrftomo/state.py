"""Real-valued statevectors, the Ry/CNOT preparation ansatz, and HRF measurement statistics.

Bit convention used throughout the package: qubit ``q`` of an ``n``-qubit register
controls bit ``n - 1 - q`` of the basis index, so qubit 0 is the most significant
bit and basis states are in lexicographic bitstring order. Reshaping an amplitude
vector to ``(2,) * n`` therefore puts qubit ``q`` on axis ``q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RealState",
    "PrepCircuit",
    "MeasurementSetting",
    "prepare_ansatz",
    "random_ansatz",
    "exact_probabilities",
    "hrf_settings",
    "to_density",
    "DensityMatrix",
]

NORM_TOL = 1e-10


@dataclass(frozen=True)
class RealState:
    """Normalized real amplitude vector of length ``2**n_qubits``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=float)
        if amps.ndim != 1 or amps.size < 2 or amps.size & (amps.size - 1):
            raise ValueError(f"amplitude vector length must be a power of two >= 2, got {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = float(amps @ amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (sum of squares = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = True) -> "RealState":
        amps = np.asarray(amplitudes, dtype=float)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("cannot normalize a zero vector")
            amps = amps / norm
        return cls(amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def __neg__(self) -> "RealState":
        return RealState(-self.amplitudes)


@dataclass(frozen=True)
class DensityMatrix:
    """Complex Hermitian matrix of a (possibly mixed) ``n``-qubit state."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] & (mat.shape[0] - 1):
            raise ValueError(f"density matrix must be square with power-of-two size, got {mat.shape}")
        object.__setattr__(self, "matrix", mat)

    @property
    def n_qubits(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    def is_physical(self, tol: float = 1e-9) -> bool:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=tol):
            return False
        if abs(np.trace(m) - 1.0) > tol:
            return False
        return bool(np.linalg.eigvalsh(m).min() >= -tol)

    def to_json(self) -> list:
        return [[[float(v.real), float(v.imag)] for v in row] for row in self.matrix]

    @classmethod
    def from_json(cls, data) -> "DensityMatrix":
        arr = np.asarray(data, dtype=float)
        return cls(arr[..., 0] + 1j * arr[..., 1])


@dataclass(frozen=True)
class PrepCircuit:
    """Hardware-efficient real ansatz.

    ``angles`` has shape ``(n_layers, n_qubits)``. Each layer is a column of Ry
    rotations followed by the CNOT ladder ``(q, q + 1)`` for ``q = 0 .. n - 2``,
    giving ``n_layers`` Ry columns and ``n_layers * (n - 1)`` CNOTs.
    """

    angles: np.ndarray
    entangler: str = field(default="cnot-ladder", compare=False)

    def __post_init__(self):
        angles = np.atleast_2d(np.asarray(self.angles, dtype=float))
        object.__setattr__(self, "angles", angles)

    @property
    def n_layers(self) -> int:
        return self.angles.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.angles.shape[1]

    @property
    def n_cnots(self) -> int:
        return self.n_layers * (self.n_qubits - 1)


@dataclass(frozen=True)
class MeasurementSetting:
    """Z-basis readout, optionally with a Hadamard on the qubit that controls index bit ``bit``."""

    bit: int | None = None

    @classmethod
    def z(cls) -> "MeasurementSetting":
        return cls(None)

    @classmethod
    def x(cls, k: int) -> "MeasurementSetting":
        if k < 0:
            raise ValueError("bit index must be non-negative")
        return cls(int(k))

    @property
    def key(self) -> str:
        return "Z" if self.bit is None else f"X{self.bit}"

    def qubit(self, n_qubits: int) -> int | None:
        """Physical qubit that receives the Hadamard, or None for the Z setting."""
        if self.bit is None:
            return None
        if self.bit >= n_qubits:
            raise ValueError(f"bit {self.bit} out of range for {n_qubits} qubits")
        return n_qubits - self.bit - 1

    @classmethod
    def from_key(cls, key: str) -> "MeasurementSetting":
        if key == "Z":
            return cls.z()
        if key.startswith("X") and key[1:].isdigit():
            return cls.x(int(key[1:]))
        raise ValueError(f"unrecognized measurement setting {key!r}")


def hrf_settings(n_qubits: int) -> list[MeasurementSetting]:
    """The ``n_qubits + 1`` settings HRF samples: Z first, then X on bits 0..n-1."""
    return [MeasurementSetting.z()] + [MeasurementSetting.x(k) for k in range(n_qubits)]


def _apply_ry(psi: np.ndarray, qubit: int, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    a0 = np.take(psi, 0, axis=qubit)
    a1 = np.take(psi, 1, axis=qubit)
    return np.stack([c * a0 - s * a1, s * a0 + c * a1], axis=qubit)


def _apply_cnot(psi: np.ndarray, control: int, target: int) -> np.ndarray:
    out = psi.copy()
    idx = [slice(None)] * psi.ndim
    idx[control] = 1
    sub = psi[tuple(idx)]
    # target axis shifts down by one once the control axis is indexed away
    t_axis = target - 1 if target > control else target
    out[tuple(idx)] = np.flip(sub, axis=t_axis)
    return out


def prepare_ansatz(circuit: PrepCircuit) -> RealState:
    """Simulate the ansatz on ``|0...0>`` without materializing the unitary."""
    angles = circuit.angles
    if not np.all(np.isfinite(angles)):
        raise ValueError("ansatz angles must be finite")
    n = circuit.n_qubits
    if n < 1:
        raise ValueError("ansatz needs at least one qubit")
    psi = np.zeros((2,) * n)
    psi[(0,) * n] = 1.0
    for layer in angles:
        for q, theta in enumerate(layer):
            psi = _apply_ry(psi, q, theta)
        for q in range(n - 1):
            psi = _apply_cnot(psi, q, q + 1)
    amps = psi.reshape(-1)
    # renormalize away accumulated rounding
    return RealState(amps / np.linalg.norm(amps))


def random_ansatz(n_qubits: int, rng: np.random.Generator, n_layers: int = 4) -> PrepCircuit:
    """Ansatz with every angle drawn uniformly from [-pi/2, pi/2]."""
    return PrepCircuit(rng.uniform(-np.pi / 2, np.pi / 2, size=(n_layers, n_qubits)))


def hadamard_amplitudes(amplitudes: np.ndarray, bit: int) -> np.ndarray:
    """Amplitudes after a Hadamard on the qubit controlling index bit ``bit``.

    Pairs ``(j, j + 2**bit)`` with bit ``bit`` of ``j`` clear map to
    ``((a + b) / sqrt 2, (a - b) / sqrt 2)``.
    """
    amps = np.asarray(amplitudes)
    blocks = amps.reshape(-1, 2, 1 << bit)
    a, b = blocks[:, 0, :], blocks[:, 1, :]
    out = np.stack([a + b, a - b], axis=1) / np.sqrt(2.0)
    return out.reshape(-1)


def exact_probabilities(state: RealState, setting: MeasurementSetting) -> np.ndarray:
    """Outcome distribution of ``setting`` on ``state`` in the infinite-shot limit."""
    amps = state.amplitudes
    if setting.bit is None:
        return amps**2
    setting.qubit(state.n_qubits)  # range check
    return hadamard_amplitudes(amps, setting.bit) ** 2


def to_density(state: RealState) -> DensityMatrix:
    psi = state.amplitudes
    return DensityMatrix(np.outer(psi, psi).astype(complex))
