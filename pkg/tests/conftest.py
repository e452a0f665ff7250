"""Shared fixtures and independent dense oracles."""

import numpy as np
import pytest
from hypothesis import settings

from hrftomo.state import PrepCircuit, RealState, prepare_ansatz, random_ansatz

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_all(mats):
    out = np.eye(1)
    for m in mats:
        out = np.kron(out, m)
    return out


def pauli_matrix(label: str) -> np.ndarray:
    """Dense Pauli string; the first character acts on qubit 0 (most significant bit)."""
    return kron_all([PAULI[c] for c in label])


def ansatz_state(n_qubits: int, seed: int, n_layers: int = 4) -> RealState:
    return prepare_ansatz(random_ansatz(n_qubits, np.random.default_rng(seed), n_layers))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_real_state(rng, n_qubits: int) -> RealState:
    return RealState.from_amplitudes(rng.normal(size=1 << n_qubits))


__all__ = ["kron_all", "pauli_matrix", "ansatz_state", "random_real_state", "PrepCircuit", "H", "X", "Y", "Z", "I2"]
