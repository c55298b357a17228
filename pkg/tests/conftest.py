"""
Pytest configuration and shared fixtures for liepool tests.
"""
from functools import reduce

import numpy as np
import pytest

from liepool import model
from liepool.lie_engine import close
from liepool.pauli_core import PauliSum, PauliTerm
from liepool.sim import StateVector

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Seed subset that keeps optimizer-heavy tests quick
FAST_SEEDS = tuple(range(8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def dense_pauli():
    """Kronecker-product oracle; character j is qubit j, qubit 0 least significant."""
    def build(label: str) -> np.ndarray:
        return reduce(np.kron, [PAULI_MATRICES[char] for char in reversed(label)])
    return build


@pytest.fixture
def random_label():
    def build(rng, n_qubits: int) -> str:
        return "".join(rng.choice(list("IXYZ"), size=n_qubits))
    return build


@pytest.fixture
def random_hamiltonian(random_label):
    """Hermitian PauliSum with real coefficients on random strings."""
    def build(rng, n_qubits: int, n_terms: int = 8) -> PauliSum:
        terms = [PauliTerm.from_string(random_label(rng, n_qubits), rng.uniform(-1, 1)) for _ in range(n_terms)]
        return PauliSum.from_terms(n_qubits, terms)
    return build


@pytest.fixture
def random_state():
    def build(rng, n_qubits: int) -> StateVector:
        amplitudes = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
        return StateVector.from_amplitudes(amplitudes, normalize=True)
    return build


@pytest.fixture(scope="session")
def model_algebra():
    """Closure of the three kappa generators of the two-electron example."""
    return close(model.generators())


@pytest.fixture
def fast_seeds():
    return FAST_SEEDS
