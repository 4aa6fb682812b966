import numpy as np
import pytest

from converters.jordan_wigner import jordan_wigner
from extractors.fcidump import random_hamiltonian, write_fcidump
from simulators.statevector import State


@pytest.fixture
def small_hamiltonian():
    """2 spatial orbitals, 2 electrons: 4 qubits"""
    return random_hamiltonian(2, 2, seed=11)


@pytest.fixture
def medium_hamiltonian():
    """3 spatial orbitals, 2 electrons: 6 qubits"""
    return random_hamiltonian(3, 2, seed=5)


@pytest.fixture
def small_paulis(small_hamiltonian):
    return jordan_wigner(small_hamiltonian)


@pytest.fixture
def medium_paulis(medium_hamiltonian):
    return jordan_wigner(medium_hamiltonian)


@pytest.fixture
def fcidump_file(tmp_path, small_hamiltonian):
    path = tmp_path / 'small.FCIDUMP'
    path.write_text(write_fcidump(small_hamiltonian))
    return path


@pytest.fixture
def random_state():
    def make(n_qubits, seed=0):
        rng = np.random.default_rng(seed)
        psi = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
        return State(psi / np.linalg.norm(psi), n_qubits)
    return make
