import numpy as np
import pytest

from converters.jordan_wigner import (ExcitationGenerator, annihilation, check_number_symmetry,
                                      check_spin_symmetry, creation, fermion_product, jordan_wigner,
                                      jw_excitation_evolution, number_operator, spin_z_operator)
from converters.pauli import PauliSum
from downfolding.toy import hamiltonian_matrix
from errors import OrbitalIndexError
from extractors.fcidump import FermionHamiltonian, random_hamiltonian
from simulators.statevector import apply_pauli_exp, init_reference
from solvers.exact import exact_ground_state


def anticommutator(a, b):
    return a * b + b * a


def test_canonical_anticommutation():
    n = 4
    identity = PauliSum.identity(n)
    for p in range(n):
        for q in range(n):
            expected = identity if p == q else PauliSum(n)
            assert anticommutator(annihilation(p, n), creation(q, n)).allclose(expected)
            assert not anticommutator(annihilation(p, n), annihilation(q, n))


def test_creation_tail_sits_on_lower_qubits():
    op = creation(2, 4)
    labels = {term.label() for term in op}
    assert labels == {'IXZZ', 'IYZZ'}


def test_index_outside_register():
    with pytest.raises(OrbitalIndexError):
        creation(4, 4)


def test_number_operator_is_diagonal_count():
    n = 3
    diag = np.diag(number_operator(n).to_dense()).real
    np.testing.assert_allclose(diag, [bin(b).count('1') for b in range(1 << n)])


@pytest.mark.parametrize('n_spatial, n_electrons, seed', [(2, 2, 0), (3, 2, 1), (3, 3, 2), (4, 4, 3)])
def test_mapping_matches_fock_space_matrix(n_spatial, n_electrons, seed):
    h = random_hamiltonian(n_spatial, n_electrons, seed=seed)
    mapped = jordan_wigner(h, prune_threshold=0.0)
    np.testing.assert_allclose(mapped.to_dense(), hamiltonian_matrix(h).matrix, atol=1e-10)


def test_mapping_is_hermitian_and_number_conserving(medium_paulis):
    assert medium_paulis.is_hermitian()
    assert check_number_symmetry(medium_paulis)
    assert medium_paulis.n_qubits == 6


def test_core_energy_is_identity_coefficient():
    h = FermionHamiltonian(2, 2, 0, -1.25, np.zeros((2, 2)), np.zeros((2, 2, 2, 2)))
    mapped = jordan_wigner(h)
    assert len(mapped) == 1
    assert mapped.identity_coeff == -1.25
    assert len(mapped.non_identity()) == 0


def test_one_orbital_one_electron():
    h = FermionHamiltonian(1, 1, 1, 0.0, np.array([[-0.5]]), np.zeros((1, 1, 1, 1)))
    energy, _ = exact_ground_state(jordan_wigner(h), (1, 1))
    assert energy == pytest.approx(-0.5)


def test_spin_orbital_input_is_not_expanded():
    h = random_hamiltonian(2, 2, seed=3)
    spatial_map = jordan_wigner(h)
    from extractors.fcidump import expand_to_spin_orbitals
    spin_map = jordan_wigner(expand_to_spin_orbitals(h))
    assert spin_map.allclose(spatial_map)


def test_generator_is_anti_hermitian():
    for generator in (ExcitationGenerator.single(2, 0), ExcitationGenerator.double(2, 3, 1, 0)):
        op = generator.operator(4)
        assert (op + op.adjoint()).allclose(PauliSum(4))


def test_generator_validation():
    with pytest.raises(ValueError):
        ExcitationGenerator('triple', (0, 1, 2))
    with pytest.raises(OrbitalIndexError):
        ExcitationGenerator.double(1, 1, 0, 2)
    with pytest.raises(OrbitalIndexError):
        ExcitationGenerator.single(5, 0).operator(4)


def test_generator_dict_round_trip():
    generator = ExcitationGenerator.double(4, 5, 1, 0)
    assert ExcitationGenerator.from_dict(generator.to_dict()) == generator


@pytest.mark.parametrize('generator', [ExcitationGenerator.single(2, 0), ExcitationGenerator.double(2, 3, 1, 0)])
def test_rotation_product_reproduces_exponential(generator):
    from scipy.linalg import expm
    n, theta = 4, 0.37
    reference = init_reference(n, [0, 1])
    expected = expm(theta * generator.operator(n).to_dense()) @ reference.amplitudes
    state = reference.copy()
    for pauli, angle in jw_excitation_evolution(generator, theta, n):
        apply_pauli_exp(state, pauli, angle)
    np.testing.assert_allclose(state.amplitudes, expected, atol=1e-12)


def test_rotation_counts():
    assert len(jw_excitation_evolution(ExcitationGenerator.single(2, 0), 0.1, 4)) == 2
    rotations = jw_excitation_evolution(ExcitationGenerator.double(2, 3, 1, 0), 0.4, 4)
    assert len(rotations) == 8
    assert sorted(abs(a) for _, a in rotations) == pytest.approx([0.1] * 8)


def test_fermion_product_pauli_exclusion():
    assert not fermion_product(((1, True), (1, True)), 3)


def test_mapped_hamiltonian_conserves_spin_projection(small_paulis, medium_paulis):
    assert check_spin_symmetry(small_paulis)
    assert check_spin_symmetry(medium_paulis)


def test_spin_z_is_diagonal_in_the_occupation_basis():
    # bit p of the basis index is qubit p; qubit 0 is alpha, qubit 1 beta
    diagonal = np.diag(spin_z_operator(2).to_dense()).real
    assert diagonal.tolist() == pytest.approx([0.0, 0.5, -0.5, 0.0])
