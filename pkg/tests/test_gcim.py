import numpy as np
import pytest

from errors import DegenerateSubspace
from settings import SolverConfig
from simulators.statevector import State, init_reference
from solvers.exact import exact_ground_state
from solvers.gcim import GcimSubspace, gcim_expand, solve_gev
from solvers.pools import build_pool


def test_identity_overlap_gives_ordinary_eigenvalues():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4))
    hmat = a + a.T
    np.testing.assert_allclose(solve_gev(hmat, np.eye(4)), np.linalg.eigvalsh(hmat), atol=1e-12)


def test_two_by_two_closed_form():
    a, b, d, s = -1.0, 0.3, 0.5, 0.4
    hmat = np.array([[a, b], [b, d]])
    smat = np.array([[1.0, s], [s, 1.0]])
    # det(H - e S) = 0
    roots = np.sort(np.roots([1 - s * s, -(a + d - 2 * b * s), a * d - b * b]).real)
    np.testing.assert_allclose(solve_gev(hmat, smat), roots, atol=1e-12)


def test_all_directions_below_cutoff():
    with pytest.raises(DegenerateSubspace):
        solve_gev(np.zeros((2, 2)), np.zeros((2, 2)))


def test_duplicate_state_leaves_energy_unchanged(small_paulis, random_state):
    a, b = random_state(4, seed=1), random_state(4, seed=2)
    subspace = GcimSubspace()
    subspace.add(a, small_paulis)
    subspace.add(b, small_paulis)
    energy, _ = subspace.ground_state()
    subspace.add(b.copy(), small_paulis)
    assert subspace.retained_directions() == 2
    assert subspace.ground_state()[0] == pytest.approx(energy, abs=1e-10)


def test_subspace_containing_ground_state_is_exact(small_paulis):
    exact, vector = exact_ground_state(small_paulis, (2, 0))
    subspace = GcimSubspace()
    subspace.add(init_reference(4, [0, 1]), small_paulis)
    subspace.add(State(vector, 4), small_paulis)
    assert subspace.ground_state()[0] == pytest.approx(exact, abs=1e-10)


def test_matrices_are_hermitian(small_paulis, random_state):
    subspace = GcimSubspace()
    for seed in range(3):
        subspace.add(random_state(4, seed=seed), small_paulis)
    np.testing.assert_allclose(subspace.hmat, subspace.hmat.conj().T)
    np.testing.assert_allclose(subspace.smat, subspace.smat.conj().T)
    assert subspace.to_dict()['size'] == 3


def test_gcim_energies_bounded_and_monotone(medium_paulis, medium_hamiltonian):
    pool = build_pool('fermionic-gsd', 6, 2)
    subspace, trace = gcim_expand(medium_paulis, pool, config=SolverConfig(max_iter=6, grad_tol=1e-8))
    exact, _ = exact_ground_state(medium_paulis, (2, 0))
    energies = trace.energies
    assert all(b <= a + 1e-9 for a, b in zip(energies, energies[1:]))
    assert min(energies) >= exact - 1e-9
    assert trace.solver == 'adapt-gcim'
    assert [r.basis_size for r in trace.records] == list(range(1, len(trace.records) + 1))
    assert len(subspace) == trace.records[-1].basis_size


def test_gcim_with_optimization_rounds(medium_paulis, medium_hamiltonian):
    pool = build_pool('fermionic-gsd', 6, 2)
    _, trace = gcim_expand(medium_paulis, pool, x=2, y=2, config=SolverConfig(max_iter=4, grad_tol=1e-10))
    assert trace.solver == 'adapt-gcim(2,2)'
    sizes = [r.basis_size for r in trace.records]
    assert sizes[:5] == [1, 2, 4, 5, 7]
    exact, _ = exact_ground_state(medium_paulis, (2, 0))
    assert trace.final_energy >= exact - 1e-9
    assert trace.final_energy <= trace.reference_energy + 1e-12


def test_gcim_small_system_approaches_exact(small_paulis):
    pool = build_pool('fermionic-gsd', 4, 2)
    _, trace = gcim_expand(small_paulis, pool, config=SolverConfig(max_iter=20, grad_tol=1e-7))
    exact, _ = exact_ground_state(small_paulis, (2, 0))
    assert trace.final_energy == pytest.approx(exact, abs=1e-5)


def test_gcim_argument_checks(small_paulis):
    pool = build_pool('fermionic-gsd', 4, 2)
    with pytest.raises(ValueError):
        gcim_expand(small_paulis, pool, x=0)
    with pytest.raises(ValueError):
        gcim_expand(small_paulis, pool, y=-1)
