import math

import numpy as np
import pytest

from converters.pauli import PauliSum, PauliTerm
from errors import DimensionError, NonHermitianInput, OrbitalIndexError, RangeError
from simulators.circuits import Circuit, GateTally, rotation_gates, rotation_tally
from simulators.statevector import (NoiseModel, State, apply_pauli_exp, derive_rng, expectation,
                                    init_reference, prepare_state, run_circuit, sample_circuit,
                                    sample_group)
from measurement.grouping import MeasurementGroup


def test_reference_state_bits():
    state = init_reference(4, [0, 2])
    assert state.amplitudes[0b0101] == 1
    assert state.norm() == pytest.approx(1.0)
    with pytest.raises(OrbitalIndexError):
        init_reference(2, [3])


def test_rotation_by_pi_is_pauli_up_to_phase():
    state = init_reference(2, [])
    apply_pauli_exp(state, PauliTerm.from_label('IX'), math.pi)
    assert state.amplitudes[1] == pytest.approx(-1j)
    assert abs(state.amplitudes[0]) < 1e-15


def test_rotation_matches_matrix_exponential(random_state):
    from scipy.linalg import expm
    state = random_state(3, seed=1)
    pauli = PauliTerm.from_label('YXZ')
    expected = expm(-0.5j * 0.8 * pauli.to_sparse().toarray()) @ state.amplitudes
    apply_pauli_exp(state, pauli, 0.8)
    np.testing.assert_allclose(state.amplitudes, expected, atol=1e-12)


def test_negative_unit_coefficient_flips_angle(random_state):
    a = random_state(2, seed=2)
    b = a.copy()
    apply_pauli_exp(a, PauliTerm.from_label('XY', -1.0), 0.4)
    apply_pauli_exp(b, PauliTerm.from_label('XY'), -0.4)
    np.testing.assert_allclose(a.amplitudes, b.amplitudes)


def test_rotation_requires_unit_coefficient(random_state):
    with pytest.raises(ValueError):
        apply_pauli_exp(random_state(1), PauliTerm.from_label('X', 0.5), 0.1)


def test_expectation_checks(random_state):
    state = random_state(2)
    assert expectation(state, PauliSum.identity(2, 3.0)) == pytest.approx(3.0)
    with pytest.raises(NonHermitianInput):
        expectation(state, PauliSum.from_labels([(1j, 'XX')]))
    with pytest.raises(DimensionError):
        expectation(state, PauliSum.identity(3))


def test_z0_ground_energy():
    z0 = PauliSum.from_labels([(1.0, 'IZ')])
    assert expectation(init_reference(2, [0]), z0) == pytest.approx(-1.0)


@pytest.mark.parametrize('label', ['X', 'Y', 'Z', 'XY', 'YZX', 'ZIIY', 'YYYY'])
def test_gate_compilation_matches_rotation(label, random_state):
    pauli = PauliTerm.from_label(label)
    n = pauli.n_qubits
    circuit = Circuit(n, [(pauli, 0.61)])
    direct = random_state(n, seed=7)
    compiled = direct.copy()
    run_circuit(direct, circuit)
    run_circuit(compiled, circuit, gate_level=True)
    overlap = abs(np.vdot(direct.amplitudes, compiled.amplitudes))
    assert overlap == pytest.approx(1.0, abs=1e-12)


def test_rotation_gate_counts():
    pauli = PauliTerm.from_label('XYZ')
    gates = rotation_gates(pauli, 0.2)
    assert sum(1 for g in gates if g[0] == 'cx') == 4
    assert rotation_tally(pauli) == GateTally(one_qubit=5, two_qubit=4)
    assert rotation_tally(PauliTerm.from_label('III')) == GateTally()


def test_identity_pairs_leave_state_unchanged(random_state):
    pauli = PauliTerm.from_label('XXZ')
    base = Circuit(3, [(pauli, 0.5)])
    padded = Circuit(3, [(pauli, 0.5)], {0: 2, 3: 1})
    a, b = random_state(3, seed=4), random_state(3, seed=4)
    run_circuit(a, base, gate_level=True)
    _, tally = run_circuit(b, padded, gate_level=True)
    np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-14)
    assert tally.two_qubit == base.tally().two_qubit + 6


def test_circuit_dict_round_trip():
    circuit = Circuit(3, [(PauliTerm.from_label('XYZ', -1.0), 0.25), (PauliTerm.from_label('IZX'), 1.5)], {1: 2})
    back = Circuit.from_dict(circuit.to_dict())
    assert [(p.label(), p.coeff, a) for p, a in back.rotations] == \
        [(p.label(), p.coeff, a) for p, a in circuit.rotations]
    assert back.insertions == {1: 2}


def test_circuit_register_mismatch():
    with pytest.raises(ValueError):
        Circuit(2, [(PauliTerm.from_label('XXX'), 0.1)])
    with pytest.raises(DimensionError):
        run_circuit(init_reference(2, []), Circuit(3, []))


def test_noise_model_ranges():
    with pytest.raises(RangeError):
        NoiseModel(p2=1.5)
    with pytest.raises(RangeError):
        NoiseModel(p2=0.1, trajectories=0)
    assert NoiseModel().is_noiseless


def test_noisy_trajectory_is_seeded():
    circuit = Circuit(3, [(PauliTerm.from_label('XXY'), 0.4), (PauliTerm.from_label('ZYX'), 1.1)])
    noise = NoiseModel(p2=0.5, rng_seed=3)
    a = prepare_state(circuit, [0], noise, derive_rng(3, 'trajectory', 0))
    b = prepare_state(circuit, [0], noise, derive_rng(3, 'trajectory', 0))
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    assert a.norm() == pytest.approx(1.0)


def test_full_depolarizing_changes_state():
    circuit = Circuit(2, [(PauliTerm.from_label('XX'), 0.0)] * 5)
    clean = prepare_state(circuit, [0])
    changed = False
    for j in range(10):
        noisy = prepare_state(circuit, [0], NoiseModel(p2=1.0), derive_rng(0, 'trajectory', j))
        changed |= abs(abs(np.vdot(clean.amplitudes, noisy.amplitudes)) - 1.0) > 1e-9
    assert changed


def test_derive_rng_streams():
    assert derive_rng(1, 'a', 2).random() == derive_rng(1, 'a', 2).random()
    assert derive_rng(1, 'a', 2).random() != derive_rng(1, 'a', 3).random()
    assert derive_rng(1, 'a').random() != derive_rng(2, 'a').random()


def test_sample_circuit_trajectories_split_shots():
    group = MeasurementGroup(2)
    group.add(PauliTerm.from_label('ZZ'))
    circuit = Circuit(2, [(PauliTerm.from_label('XY'), 0.3)])
    clean = sample_circuit(circuit, [0], group, 500, seed=1)
    assert len(clean) == 1 and sum(clean[0].values()) == 500
    noisy = sample_circuit(circuit, [0], group, 101, NoiseModel(p2=0.2, trajectories=10), seed=1)
    assert len(noisy) == 10
    assert sum(sum(h.values()) for h in noisy) == 101


def test_state_dump_and_load(tmp_path, random_state):
    state = random_state(3, seed=5)
    path = tmp_path / 'psi.bin'
    state.dump(path)
    np.testing.assert_array_equal(State.load(path).amplitudes, state.amplitudes)


def random_rotations(n_qubits, count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        label = ''.join(rng.choice(list('IXYZ'), size=n_qubits))
        yield PauliTerm.from_label(label, float(rng.choice([-1.0, 1.0]))), float(rng.uniform(-math.pi, math.pi))


def test_norm_survives_ten_thousand_rotations(random_state):
    state = random_state(4, seed=21)
    for pauli, angle in random_rotations(4, 10_000, seed=21):
        apply_pauli_exp(state, pauli, angle)
    assert abs(state.norm() - 1.0) < 1e-12


def test_opposite_angle_undoes_rotation(random_state):
    for pauli, angle in random_rotations(5, 50, seed=4):
        state = random_state(5, seed=9)
        original = state.amplitudes.copy()
        apply_pauli_exp(state, pauli, angle)
        apply_pauli_exp(state, pauli, -angle)
        np.testing.assert_allclose(state.amplitudes, original, atol=1e-12)


def test_sampled_frequencies_follow_born_rule(random_state):
    from scipy.stats import chisquare

    state = random_state(4, seed=13)
    group = MeasurementGroup(4)
    group.add(PauliTerm.from_label('ZZZZ'))
    shots = 100_000
    histogram = sample_group(state, group, shots, seed=13)
    observed = np.array([histogram.get(format(i, '04b'), 0) for i in range(16)])
    expected = shots * state.probabilities()
    assert chisquare(observed, expected).pvalue > 1e-3


@pytest.mark.slow
def test_noisy_z_expectation_decays_toward_mixed_value():
    # ZZ rotations keep a basis state a basis state; each fault flips qubit 0 with probability 8/15
    circuit = Circuit(2, [(PauliTerm.from_label('ZZ'), 0.3)] * 5)
    observable = PauliSum.from_labels([(1.0, 'IZ')])
    trajectories = 4000
    previous = None
    for p2 in (0.0, 0.05, 0.1, 0.2, 0.4):
        noise = NoiseModel(p2=p2)
        values = [expectation(prepare_state(circuit, [0], noise, derive_rng(17, 'trajectory', j)),
                              observable) for j in range(trajectories)]
        mean = float(np.mean(values))
        exact = -(1 - 16 * p2 / 15) ** 10
        assert abs(mean - exact) < 5 / math.sqrt(trajectories) + 1e-12
        if previous is not None:
            assert abs(mean) < abs(previous)
        previous = mean
