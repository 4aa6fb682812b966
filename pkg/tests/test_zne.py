import json

import numpy as np
import pytest

from converters.pauli import PauliTerm
from errors import DivisionByZeroGuard, FitError, NotAmplifiable, RangeError
from measurement.grouping import build_plan
from mitigation.zne import (ZnePoint, ZneSeries, amplify_circuit, noise_factor, run_zne,
                            zne_extrapolate)
from simulators.circuits import Circuit, GateTally
from simulators.statevector import NoiseModel, derive_rng, expectation, init_reference, prepare_state, run_circuit


def ten_cx_circuit():
    # weight 4 and weight 3 rotations: 6 + 4 two-qubit gates
    return Circuit(4, [(PauliTerm.from_label('XXXY'), -0.2), (PauliTerm.from_label('IYZX'), 0.45)])


def test_target_one_leaves_circuit_unchanged():
    circuit = ten_cx_circuit()
    amplified, tally = amplify_circuit(circuit, 1.0)
    assert amplified.insertions == {}
    assert tally == circuit.tally()


def test_doubling_ten_two_qubit_gates():
    circuit = ten_cx_circuit()
    assert circuit.base_tally().two_qubit == 10
    amplified, tally = amplify_circuit(circuit, 2.0)
    assert tally.two_qubit == 20
    assert noise_factor(circuit.tally(), tally) == 2.0
    assert all(index >= 5 for index in amplified.insertions)

    a, b = init_reference(4, [0, 1]), init_reference(4, [0, 1])
    run_circuit(a, circuit, gate_level=True)
    run_circuit(b, amplified, gate_level=True)
    np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-12)


def test_fractional_target_within_one_pair():
    circuit = ten_cx_circuit()
    _, tally = amplify_circuit(circuit, 1.5)
    assert abs(noise_factor(circuit.tally(), tally) - 1.5) <= 2 / 10


def test_single_two_qubit_gate_still_amplifies():
    circuit = Circuit(2, [(PauliTerm.from_label('XX'), 0.3)])
    amplified, tally = amplify_circuit(circuit, 3.0)
    assert amplified.insertions == {0: 1}
    assert tally.two_qubit == 3


def test_amplification_errors():
    with pytest.raises(NotAmplifiable):
        amplify_circuit(Circuit(2, [(PauliTerm.from_label('IX'), 0.3)]), 2.0)
    with pytest.raises(RangeError):
        amplify_circuit(ten_cx_circuit(), 0.5)


def test_noise_factor():
    assert noise_factor(GateTally(0, 10), GateTally(0, 10)) == 1.0
    assert noise_factor(GateTally(0, 10), GateTally(0, 20)) == 2.0
    with pytest.raises(DivisionByZeroGuard):
        noise_factor(GateTally(3, 0), GateTally(3, 0))


def test_exact_line_extrapolates_to_intercept():
    points = [(lam, -231.80 + 0.02 * lam) for lam in (1.0, 1.5, 2.0)]
    series = zne_extrapolate(points, weighted=False)
    assert series.fit.intercept == pytest.approx(-231.80, abs=1e-10)
    assert series.fit.slope == pytest.approx(0.02, abs=1e-10)
    assert series.fit.r_squared == pytest.approx(1.0, abs=1e-10)
    assert series.fit.rmse == pytest.approx(0.0, abs=1e-10)


def test_two_points_match_closed_form():
    series = zne_extrapolate([(1.0, -1.7), (2.0, -1.5)], weighted=False)
    assert series.fit.intercept == pytest.approx(2 * -1.7 - -1.5, abs=1e-12)
    # no residual degrees of freedom: no error bar, and the JSON stays strict
    assert series.fit.intercept_se is None
    restored = json.loads(json.dumps(series.to_dict(), allow_nan=False))
    assert restored['fit']['intercept_se'] is None
    assert ZneSeries.from_dict(restored).fit == series.fit


def test_equal_errors_weighted_matches_unweighted():
    points = [ZnePoint(1.0, -1.0, 0.01), ZnePoint(1.5, -0.93, 0.01), ZnePoint(2.0, -0.88, 0.01)]
    weighted = zne_extrapolate(points).fit
    plain = zne_extrapolate(points, weighted=False).fit
    assert weighted.weighted and not plain.weighted
    assert weighted.intercept == pytest.approx(plain.intercept, abs=1e-12)
    assert weighted.slope == pytest.approx(plain.slope, abs=1e-12)


def test_missing_errors_fall_back_to_ordinary_fit():
    series = zne_extrapolate([ZnePoint(1.0, -1.0, None), ZnePoint(2.0, -0.9, 0.01)])
    assert not series.fit.weighted


def test_degenerate_noise_factors():
    with pytest.raises(FitError):
        zne_extrapolate([(1.0, -1.0), (1.0, -1.1)])
    with pytest.raises(RangeError):
        zne_extrapolate([(0.5, -1.0), (1.0, -1.1)])


def test_repeated_factor_with_two_distinct_values():
    series = zne_extrapolate([(1.0, -1.0), (1.0, -1.0), (2.0, -0.9)], weighted=False)
    assert series.fit.intercept == pytest.approx(-1.1)


def test_series_csv_round_trip(tmp_path):
    series = zne_extrapolate([ZnePoint(1.0, -231.7712345678901, 0.0123),
                              ZnePoint(1.6, -231.7512, 0.0131), ZnePoint(2.0, -231.74, None)], weighted=False)
    path = tmp_path / 'zne.csv'
    series.to_csv(path)
    assert ZneSeries.from_csv(path).points == series.points
    assert ZneSeries.from_json(series.to_json()).fit == series.fit


def test_noiseless_run_gives_flat_series(small_paulis):
    plan = build_plan(small_paulis, shots_per_group=500)
    circuit = ten_cx_circuit()
    series = run_zne(circuit, [0, 1], plan, NoiseModel(p2=0.0), [1.0, 1.5, 2.0], seed=2)
    energies = {p.energy for p in series.points}
    assert len(energies) == 1
    assert abs(series.fit.slope) < 1e-9
    assert series.noiseless == pytest.approx(expectation(prepare_state(circuit, [0, 1]), small_paulis))
    point = series.points[0]
    assert abs(series.fit.intercept - series.noiseless) < 5 * point.standard_error


@pytest.mark.slow
def test_amplified_noise_increases_error(small_paulis):
    circuit = ten_cx_circuit()
    clean = expectation(prepare_state(circuit, [0, 1]), small_paulis)
    noise = NoiseModel(p2=0.02)
    errors = []
    for index, target in enumerate((1.0, 2.0)):
        amplified, _ = amplify_circuit(circuit, target)
        values = [expectation(prepare_state(amplified, [0, 1], noise, derive_rng(5, 'traj', index, j)),
                              small_paulis) for j in range(400)]
        errors.append(abs(np.mean(values) - clean))
    assert errors[1] > errors[0]


@pytest.mark.slow
@pytest.mark.parametrize('p2', [0.005, 0.01])
def test_extrapolation_recovers_noiseless_energy(small_paulis, p2):
    plan = build_plan(small_paulis, shots_per_group=10_000)
    circuit = ten_cx_circuit()
    covered = 0
    raw_errors, extrapolated_errors = [], []
    for seed in range(50):
        series = run_zne(circuit, [0, 1], plan, NoiseModel(p2=p2, rng_seed=seed), [1.0, 1.5, 2.0], seed=seed)
        error = abs(series.fit.intercept - series.noiseless)
        if error <= 2 * series.fit.intercept_se:
            covered += 1
        extrapolated_errors.append(error)
        raw_errors.append(abs(series.points[0].energy - series.noiseless))
    assert covered >= 45
    assert np.mean(extrapolated_errors) < np.mean(raw_errors)
