import itertools

import numpy as np
import pytest

from converters.pauli import PauliSum, PauliTerm
from errors import InsufficientShots, RangeError
from measurement.estimator import estimate_energy, estimate_group, exact_group_mean
from measurement.grouping import (MeasurementGroup, MeasurementPlan, allocate_shots, build_plan,
                                  k_for_weight_fraction, qwc_group, truncate_groups, with_retained)
from simulators.statevector import expectation, rotate_to_basis, sample_plan
from simulators.circuits import Circuit


def test_groups_partition_non_identity_terms(medium_paulis):
    groups = qwc_group(medium_paulis)
    members = [t.masks for g in groups for t in g.members]
    assert sorted(members) == sorted(m for m in medium_paulis.terms if m != (0, 0))
    for group in groups:
        for i, a in enumerate(group.members):
            for b in group.members[i + 1:]:
                assert a.qubit_wise_commutes(b)


def test_groups_ordered_by_weight(medium_paulis):
    weights = [g.weight for g in qwc_group(medium_paulis)]
    assert weights == sorted(weights, reverse=True)


def test_grouping_is_deterministic(medium_paulis):
    first = [g.to_dict() for g in qwc_group(medium_paulis)]
    second = [g.to_dict() for g in qwc_group(medium_paulis)]
    assert first == second


def test_basis_string_marks_measured_letters():
    group = MeasurementGroup(3)
    group.add(PauliTerm.from_label('XIZ'))
    group.add(PauliTerm.from_label('IIZ'))
    assert group.basis_string() == 'XIZ'
    assert group.accepts(PauliTerm.from_label('XYI'))
    assert not group.accepts(PauliTerm.from_label('ZII'))


def test_full_plan_reassembles_sum(medium_paulis):
    plan = build_plan(medium_paulis)
    assert plan.retained_k == len(plan.groups)
    assert plan.to_sum().allclose(medium_paulis)
    assert plan.weight_fraction == pytest.approx(1.0)
    assert truncate_groups(plan, len(plan.groups)).allclose(medium_paulis)


def test_truncation_keeps_heaviest_groups(medium_paulis):
    plan = build_plan(medium_paulis)
    truncated = truncate_groups(plan, 1)
    expected = plan.groups[0].to_sum() + PauliSum.identity(6, medium_paulis.identity_coeff)
    assert truncated.allclose(expected)


def test_retained_weight_is_maximal_and_monotone_in_k(small_paulis):
    plan = build_plan(small_paulis)
    weights = [g.weight for g in plan.groups]
    previous = 0.0
    for k in range(1, len(plan.groups) + 1):
        kept = with_retained(plan, k)
        retained = sum(g.weight for g in kept.retained)
        best = max(sum(subset) for subset in itertools.combinations(weights, k))
        assert retained == pytest.approx(best, rel=1e-12)
        assert truncate_groups(plan, k).one_norm(include_identity=False) == pytest.approx(retained, rel=1e-12)
        assert kept.weight_fraction >= previous
        previous = kept.weight_fraction
    assert previous == pytest.approx(1.0)


@pytest.mark.parametrize('k', [0, 10_000])
def test_k_out_of_range(medium_paulis, k):
    plan = build_plan(medium_paulis)
    with pytest.raises(RangeError):
        truncate_groups(plan, k)
    with pytest.raises(RangeError):
        build_plan(medium_paulis, k=k)


def test_plan_dict_round_trip(medium_paulis):
    plan = build_plan(medium_paulis, k=3, shots_per_group=200, allocation='weighted')
    back = MeasurementPlan.from_dict(plan.to_dict())
    assert back.retained_k == 3
    assert back.shot_allocation == plan.shot_allocation
    assert back.to_sum().allclose(plan.to_sum())


def test_weighted_allocation_keeps_budget(medium_paulis):
    groups = qwc_group(medium_paulis)
    shots = allocate_shots(groups, 100, 'weighted')
    assert sum(shots) == 100 * len(groups)
    assert min(shots) >= 1
    assert shots[0] >= shots[-1]
    assert allocate_shots(groups, 100) == [100] * len(groups)
    with pytest.raises(RangeError):
        allocate_shots(groups, 0)


def test_with_retained_reallocates(medium_paulis):
    plan = build_plan(medium_paulis, shots_per_group=50)
    smaller = with_retained(plan, 2)
    assert smaller.retained_k == 2
    assert smaller.shot_allocation == [50, 50]


def test_weight_fraction_selects_smallest_k(medium_paulis):
    plan = build_plan(medium_paulis)
    assert k_for_weight_fraction(plan, 1.0) == len(plan.groups)
    k = k_for_weight_fraction(plan, 0.5)
    assert with_retained(plan, k).weight_fraction >= 0.5
    if k > 1:
        assert with_retained(plan, k - 1).weight_fraction < 0.5
    with pytest.raises(RangeError):
        k_for_weight_fraction(plan, 0.0)


def test_estimate_group_from_histogram():
    group = MeasurementGroup(2)
    group.add(PauliTerm.from_label('ZZ', 1.0))
    group.add(PauliTerm.from_label('IZ', 0.5))
    estimate = estimate_group(group, {'00': 3, '11': 1}, 2)
    assert estimate.mean == pytest.approx(1.25)
    assert estimate.variance_of_mean == pytest.approx(0.0625)
    assert estimate.shots == 4


def test_estimate_group_over_trajectories():
    group = MeasurementGroup(1)
    group.add(PauliTerm.from_label('Z'))
    estimate = estimate_group(group, [{'0': 10}, {'1': 10}], 1)
    assert estimate.mean == pytest.approx(0.0)
    assert estimate.variance_of_mean == pytest.approx(1.0)
    assert estimate.shots == 20


def test_empty_histogram_raises():
    group = MeasurementGroup(1)
    group.add(PauliTerm.from_label('Z'))
    with pytest.raises(InsufficientShots):
        estimate_group(group, {'0': 0}, 1)


def test_bad_bitstring_raises():
    group = MeasurementGroup(2)
    group.add(PauliTerm.from_label('ZZ'))
    with pytest.raises(ValueError):
        estimate_group(group, {'012': 4}, 2)


def test_histogram_count_must_match_plan(small_paulis):
    plan = build_plan(small_paulis)
    with pytest.raises(ValueError):
        estimate_energy([], plan)


def test_rotated_probabilities_give_exact_energy(small_paulis, random_state):
    state = random_state(4, seed=3)
    plan = build_plan(small_paulis)
    total = small_paulis.identity_coeff.real
    for group in plan.groups:
        total += exact_group_mean(group, rotate_to_basis(state, group).probabilities())
    assert total == pytest.approx(expectation(state, small_paulis), abs=1e-10)


def test_sampled_energy_within_error_bars(small_paulis):
    plan = build_plan(small_paulis, shots_per_group=20_000)
    circuit = Circuit(4, [(PauliTerm.from_label('XXXY'), 0.3), (PauliTerm.from_label('IXIY'), -0.7)])
    counts = sample_plan(circuit, [0, 1], plan, seed=4)
    energy, standard_error = estimate_energy(counts, plan)

    from simulators.statevector import prepare_state
    exact = expectation(prepare_state(circuit, [0, 1]), small_paulis)
    assert standard_error > 0
    assert abs(energy - exact) < 5 * standard_error


def test_sampling_is_reproducible(small_paulis):
    plan = build_plan(small_paulis, shots_per_group=100)
    circuit = Circuit(4, [(PauliTerm.from_label('XXXY'), 0.3)])
    first = sample_plan(circuit, [0, 1], plan, seed=9)
    assert sample_plan(circuit, [0, 1], plan, seed=9, threads=2) == first
    assert sample_plan(circuit, [0, 1], plan, seed=10) != first
