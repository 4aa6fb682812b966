"""
Energy estimation from per-group bitstring histograms

Bitstrings put qubit 0 rightmost. After the basis change of its group every
member reduces to a Z string on its support, so a shot with outcome b
contributes c_t * (-1)^{parity(b & support_t)} for each member t.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Mapping, Sequence, Tuple, Union

import numpy as np

from converters.pauli import parity
from errors import InsufficientShots
from measurement.grouping import MeasurementGroup, MeasurementPlan

logger = logging.getLogger(__name__)

Histogram = Mapping[str, int]
GroupCounts = Union[Histogram, Sequence[Histogram]]


@dataclass
class GroupEstimate:
    mean: float
    variance_of_mean: float
    shots: int


def _histogram_arrays(histogram: Histogram, n_qubits: int) -> Tuple[np.ndarray, np.ndarray]:
    outcomes, counts = [], []
    for bits, count in histogram.items():
        if len(bits) != n_qubits or set(bits) - {'0', '1'}:
            raise ValueError(f"Bitstring {bits!r} does not describe {n_qubits} qubits")
        if count < 0:
            raise ValueError(f"Negative count {count} for {bits!r}")
        if count:
            outcomes.append(int(bits, 2))
            counts.append(count)
    return np.asarray(outcomes, dtype=np.int64), np.asarray(counts, dtype=np.int64)


def outcome_values(group: MeasurementGroup, outcomes: np.ndarray) -> np.ndarray:
    """Group observable value for each measured outcome"""
    values = np.zeros(outcomes.shape, dtype=float)
    for term in group.members:
        values += term.coeff.real * (1 - 2 * parity(outcomes, term.support))
    return values


def _single_histogram(group: MeasurementGroup, histogram: Histogram, n_qubits: int) -> Tuple[float, float, int]:
    outcomes, counts = _histogram_arrays(histogram, n_qubits)
    shots = int(counts.sum())
    if shots == 0:
        raise InsufficientShots(f"Group {group.basis_string()} has no recorded shots")
    values = outcome_values(group, outcomes)
    mean = float(np.dot(counts, values) / shots)
    if shots > 1:
        variance = float(np.dot(counts, (values - mean) ** 2) / (shots - 1))
    else:
        variance = 0.0
    return mean, variance, shots


def estimate_group(group: MeasurementGroup, counts: GroupCounts, n_qubits: int) -> GroupEstimate:
    """Mean and variance of the mean for one group

    A list of histograms is treated as one histogram per noise trajectory and
    the variance comes from the spread of per-trajectory means.
    """
    if isinstance(counts, Mapping):
        mean, variance, shots = _single_histogram(group, counts, n_qubits)
        return GroupEstimate(mean, variance / shots, shots)

    per_trajectory = [_single_histogram(group, h, n_qubits) for h in counts if sum(h.values())]
    if not per_trajectory:
        raise InsufficientShots(f"Group {group.basis_string()} has no recorded shots")
    means = np.array([m for m, _, _ in per_trajectory])
    shots = np.array([s for _, _, s in per_trajectory])
    total = int(shots.sum())
    mean = float(np.dot(shots, means) / total)
    if len(means) >= 2:
        variance_of_mean = float(np.var(means, ddof=1) / len(means))
    else:
        variance_of_mean = per_trajectory[0][1] / total
    return GroupEstimate(mean, variance_of_mean, total)


def estimate_energy(counts: Sequence[GroupCounts], plan: MeasurementPlan,
                    threads: int = 1) -> Tuple[float, float]:
    """Energy and standard error from histograms of the retained groups

    Groups are independent, so their variances add in quadrature. The
    identity coefficient enters without uncertainty.
    """
    groups = plan.retained
    if len(counts) != len(groups):
        raise ValueError(f"Got histograms for {len(counts)} groups, plan retains {len(groups)}")

    def work(index: int) -> GroupEstimate:
        return estimate_group(groups[index], counts[index], plan.n_qubits)

    if threads > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            estimates = list(pool.map(work, range(len(groups))))
    else:
        estimates = [work(i) for i in range(len(groups))]

    energy = complex(plan.identity_coeff).real + sum(e.mean for e in estimates)
    standard_error = float(np.sqrt(sum(e.variance_of_mean for e in estimates)))
    logger.debug(f"Estimated energy {energy:.8f} +/- {standard_error:.2e} from {len(groups)} groups")
    return float(energy), standard_error


def exact_group_mean(group: MeasurementGroup, probabilities: np.ndarray) -> float:
    """Analytic expectation of the group estimator for rotated-basis probabilities"""
    outcomes = np.arange(probabilities.size, dtype=np.int64)
    return float(np.dot(probabilities, outcome_values(group, outcomes)))
