"""
Qubit-wise commuting measurement groups and budget truncation
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from converters.pauli import PauliSum, PauliTerm
from errors import RangeError

logger = logging.getLogger(__name__)


@dataclass
class MeasurementGroup:
    """Pauli terms measurable in one product basis

    ``basis_x``/``basis_z`` hold the joint basis letter on every qubit any
    member touches, in the same mask encoding as PauliTerm.
    """

    n_qubits: int
    members: List[PauliTerm] = field(default_factory=list)
    basis_x: int = 0
    basis_z: int = 0

    @property
    def weight(self) -> float:
        return float(sum(abs(t.coeff) for t in self.members))

    @property
    def basis_support(self) -> int:
        return self.basis_x | self.basis_z

    def accepts(self, term: PauliTerm) -> bool:
        """True if ``term`` qubit-wise commutes with every member"""
        overlap = term.support & self.basis_support
        return ((term.x_mask ^ self.basis_x) & overlap) == 0 and ((term.z_mask ^ self.basis_z) & overlap) == 0

    def add(self, term: PauliTerm):
        self.members.append(term)
        self.basis_x |= term.x_mask
        self.basis_z |= term.z_mask

    def basis_string(self) -> str:
        """Basis letter per qubit, qubit 0 rightmost, I where no member acts"""
        return PauliTerm(self.basis_x, self.basis_z, 1.0, self.n_qubits).label()

    def to_sum(self) -> PauliSum:
        return PauliSum(self.n_qubits, self.members)

    def to_dict(self) -> Dict:
        return {
            'basis': self.basis_string(),
            'weight': self.weight,
            'members': [{'pauli': t.label(), 're': t.coeff.real, 'im': t.coeff.imag} for t in self.members],
        }

    @classmethod
    def from_dict(cls, data: Dict, n_qubits: int) -> 'MeasurementGroup':
        group = cls(n_qubits)
        for member in data['members']:
            group.add(PauliTerm.from_label(member['pauli'], complex(member['re'], member.get('im', 0.0))))
        return group


@dataclass
class MeasurementPlan:
    """Groups in descending weight; the first ``retained_k`` are measured"""

    n_qubits: int
    groups: List[MeasurementGroup]
    retained_k: int
    shots_per_group: int
    identity_coeff: complex = 0j
    shot_allocation: List[int] = field(default_factory=list)
    allocation: str = 'uniform'

    @property
    def retained(self) -> List[MeasurementGroup]:
        return self.groups[:self.retained_k]

    @property
    def total_strings(self) -> int:
        return sum(len(g.members) for g in self.groups)

    @property
    def retained_strings(self) -> int:
        return sum(len(g.members) for g in self.retained)

    @property
    def weight_fraction(self) -> float:
        total = sum(g.weight for g in self.groups)
        return sum(g.weight for g in self.retained) / total if total else 1.0

    def shots_for(self, index: int) -> int:
        if self.shot_allocation:
            return self.shot_allocation[index]
        return self.shots_per_group

    def to_sum(self) -> PauliSum:
        """Retained groups plus the identity term"""
        terms = [t for g in self.retained for t in g.members]
        total = PauliSum(self.n_qubits, terms)
        if self.identity_coeff:
            total = total + PauliSum.identity(self.n_qubits, self.identity_coeff)
        return total

    def summary(self) -> Dict:
        return {
            'total_groups': len(self.groups),
            'retained_groups': self.retained_k,
            'total_strings': self.total_strings,
            'retained_strings': self.retained_strings,
            'weight_fraction': self.weight_fraction,
        }

    def to_dict(self) -> Dict:
        return {
            'n_qubits': self.n_qubits,
            'identity': {'re': complex(self.identity_coeff).real, 'im': complex(self.identity_coeff).imag},
            'retained_k': self.retained_k,
            'shots_per_group': self.shots_per_group,
            'allocation': self.allocation,
            'shot_allocation': list(self.shot_allocation),
            'groups': [g.to_dict() for g in self.groups],
            'summary': self.summary(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Dict) -> 'MeasurementPlan':
        n = data['n_qubits']
        identity = data.get('identity', {'re': 0.0, 'im': 0.0})
        return cls(
            n_qubits=n,
            groups=[MeasurementGroup.from_dict(g, n) for g in data['groups']],
            retained_k=data['retained_k'],
            shots_per_group=data['shots_per_group'],
            identity_coeff=complex(identity['re'], identity.get('im', 0.0)),
            shot_allocation=list(data.get('shot_allocation', [])),
            allocation=data.get('allocation', 'uniform'),
        )


def _term_order(term: PauliTerm):
    return (-abs(term.coeff), term.x_mask, term.z_mask)


def qwc_group(pauli_sum: PauliSum) -> List[MeasurementGroup]:
    """Greedy first-fit qubit-wise commuting partition of the non-identity terms

    Terms are inserted by descending |coeff| (ties by mask order); the
    returned groups are ordered by descending weight.
    """
    groups: List[MeasurementGroup] = []
    for term in sorted(pauli_sum.non_identity(), key=_term_order):
        for group in groups:
            if group.accepts(term):
                group.add(term)
                break
        else:
            group = MeasurementGroup(pauli_sum.n_qubits)
            group.add(term)
            groups.append(group)

    groups.sort(key=lambda g: (-g.weight, g.members[0].x_mask, g.members[0].z_mask))
    logger.debug(f"Grouped {len(pauli_sum.non_identity())} strings into {len(groups)} QWC groups")
    return groups


def allocate_shots(groups: List[MeasurementGroup], shots_per_group: int,
                   mode: str = 'uniform') -> List[int]:
    """Shots per group; weighted mode splits the same total budget by group weight"""
    if shots_per_group < 1:
        raise RangeError(f"shots_per_group must be >= 1, got {shots_per_group}")
    if mode == 'uniform' or not groups:
        return [shots_per_group] * len(groups)
    if mode != 'weighted':
        raise ValueError(f"Shot allocation must be uniform or weighted, got {mode!r}")

    budget = shots_per_group * len(groups)
    if budget < len(groups):
        raise RangeError("Weighted allocation needs at least one shot per group")
    weights = [g.weight for g in groups]
    total = sum(weights)
    # every group gets one shot, the rest by largest remainder
    spare = budget - len(groups)
    raw = [spare * w / total for w in weights]
    shots = [1 + int(r) for r in raw]
    leftover = budget - sum(shots)
    order = sorted(range(len(groups)), key=lambda i: (-(raw[i] - int(raw[i])), i))
    for i in order[:leftover]:
        shots[i] += 1
    return shots


def build_plan(pauli_sum: PauliSum, k: Optional[int] = None, shots_per_group: int = 1024,
               allocation: str = 'uniform') -> MeasurementPlan:
    """Group ``pauli_sum`` and retain the ``k`` heaviest groups (all when k is None)"""
    groups = qwc_group(pauli_sum)
    retained_k = len(groups) if k is None else k
    if groups and not 1 <= retained_k <= len(groups):
        raise RangeError(f"k must lie in [1, {len(groups)}], got {retained_k}")
    plan = MeasurementPlan(
        n_qubits=pauli_sum.n_qubits,
        groups=groups,
        retained_k=retained_k,
        shots_per_group=shots_per_group,
        identity_coeff=pauli_sum.identity_coeff,
        allocation=allocation,
    )
    plan.shot_allocation = allocate_shots(plan.retained, shots_per_group, allocation)
    logger.info(f"Measurement plan: {plan.retained_strings}/{plan.total_strings} strings in "
                f"{retained_k}/{len(groups)} groups ({plan.weight_fraction:.1%} of coefficient weight)")
    return plan


def truncate_groups(plan: MeasurementPlan, k: int) -> PauliSum:
    """Sum restricted to the ``k`` heaviest groups plus the identity term"""
    if not 1 <= k <= len(plan.groups):
        raise RangeError(f"k must lie in [1, {len(plan.groups)}], got {k}")
    kept = MeasurementPlan(plan.n_qubits, plan.groups, k, plan.shots_per_group, plan.identity_coeff)
    logger.info(f"Truncated to {k}/{len(plan.groups)} groups: {kept.retained_strings}/"
                f"{kept.total_strings} strings, weight fraction {kept.weight_fraction:.4f}")
    return kept.to_sum()


def with_retained(plan: MeasurementPlan, k: int) -> MeasurementPlan:
    """Copy of ``plan`` measuring the ``k`` heaviest groups"""
    if not 1 <= k <= len(plan.groups):
        raise RangeError(f"k must lie in [1, {len(plan.groups)}], got {k}")
    kept = MeasurementPlan(plan.n_qubits, plan.groups, k, plan.shots_per_group,
                           plan.identity_coeff, allocation=plan.allocation)
    kept.shot_allocation = allocate_shots(kept.retained, plan.shots_per_group, plan.allocation)
    return kept


def k_for_weight_fraction(plan: MeasurementPlan, fraction: float) -> int:
    """Smallest k whose heaviest groups carry at least ``fraction`` of the coefficient weight"""
    if not 0.0 < fraction <= 1.0:
        raise RangeError(f"Weight fraction must lie in (0, 1], got {fraction}")
    weights = np.array([g.weight for g in plan.groups])
    if weights.size == 0:
        raise RangeError("Plan has no groups to retain")
    cumulative = np.cumsum(weights) / weights.sum()
    return int(min(np.searchsorted(cumulative, fraction - 1e-12) + 1, weights.size))
