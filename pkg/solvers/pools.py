"""
Operator pools for the adaptive solvers

Spin orbitals are interleaved, so parity of an index is its spin. Doubles are
stored as (c1, c2, d2, d1) meaning a+_c1 a+_c2 a_d2 a_d1 - h.c. with c1 < c2
and d1 < d2.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

from converters.jordan_wigner import ExcitationGenerator
from converters.pauli import PauliSum, PauliTerm
from extractors.fcidump import reference_occupation

logger = logging.getLogger(__name__)

POOL_KINDS = ('fermionic-sd', 'fermionic-gsd', 'qubit-minimal')


@dataclass
class OperatorPool:
    kind: str
    n_spin_orbitals: int
    n_electrons: int
    ms2: int
    elements: List[ExcitationGenerator] = field(default_factory=list)
    provenance: str = ''

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[ExcitationGenerator]:
        return iter(self.elements)

    def __getitem__(self, index: int) -> ExcitationGenerator:
        return self.elements[index]

    @property
    def reference(self) -> List[int]:
        return reference_occupation(self.n_electrons, self.ms2, self.n_spin_orbitals)

    def operators(self) -> List[PauliSum]:
        return [g.operator(self.n_spin_orbitals) for g in self.elements]

    def to_dict(self) -> Dict:
        return {
            'kind': self.kind,
            'n_spin_orbitals': self.n_spin_orbitals,
            'n_electrons': self.n_electrons,
            'ms2': self.ms2,
            'provenance': self.provenance,
            'elements': [g.to_dict() for g in self.elements],
        }


def _same_spin(p: int, q: int) -> bool:
    return p % 2 == q % 2


def _spin_conserving(create, annihilate) -> bool:
    return sorted(p % 2 for p in create) == sorted(p % 2 for p in annihilate)


def sd_excitations(n_spin_orbitals: int, n_electrons: int, ms2: int) -> List[ExcitationGenerator]:
    """Occupied -> virtual singles and doubles of the reference determinant"""
    occupied = reference_occupation(n_electrons, ms2, n_spin_orbitals)
    virtual = [p for p in range(n_spin_orbitals) if p not in occupied]
    singles = [ExcitationGenerator.single(a, i) for i in occupied for a in virtual if _same_spin(a, i)]
    doubles = [ExcitationGenerator.double(a, b, j, i)
               for i, j in itertools.combinations(occupied, 2)
               for a, b in itertools.combinations(virtual, 2)
               if _spin_conserving((a, b), (i, j))]
    return singles + doubles


def gsd_excitations(n_spin_orbitals: int) -> List[ExcitationGenerator]:
    """Generalized singles and doubles over all spin orbitals"""
    singles = [ExcitationGenerator.single(p, q)
               for q, p in itertools.combinations(range(n_spin_orbitals), 2) if _same_spin(p, q)]
    pairs = list(itertools.combinations(range(n_spin_orbitals), 2))
    doubles = []
    for annihilate, create in itertools.combinations(pairs, 2):
        # combinations keeps annihilate < create lexicographically
        if len(set(annihilate) | set(create)) < 4 or not _spin_conserving(create, annihilate):
            continue
        (c1, c2), (d1, d2) = create, annihilate
        doubles.append(ExcitationGenerator.double(c1, c2, d2, d1))
    return singles + doubles


def strip_z_tail(term: PauliTerm) -> PauliTerm:
    """Drop pure-Z letters, keeping X and Y"""
    return PauliTerm(term.x_mask, term.z_mask & term.x_mask, 1.0 + 0j, term.n_qubits)


def qubit_minimal_excitations(n_spin_orbitals: int) -> List[ExcitationGenerator]:
    """Distinct Z-stripped strings of the GSD Jordan-Wigner images with odd Y count"""
    seen = set()
    elements = []
    for generator in gsd_excitations(n_spin_orbitals):
        for term in generator.operator(n_spin_orbitals):
            stripped = strip_z_tail(term)
            if stripped.y_count % 2 == 0 or stripped.masks in seen:
                continue
            seen.add(stripped.masks)
            elements.append(ExcitationGenerator(generator.kind, generator.indices, stripped))
    return elements


def build_pool(kind: str, n_spin_orbitals: int, n_electrons: int,
               ms2: Optional[int] = None) -> OperatorPool:
    """Deterministically enumerated operator pool"""
    if n_spin_orbitals < 2 or n_spin_orbitals % 2:
        raise ValueError(f"Pools need an even number of spin orbitals, got {n_spin_orbitals}")
    ms2 = n_electrons % 2 if ms2 is None else ms2
    if kind == 'fermionic-sd':
        elements = sd_excitations(n_spin_orbitals, n_electrons, ms2)
        provenance = 'occupied->virtual singles (a,i); doubles (a,b,j,i) with i<j, a<b'
    elif kind == 'fermionic-gsd':
        elements = gsd_excitations(n_spin_orbitals)
        provenance = 'all spin-conserving singles (p>q) and doubles (c1,c2,d2,d1), creation pair > annihilation pair'
    elif kind == 'qubit-minimal':
        elements = qubit_minimal_excitations(n_spin_orbitals)
        provenance = 'Z-stripped odd-Y strings of the fermionic-gsd Jordan-Wigner images'
    else:
        raise ValueError(f"Pool kind must be one of {POOL_KINDS}, got {kind!r}")

    logger.info(f"Built {kind} pool with {len(elements)} elements on {n_spin_orbitals} spin orbitals")
    return OperatorPool(kind, n_spin_orbitals, n_electrons, ms2, elements, provenance)
