"""
Jordan-Wigner mapping of fermionic operators onto Pauli sums

a+_p = 1/2 (X_p - i Y_p) Z_{p-1} ... Z_0, so the parity tail of spin orbital
p sits on the lower qubits. Spin orbitals are interleaved (even = alpha).
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from converters.pauli import Masks, PauliSum, PauliTerm, commutator, product_phase, prune
from errors import OrbitalIndexError
from extractors.fcidump import FermionHamiltonian, expand_to_spin_orbitals

logger = logging.getLogger(__name__)

HERMITIAN_ATOL = 1e-10


def _check_index(p: int, n_qubits: int):
    if not 0 <= p < n_qubits:
        raise OrbitalIndexError(f"Spin orbital {p} outside register of {n_qubits} qubits")


@lru_cache(maxsize=None)
def creation(p: int, n_qubits: int) -> PauliSum:
    """JW image of a+_p"""
    _check_index(p, n_qubits)
    tail = (1 << p) - 1
    bit = 1 << p
    return PauliSum(n_qubits, {(bit, tail): 0.5, (bit, tail | bit): -0.5j})


@lru_cache(maxsize=None)
def annihilation(p: int, n_qubits: int) -> PauliSum:
    """JW image of a_p"""
    return creation(p, n_qubits).adjoint()


def ladder(p: int, n_qubits: int, is_creation: bool) -> PauliSum:
    return creation(p, n_qubits) if is_creation else annihilation(p, n_qubits)


def number_operator(n_qubits: int, indices: Optional[Iterable[int]] = None) -> PauliSum:
    """Sum of a+_p a_p = 1/2 (I - Z_p) over ``indices`` (all qubits by default)"""
    indices = range(n_qubits) if indices is None else list(indices)
    terms: Dict[Masks, complex] = {}
    for p in indices:
        _check_index(p, n_qubits)
        terms[(0, 0)] = terms.get((0, 0), 0) + 0.5
        terms[(0, 1 << p)] = terms.get((0, 1 << p), 0) - 0.5
    return PauliSum(n_qubits, terms)


def fermion_product(ops: Sequence[Tuple[int, bool]], n_qubits: int, coeff: complex = 1.0) -> PauliSum:
    """JW image of coeff * op_0 op_1 ... for (index, is_creation) pairs"""
    result = PauliSum.identity(n_qubits, coeff)
    for index, is_creation in ops:
        result = result * ladder(index, n_qubits, is_creation)
    return result


def _accumulate(acc: Dict[Masks, complex], pauli_sum: PauliSum, scale: complex):
    for masks, coeff in pauli_sum.terms.items():
        acc[masks] = acc.get(masks, 0j) + scale * coeff


def jordan_wigner(hamiltonian: FermionHamiltonian, prune_threshold: float = HERMITIAN_ATOL) -> PauliSum:
    """Map E_core + sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q onto qubits

    Spatial-orbital Hamiltonians are expanded to spin orbitals first. The
    two-body product is assembled as E_pq E_rs - delta_qr E_ps with
    E_pq = a+_p a_q, so the delta part folds into the one-body tensor.
    """
    spin = expand_to_spin_orbitals(hamiltonian)
    n = spin.n_orbitals
    h1 = np.asarray(spin.h1)
    h2 = np.asarray(spin.h2)
    one_body = h1 - 0.5 * np.einsum('prrq->pq', h2)

    excitations = {(p, q): creation(p, n) * annihilation(q, n) for p in range(n) for q in range(n)}

    acc: Dict[Masks, complex] = {(0, 0): complex(spin.e_core)}
    for p, q in zip(*np.nonzero(one_body)):
        _accumulate(acc, excitations[(p, q)], one_body[p, q])

    for p, q, r, s in zip(*np.nonzero(h2)):
        left, right = excitations[(p, q)], excitations[(r, s)]
        scale = 0.5 * h2[p, q, r, s]
        for (x1, z1), c1 in left.terms.items():
            for (x2, z2), c2 in right.terms.items():
                key = (x1 ^ x2, z1 ^ z2)
                acc[key] = acc.get(key, 0j) + scale * c1 * c2 * product_phase(x1, z1, x2, z2)

    for coeff, ops in spin.extra_terms:
        _accumulate(acc, fermion_product(ops, n), coeff)

    mapped = prune(PauliSum(n, acc), prune_threshold)
    if mapped.max_imag() <= HERMITIAN_ATOL:
        discarded = mapped.discarded_weight
        mapped = mapped.real()
        mapped.discarded_weight = discarded
    else:
        logger.warning(f"Mapped operator has imaginary coefficients up to {mapped.max_imag():.3e}")

    logger.info(f"Jordan-Wigner mapping: {n} qubits, {len(mapped)} Pauli strings "
                f"(discarded weight {mapped.discarded_weight:.3e})")
    return mapped


def number_violation(pauli_sum: PauliSum) -> float:
    """Largest coefficient of [S, N]"""
    comm = commutator(pauli_sum, number_operator(pauli_sum.n_qubits))
    return max((abs(c) for c in comm.terms.values()), default=0.0)


def check_number_symmetry(pauli_sum: PauliSum, n_qubits: Optional[int] = None,
                          atol: float = HERMITIAN_ATOL) -> bool:
    """True iff [S, N] is empty after pruning at ``atol``"""
    n_qubits = pauli_sum.n_qubits if n_qubits is None else n_qubits
    comm = commutator(pauli_sum, number_operator(n_qubits))
    return len(prune(comm, atol)) == 0


def spin_z_operator(n_qubits: int) -> PauliSum:
    """S_z = 1/2 (N_alpha - N_beta) with alpha on even qubits"""
    alpha = number_operator(n_qubits, range(0, n_qubits, 2))
    beta = number_operator(n_qubits, range(1, n_qubits, 2))
    return 0.5 * (alpha - beta)


def check_spin_symmetry(pauli_sum: PauliSum, atol: float = HERMITIAN_ATOL) -> bool:
    """True iff [S, S_z] is empty after pruning at ``atol``"""
    comm = commutator(pauli_sum, spin_z_operator(pauli_sum.n_qubits))
    return len(prune(comm, atol)) == 0


@dataclass(frozen=True)
class ExcitationGenerator:
    """Anti-Hermitian excitation generator A with ansatz factor exp(theta A)

    Fermionic singles (p, q) are a+_p a_q - a+_q a_p; doubles (p, r, q, s)
    are a+_p a+_r a_q a_s - h.c. A qubit realization holds one Pauli string
    P taken from such an image and stands for A = i P.
    """

    kind: str
    indices: Tuple[int, ...]
    pauli: Optional[PauliTerm] = None

    def __post_init__(self):
        expected = {'single': 2, 'double': 4}.get(self.kind)
        if expected is None:
            raise ValueError(f"Excitation kind must be single or double, got {self.kind!r}")
        if len(self.indices) != expected:
            raise ValueError(f"{self.kind} excitation needs {expected} indices, got {self.indices}")
        if len(set(self.indices)) != len(self.indices):
            raise OrbitalIndexError(f"Repeated spin-orbital index in {self.indices}")

    @classmethod
    def single(cls, p: int, q: int) -> 'ExcitationGenerator':
        return cls('single', (p, q))

    @classmethod
    def double(cls, p: int, r: int, q: int, s: int) -> 'ExcitationGenerator':
        return cls('double', (p, r, q, s))

    @property
    def realization(self) -> str:
        return 'qubit' if self.pauli is not None else 'fermionic'

    def operator(self, n_qubits: int) -> PauliSum:
        """Anti-Hermitian Pauli-sum image of the generator"""
        return _generator_operator(self, n_qubits)

    def label(self) -> str:
        if self.pauli is not None:
            return self.pauli.label()
        return f"A({','.join(str(i) for i in self.indices)})"

    def to_dict(self) -> Dict:
        data = {'kind': self.kind, 'indices': list(self.indices)}
        if self.pauli is not None:
            data['pauli'] = self.pauli.label()
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> 'ExcitationGenerator':
        pauli = PauliTerm.from_label(data['pauli']) if data.get('pauli') else None
        return cls(data['kind'], tuple(data['indices']), pauli)


@lru_cache(maxsize=4096)
def _generator_operator(generator: ExcitationGenerator, n_qubits: int) -> PauliSum:
    for index in generator.indices:
        _check_index(index, n_qubits)
    if generator.pauli is not None:
        if generator.pauli.n_qubits != n_qubits:
            raise OrbitalIndexError(
                f"Pauli generator on {generator.pauli.n_qubits} qubits used on {n_qubits}")
        return PauliSum(n_qubits, [generator.pauli.unit() * 1j])
    if generator.kind == 'single':
        p, q = generator.indices
        forward = fermion_product(((p, True), (q, False)), n_qubits)
    else:
        p, r, q, s = generator.indices
        forward = fermion_product(((p, True), (r, True), (q, False), (s, False)), n_qubits)
    return forward - forward.adjoint()


def jw_excitation_evolution(generator: ExcitationGenerator, theta: float,
                            n_qubits: Optional[int] = None) -> List[Tuple[PauliTerm, float]]:
    """Rotations (P_k, phi_k) with prod_k exp(-i phi_k/2 P_k) = exp(theta A)

    JW(A) = sum_k c_k P_k with imaginary c_k and mutually commuting P_k, so
    phi_k = 2 i theta c_k. Singles give angles of +-theta (two strings),
    doubles +-theta/4 (eight strings).
    """
    if n_qubits is None:
        n_qubits = generator.pauli.n_qubits if generator.pauli is not None else max(generator.indices) + 1
    rotations = []
    for term in generator.operator(n_qubits):
        angle = (2j * theta * term.coeff).real
        rotations.append((term.unit(), float(angle)))
    return rotations
