"""
Dense Fock-space model of the double unitary coupled-cluster downfolding

Basis index = occupation bit pattern over spin orbitals (bit p = orbital p),
with a_p |n> = (-1)^{sum_{k<p} n_k} |n - e_p>, the same sign convention as the
Jordan-Wigner mapping. Systems are capped at 8 spin orbitals.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse

from errors import DimensionError, ExternalityError, OrbitalIndexError
from extractors.fcidump import FermionHamiltonian, expand_to_spin_orbitals, reference_occupation

logger = logging.getLogger(__name__)

MAX_SPIN_ORBITALS = 8
HERMITIAN_ATOL = 1e-10

Amplitude = Tuple[Tuple[int, ...], float]


@dataclass
class DenseOperator:
    """Matrix over the Fock space (or a subspace of it) with a symmetry flag"""

    matrix: np.ndarray
    n_spin_orbitals: int
    symmetry: str = 'hermitian'

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, atol: float = HERMITIAN_ATOL) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, atol=atol, rtol=0))

    def is_anti_hermitian(self, atol: float = HERMITIAN_ATOL) -> bool:
        return bool(np.allclose(self.matrix, -self.matrix.conj().T, atol=atol, rtol=0))

    def eigenvalues(self) -> np.ndarray:
        return scipy.linalg.eigvalsh(self.matrix)

    def to_dict(self) -> Dict:
        return {
            'n_spin_orbitals': self.n_spin_orbitals,
            'symmetry': self.symmetry,
            'dimension': self.dimension,
            're': self.matrix.real.tolist(),
            'im': self.matrix.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'DenseOperator':
        matrix = np.array(data['re']) + 1j * np.array(data['im'])
        return cls(matrix, data['n_spin_orbitals'], data.get('symmetry', 'hermitian'))


@dataclass(frozen=True)
class ActiveSpaceDef:
    n_spin_orbitals: int
    active: Tuple[int, ...]
    reference: Tuple[int, ...]

    def __post_init__(self):
        for index in self.active + self.reference:
            if not 0 <= index < self.n_spin_orbitals:
                raise OrbitalIndexError(f"Spin orbital {index} outside {self.n_spin_orbitals}")

    @classmethod
    def frontier(cls, n_spatial: int, n_electrons: int, active_spatial: int,
                 ms2: Optional[int] = None) -> 'ActiveSpaceDef':
        """Active window of spatial orbitals around the Fermi level"""
        ms2 = n_electrons % 2 if ms2 is None else ms2
        reference = reference_occupation(n_electrons, ms2, 2 * n_spatial)
        n_occ = (n_electrons + 1) // 2
        start = max(0, min(n_occ - math.ceil(active_spatial / 2), n_spatial - active_spatial))
        active = tuple(2 * p + s for p in range(start, start + active_spatial) for s in (0, 1))
        return cls(2 * n_spatial, active, tuple(reference))

    @property
    def inactive(self) -> Tuple[int, ...]:
        return tuple(p for p in range(self.n_spin_orbitals) if p not in self.active)

    def _mask(self, indices: Iterable[int]) -> int:
        mask = 0
        for p in indices:
            mask |= 1 << p
        return mask

    def model_space(self) -> np.ndarray:
        """Determinants whose inactive occupations match the reference (P + Q_int)"""
        inactive = self._mask(self.inactive)
        reference = self._mask(self.reference) & inactive
        indices = np.arange(1 << self.n_spin_orbitals)
        return indices[(indices & inactive) == reference]

    def projector(self) -> np.ndarray:
        diagonal = np.zeros(1 << self.n_spin_orbitals)
        diagonal[self.model_space()] = 1.0
        return np.diag(diagonal)


def _check_size(n_spin_orbitals: int):
    if n_spin_orbitals > MAX_SPIN_ORBITALS:
        raise DimensionError(f"Dense Fock space is capped at {MAX_SPIN_ORBITALS} spin orbitals, "
                             f"got {n_spin_orbitals}")


@lru_cache(maxsize=None)
def annihilation_matrix(p: int, n_spin_orbitals: int) -> scipy.sparse.csr_matrix:
    _check_size(n_spin_orbitals)
    if not 0 <= p < n_spin_orbitals:
        raise OrbitalIndexError(f"Spin orbital {p} outside {n_spin_orbitals}")
    dim = 1 << n_spin_orbitals
    columns = np.array([b for b in range(dim) if (b >> p) & 1], dtype=np.int64)
    rows = columns ^ (1 << p)
    signs = np.array([(-1) ** bin(b & ((1 << p) - 1)).count('1') for b in columns], dtype=float)
    return scipy.sparse.csr_matrix((signs, (rows, columns)), shape=(dim, dim))


def creation_matrix(p: int, n_spin_orbitals: int) -> scipy.sparse.csr_matrix:
    return annihilation_matrix(p, n_spin_orbitals).T.tocsr()


def number_matrix(n_spin_orbitals: int, indices: Optional[Iterable[int]] = None) -> np.ndarray:
    indices = range(n_spin_orbitals) if indices is None else list(indices)
    mask = 0
    for p in indices:
        mask |= 1 << p
    return np.diag([float(bin(b & mask).count('1')) for b in range(1 << n_spin_orbitals)])


def _one_body(coefficients: np.ndarray, n: int) -> scipy.sparse.csr_matrix:
    dim = 1 << n
    result = scipy.sparse.csr_matrix((dim, dim))
    for p, q in zip(*np.nonzero(coefficients)):
        result = result + coefficients[p, q] * (creation_matrix(p, n) @ annihilation_matrix(q, n))
    return result


def hamiltonian_matrix(hamiltonian: FermionHamiltonian) -> DenseOperator:
    """E_core + sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q as a dense matrix"""
    spin = expand_to_spin_orbitals(hamiltonian)
    n = spin.n_orbitals
    _check_size(n)
    h2 = np.asarray(spin.h2)
    matrix = _one_body(np.asarray(spin.h1), n)
    for p, q, r, s in zip(*np.nonzero(h2)):
        if p == r or q == s:
            continue
        product = (creation_matrix(p, n) @ creation_matrix(r, n)
                   @ annihilation_matrix(s, n) @ annihilation_matrix(q, n))
        matrix = matrix + 0.5 * h2[p, q, r, s] * product
    dense = matrix.toarray() + spin.e_core * np.eye(1 << n)
    return DenseOperator(dense, n)


def _validate_external(indices: Sequence[int], space: ActiveSpaceDef):
    if len(set(indices)) != len(indices):
        raise OrbitalIndexError(f"Repeated index in excitation {tuple(indices)}")
    if all(p in space.active for p in indices):
        raise ExternalityError(f"Excitation {tuple(indices)} lies entirely in the active space")


def build_sigma(amplitudes: Sequence[Amplitude], space: ActiveSpaceDef) -> DenseOperator:
    """sigma_ext = T_ext - T_ext^dagger

    Singles are (a, i) -> t a+_a a_i, doubles (a, b, j, i) -> t a+_a a+_b a_j a_i.
    Every excitation must touch at least one inactive spin orbital.
    """
    n = space.n_spin_orbitals
    _check_size(n)
    dim = 1 << n
    t = scipy.sparse.csr_matrix((dim, dim))
    for indices, value in amplitudes:
        _validate_external(indices, space)
        if len(indices) == 2:
            a, i = indices
            term = creation_matrix(a, n) @ annihilation_matrix(i, n)
        elif len(indices) == 4:
            a, b, j, i = indices
            term = creation_matrix(a, n) @ creation_matrix(b, n) @ annihilation_matrix(j, n) @ annihilation_matrix(i, n)
        else:
            raise ValueError(f"Excitations need 2 or 4 indices, got {tuple(indices)}")
        t = t + value * term
    dense = t.toarray()
    return DenseOperator(dense - dense.conj().T, n, 'anti-hermitian')


def random_external_amplitudes(space: ActiveSpaceDef, scale: float = 0.1, seed: int = 0) -> List[Amplitude]:
    """Spin-conserving occupied -> virtual amplitudes that touch the inactive space"""
    rng = np.random.default_rng(seed)
    occupied = list(space.reference)
    virtual = [p for p in range(space.n_spin_orbitals) if p not in occupied]
    amplitudes: List[Amplitude] = []
    for i in occupied:
        for a in virtual:
            if a % 2 == i % 2 and not (a in space.active and i in space.active):
                amplitudes.append(((a, i), float(rng.normal(scale=scale))))
    for x, i in enumerate(occupied):
        for j in occupied[x + 1:]:
            for y, a in enumerate(virtual):
                for b in virtual[y + 1:]:
                    if sorted((a % 2, b % 2)) != sorted((i % 2, j % 2)):
                        continue
                    if all(p in space.active for p in (a, b, i, j)):
                        continue
                    amplitudes.append(((a, b, j, i), float(rng.normal(scale=scale))))
    return amplitudes


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def _hermitize(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


def fock_normal_parts(hamiltonian: FermionHamiltonian, reference: Sequence[int]) -> Tuple[DenseOperator, DenseOperator]:
    """(H_N, F_N): H and the reference Fock operator minus their reference expectations

    F_pq = h_pq + sum_{i occ} [(pq|ii) - (pi|iq)] in spin orbitals.
    """
    n = expand_to_spin_orbitals(hamiltonian).n_orbitals
    fock = fock_matrix(hamiltonian, reference)
    reference_index = sum(1 << i for i in reference)
    h_dense = hamiltonian_matrix(hamiltonian).matrix
    f_dense = _one_body(fock, n).toarray()
    eye = np.eye(1 << n)
    h_n = h_dense - h_dense[reference_index, reference_index].real * eye
    f_n = f_dense - f_dense[reference_index, reference_index].real * eye
    return DenseOperator(h_n, n), DenseOperator(f_n, n)


def fock_matrix(hamiltonian: FermionHamiltonian, reference: Sequence[int]) -> np.ndarray:
    """Spin-orbital Fock matrix of the reference determinant"""
    spin = expand_to_spin_orbitals(hamiltonian)
    h2 = np.asarray(spin.h2)
    density = np.zeros(spin.h1.shape)
    for i in reference:
        density[i, i] = 1.0
    coulomb = np.einsum('pqrs,rs->pq', h2, density)
    exchange = np.einsum('psrq,rs->pq', h2, density)
    return np.asarray(spin.h1) + coulomb - exchange


def bch_transform(hamiltonian: DenseOperator, sigma: DenseOperator, mode: str = 'exact',
                  rank: Optional[int] = None,
                  normal_parts: Optional[Tuple[DenseOperator, DenseOperator]] = None) -> DenseOperator:
    """exp(-sigma) H exp(sigma) exactly, through ``rank`` nested commutators, or as A7"""
    h, s = hamiltonian.matrix, sigma.matrix
    if not sigma.is_anti_hermitian():
        raise ValueError("sigma must be anti-Hermitian")

    if mode == 'exact':
        result = scipy.linalg.expm(-s) @ h @ scipy.linalg.expm(s)
    elif mode == 'rank':
        if rank is None or rank < 0:
            raise ValueError(f"rank mode needs a non-negative rank, got {rank}")
        result = h.astype(complex)
        nested = h.astype(complex)
        for k in range(1, rank + 1):
            nested = commutator(nested, s)
            result = result + nested / math.factorial(k)
    elif mode == 'a7':
        if normal_parts is None:
            raise ValueError("A7 mode needs the normal-ordered (H_N, F_N) pair")
        h_n, f_n = (part.matrix for part in normal_parts)
        first = commutator(h_n, s)
        triple_f = commutator(commutator(commutator(f_n, s), s), s)
        result = h + first + 0.5 * commutator(first, s) + triple_f / 6.0
    else:
        raise ValueError(f"BCH mode must be exact, rank or a7, got {mode!r}")

    return DenseOperator(_hermitize(result), hamiltonian.n_spin_orbitals)


def project_active(transformed: DenseOperator, space: ActiveSpaceDef) -> DenseOperator:
    """Rows and columns of the model-space determinants, in ascending index order"""
    keep = space.model_space()
    return DenseOperator(transformed.matrix[np.ix_(keep, keep)], transformed.n_spin_orbitals)


def sector_lowest(operator: DenseOperator, basis: np.ndarray, n_electrons: int) -> float:
    """Lowest eigenvalue among basis determinants holding ``n_electrons``"""
    counts = np.array([bin(int(b)).count('1') for b in basis])
    keep = np.nonzero(counts == n_electrons)[0]
    if keep.size == 0:
        raise ValueError(f"No determinant with {n_electrons} electrons in the basis")
    return float(scipy.linalg.eigvalsh(operator.matrix[np.ix_(keep, keep)])[0])


def decoupling_generator(hamiltonian: DenseOperator, space: ActiveSpaceDef) -> DenseOperator:
    """Anti-Hermitian sigma with exp(-sigma) H exp(sigma) diagonal

    Within each particle-number sector the eigenvectors, sorted by energy,
    are sent to the model-space determinants first and to the rest after, so
    the projected Hamiltonian carries the lowest eigenvalues of every sector.
    """
    n = space.n_spin_orbitals
    dim = 1 << n
    model = set(int(i) for i in space.model_space())
    counts = np.array([bin(b).count('1') for b in range(dim)])
    unitary = np.zeros((dim, dim), dtype=complex)
    for electrons in range(n + 1):
        sector = np.nonzero(counts == electrons)[0]
        block = hamiltonian.matrix[np.ix_(sector, sector)]
        _, vectors = scipy.linalg.eigh(_hermitize(block))
        targets = [b for b in sector if b in model] + [b for b in sector if b not in model]
        for column, target in enumerate(targets):
            vector = vectors[:, column]
            # phase so the vector overlaps its target determinant positively
            overlap = vector[list(sector).index(target)]
            if abs(overlap) > 1e-14:
                vector = vector * (abs(overlap) / overlap)
            unitary[sector, target] = vector

    # unitary is normal, so its complex Schur form is diagonal
    schur, basis = scipy.linalg.schur(unitary, output='complex')
    phases = np.angle(np.diag(schur))
    sigma = basis @ np.diag(1j * phases) @ basis.conj().T
    sigma = (sigma - sigma.conj().T) / 2
    return DenseOperator(sigma, n, 'anti-hermitian')


def a7_error_scaling(hamiltonian: DenseOperator, sigma: DenseOperator,
                     normal_parts: Tuple[DenseOperator, DenseOperator],
                     scales: Sequence[float]) -> Tuple[List[float], List[float], float]:
    """Frobenius error of A7 against the exact transform for scaled sigma, plus log-log slope"""
    errors = []
    for scale in scales:
        scaled = DenseOperator(scale * sigma.matrix, sigma.n_spin_orbitals, 'anti-hermitian')
        exact = bch_transform(hamiltonian, scaled, 'exact').matrix
        approx = bch_transform(hamiltonian, scaled, 'a7', normal_parts=normal_parts).matrix
        errors.append(float(np.linalg.norm(approx - exact)))
    slope = float(np.polyfit(np.log(scales), np.log(errors), 1)[0])
    logger.info(f"A7 error scaling over {len(scales)} scales: slope {slope:.3f}")
    return list(scales), errors, slope
