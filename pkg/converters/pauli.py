"""
Phase-tracked Pauli strings and coefficient-merged Pauli sums

Qubit k carries X when bit k of x_mask is set, Z when bit k of z_mask is set
and Y when both are. Text labels put qubit 0 rightmost ("XIYZ" has Z on
qubit 0 and X on qubit 3), matching the integer bit order of the masks and of
computational-basis indices.
"""

import json
from dataclasses import dataclass, replace
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.sparse

from errors import DimensionError

Masks = Tuple[int, int]

_I_POWERS = (1, 1j, -1, -1j)
_LETTERS = {(0, 0): 'I', (1, 0): 'X', (0, 1): 'Z', (1, 1): 'Y'}
_BITS = {letter: bits for bits, letter in _LETTERS.items()}


def _popcount(value: int) -> int:
    return bin(value).count('1')


def product_phase(x1: int, z1: int, x2: int, z2: int) -> complex:
    """Exact phase of P(x1,z1)·P(x2,z2) relative to P(x1^x2, z1^z2)"""
    # P(x,z) = i^{|x&z|} X^x Z^z and Z^z1 X^x2 = (-1)^{|z1&x2|} X^x2 Z^z1
    exponent = (_popcount(x1 & z1) + _popcount(x2 & z2) + 2 * _popcount(z1 & x2)
                - _popcount((x1 ^ x2) & (z1 ^ z2)))
    return _I_POWERS[exponent % 4]


def parity(values: np.ndarray, mask: int) -> np.ndarray:
    """Parity (0/1) of the bits of ``values & mask``, elementwise"""
    out = np.zeros(values.shape, dtype=np.int64)
    bit = 0
    while mask:
        if mask & 1:
            out ^= (values >> bit) & 1
        mask >>= 1
        bit += 1
    return out


_INDEX_CACHE: Dict[int, np.ndarray] = {}


def basis_indices(n_qubits: int) -> np.ndarray:
    if n_qubits not in _INDEX_CACHE:
        _INDEX_CACHE[n_qubits] = np.arange(1 << n_qubits, dtype=np.int64)
    return _INDEX_CACHE[n_qubits]


def pauli_action(x_mask: int, z_mask: int, n_qubits: int) -> Tuple[np.ndarray, np.ndarray]:
    """Columns and phases such that (P psi)[j] = phases[j] * psi[cols[j]]"""
    rows = basis_indices(n_qubits)
    cols = rows ^ x_mask
    signs = 1 - 2 * parity(cols, z_mask)
    phases = _I_POWERS[_popcount(x_mask & z_mask) % 4] * signs.astype(complex)
    return cols, phases


@dataclass(frozen=True)
class PauliTerm:
    """A single n-qubit Pauli string with a complex coefficient"""

    x_mask: int
    z_mask: int
    coeff: complex = 1.0
    n_qubits: int = 0

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> 'PauliTerm':
        x_mask = z_mask = 0
        n = len(label)
        for position, letter in enumerate(label.upper()):
            if letter not in _BITS:
                raise ValueError(f"Invalid Pauli letter {letter!r} in {label!r}")
            qubit = n - 1 - position
            xb, zb = _BITS[letter]
            x_mask |= xb << qubit
            z_mask |= zb << qubit
        return cls(x_mask, z_mask, complex(coeff), n)

    @classmethod
    def from_ops(cls, ops: Mapping[int, str], n_qubits: int, coeff: complex = 1.0) -> 'PauliTerm':
        """Build from a sparse {qubit: letter} mapping"""
        x_mask = z_mask = 0
        for qubit, letter in ops.items():
            if not 0 <= qubit < n_qubits:
                raise DimensionError(f"Qubit {qubit} outside register of {n_qubits}")
            xb, zb = _BITS[letter.upper()]
            x_mask |= xb << qubit
            z_mask |= zb << qubit
        return cls(x_mask, z_mask, complex(coeff), n_qubits)

    @property
    def masks(self) -> Masks:
        return self.x_mask, self.z_mask

    @property
    def support(self) -> int:
        return self.x_mask | self.z_mask

    @property
    def weight(self) -> int:
        return _popcount(self.support)

    @property
    def y_count(self) -> int:
        return _popcount(self.x_mask & self.z_mask)

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def letter(self, qubit: int) -> str:
        return _LETTERS[((self.x_mask >> qubit) & 1, (self.z_mask >> qubit) & 1)]

    def qubits(self) -> List[int]:
        return [q for q in range(self.n_qubits) if (self.support >> q) & 1]

    def label(self) -> str:
        return ''.join(self.letter(q) for q in reversed(range(self.n_qubits)))

    def unit(self) -> 'PauliTerm':
        return replace(self, coeff=1.0 + 0j)

    def commutes(self, other: 'PauliTerm') -> bool:
        return _popcount((self.x_mask & other.z_mask) ^ (self.z_mask & other.x_mask)) % 2 == 0

    def qubit_wise_commutes(self, other: 'PauliTerm') -> bool:
        overlap = self.support & other.support
        return ((self.x_mask ^ other.x_mask) & overlap) == 0 and ((self.z_mask ^ other.z_mask) & overlap) == 0

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        return PauliSum(self.n_qubits, [self]).to_sparse()

    def __mul__(self, other):
        if isinstance(other, PauliTerm):
            return pauli_multiply(self, other)
        return replace(self, coeff=self.coeff * other)

    __rmul__ = __mul__

    def __str__(self) -> str:
        return f"{_format_coeff(self.coeff)} {self.label()}"


def pauli_multiply(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Product of two Pauli terms with the exact ±1/±i phase"""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"Cannot multiply {a.n_qubits}-qubit and {b.n_qubits}-qubit Pauli terms")
    phase = product_phase(a.x_mask, a.z_mask, b.x_mask, b.z_mask)
    return PauliTerm(a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask, a.coeff * b.coeff * phase, a.n_qubits)


class PauliSum:
    """Coefficient-merged collection of Pauli terms on a fixed register

    Terms are merged eagerly; coefficients that cancel to exactly zero (or
    fall below ``atol``) are dropped so that equality and emptiness checks
    are exact.
    """

    __slots__ = ('n_qubits', '_terms', 'atol', 'discarded_weight', '_sparse')

    def __init__(self, n_qubits: int,
                 terms: Union[Mapping[Masks, complex], Iterable[PauliTerm]] = (),
                 atol: float = 0.0):
        self.n_qubits = n_qubits
        self.atol = atol
        self.discarded_weight = 0.0
        self._sparse = None
        merged: Dict[Masks, complex] = {}
        if isinstance(terms, Mapping):
            for masks, coeff in terms.items():
                merged[masks] = merged.get(masks, 0j) + complex(coeff)
        else:
            for term in terms:
                if term.n_qubits != n_qubits:
                    raise DimensionError(
                        f"Term on {term.n_qubits} qubits added to {n_qubits}-qubit sum")
                merged[term.masks] = merged.get(term.masks, 0j) + term.coeff
        self._terms = {m: c for m, c in merged.items() if c != 0 and abs(c) >= atol}

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> 'PauliSum':
        return cls(n_qubits, {(0, 0): coeff})

    @classmethod
    def from_labels(cls, pairs: Iterable[Tuple[complex, str]]) -> 'PauliSum':
        terms = [PauliTerm.from_label(label, coeff) for coeff, label in pairs]
        if not terms:
            raise ValueError("from_labels needs at least one term to fix the register size")
        return cls(terms[0].n_qubits, terms)

    @property
    def terms(self) -> Mapping[Masks, complex]:
        return MappingProxyType(self._terms)

    @property
    def identity_coeff(self) -> complex:
        return self._terms.get((0, 0), 0j)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[PauliTerm]:
        for (x, z) in sorted(self._terms):
            yield PauliTerm(x, z, self._terms[(x, z)], self.n_qubits)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, terms={len(self)})"

    def _check(self, other: 'PauliSum'):
        if self.n_qubits != other.n_qubits:
            raise DimensionError(f"Register mismatch: {self.n_qubits} vs {other.n_qubits} qubits")

    def __add__(self, other: 'PauliSum') -> 'PauliSum':
        self._check(other)
        merged = dict(self._terms)
        for masks, coeff in other._terms.items():
            merged[masks] = merged.get(masks, 0j) + coeff
        return PauliSum(self.n_qubits, merged)

    def __neg__(self) -> 'PauliSum':
        return PauliSum(self.n_qubits, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other: 'PauliSum') -> 'PauliSum':
        return self + (-other)

    def __mul__(self, other) -> 'PauliSum':
        if isinstance(other, PauliTerm):
            other = PauliSum(self.n_qubits, [other])
        if isinstance(other, PauliSum):
            self._check(other)
            acc: Dict[Masks, complex] = {}
            for (x1, z1), c1 in self._terms.items():
                for (x2, z2), c2 in other._terms.items():
                    key = (x1 ^ x2, z1 ^ z2)
                    acc[key] = acc.get(key, 0j) + c1 * c2 * product_phase(x1, z1, x2, z2)
            return PauliSum(self.n_qubits, acc)
        return PauliSum(self.n_qubits, {m: c * other for m, c in self._terms.items()})

    def __rmul__(self, other) -> 'PauliSum':
        return PauliSum(self.n_qubits, {m: other * c for m, c in self._terms.items()})

    def adjoint(self) -> 'PauliSum':
        return PauliSum(self.n_qubits, {m: np.conj(c) for m, c in self._terms.items()})

    def is_hermitian(self, atol: float = 1e-10) -> bool:
        return all(abs(c.imag) <= atol for c in self._terms.values())

    def max_imag(self) -> float:
        return max((abs(c.imag) for c in self._terms.values()), default=0.0)

    def real(self) -> 'PauliSum':
        """Drop imaginary parts (for sums already known to be Hermitian)"""
        return PauliSum(self.n_qubits, {m: complex(c.real) for m, c in self._terms.items()})

    def non_identity(self) -> 'PauliSum':
        return PauliSum(self.n_qubits, {m: c for m, c in self._terms.items() if m != (0, 0)})

    def one_norm(self, include_identity: bool = True) -> float:
        return float(sum(abs(c) for m, c in self._terms.items() if include_identity or m != (0, 0)))

    def allclose(self, other: 'PauliSum', atol: float = 1e-10) -> bool:
        self._check(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0j) - other._terms.get(k, 0j)) <= atol for k in keys)

    # -- matrix forms -----------------------------------------------------

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        """Sparse matrix in the computational basis (qubit 0 least significant); cached"""
        if self._sparse is None:
            dim = 1 << self.n_qubits
            if not self._terms:
                self._sparse = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
                return self._sparse
            rows = basis_indices(self.n_qubits)
            all_rows, all_cols, all_data = [], [], []
            for (x, z), coeff in self._terms.items():
                cols, phases = pauli_action(x, z, self.n_qubits)
                all_rows.append(rows)
                all_cols.append(cols)
                all_data.append(coeff * phases)
            self._sparse = scipy.sparse.csr_matrix(
                (np.concatenate(all_data), (np.concatenate(all_rows), np.concatenate(all_cols))),
                shape=(dim, dim))
        return self._sparse

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.to_sparse() @ vector

    # -- serialisation ----------------------------------------------------

    def to_text(self) -> str:
        """One "coeff label" record per line; coefficients round-trip exactly"""
        return ''.join(f"{term}\n" for term in self)

    @classmethod
    def from_text(cls, text: str, n_qubits: Optional[int] = None) -> 'PauliSum':
        terms = []
        for line_number, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            try:
                coeff_text, label = line.split()
                terms.append(PauliTerm.from_label(label, complex(coeff_text)))
            except ValueError as e:
                raise ValueError(f"line {line_number}: cannot parse Pauli record {line!r}: {e}")
        if n_qubits is None:
            if not terms:
                raise ValueError("Empty Pauli text needs an explicit n_qubits")
            n_qubits = terms[0].n_qubits
        return cls(n_qubits, terms)

    def to_dict(self) -> Dict:
        return {
            'n_qubits': self.n_qubits,
            'terms': [{'pauli': t.label(), 're': t.coeff.real, 'im': t.coeff.imag} for t in self],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'PauliSum':
        n_qubits = data['n_qubits']
        terms = [PauliTerm.from_label(t['pauli'], complex(t['re'], t.get('im', 0.0)))
                 for t in data['terms']]
        return cls(n_qubits, terms)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> 'PauliSum':
        return cls.from_dict(json.loads(text))


def _format_coeff(coeff: complex) -> str:
    if coeff.imag == 0:
        return repr(coeff.real)
    return repr(complex(coeff)).strip('()')


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """AB - BA; commuting term pairs are skipped exactly"""
    a._check(b)
    acc: Dict[Masks, complex] = {}
    for (x1, z1), c1 in a.terms.items():
        for (x2, z2), c2 in b.terms.items():
            # anticommuting pairs give 2·P1·P2, commuting pairs cancel
            if _popcount((x1 & z2) ^ (z1 & x2)) % 2 == 0:
                continue
            key = (x1 ^ x2, z1 ^ z2)
            acc[key] = acc.get(key, 0j) + 2 * c1 * c2 * product_phase(x1, z1, x2, z2)
    return PauliSum(a.n_qubits, acc)


def prune(pauli_sum: PauliSum, eps: float) -> PauliSum:
    """Remove terms with |coeff| < eps and record the discarded weight"""
    if eps < 0:
        raise ValueError(f"Pruning threshold must be >= 0, got {eps}")
    kept = {m: c for m, c in pauli_sum.terms.items() if abs(c) >= eps}
    pruned = PauliSum(pauli_sum.n_qubits, kept)
    pruned.discarded_weight = pauli_sum.discarded_weight + float(
        sum(abs(c) for m, c in pauli_sum.terms.items() if m not in kept))
    return pruned
