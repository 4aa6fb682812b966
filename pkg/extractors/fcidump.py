"""
FCIDUMP ingestion - parses downfolded Hamiltonians into in-memory integrals

Two-body integrals are kept in chemist notation (pq|rs), exactly as FCIDUMP
stores them. The second-quantized operator assembled from them is

    E_core + sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q

Spin orbitals are interleaved (0a, 0b, 1a, 1b, ...).
"""

import itertools
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, TextIO, Tuple, Union

import numpy as np

from errors import InconsistentIntegral, OrbitalIndexError, ParseError

logger = logging.getLogger(__name__)

INTEGRAL_TOLERANCE = 1e-10

# (coefficient, ((index, is_creation), ...)) products outside the tensors
ExtraTerm = Tuple[complex, Tuple[Tuple[int, bool], ...]]


@dataclass(frozen=True, eq=False)
class FermionHamiltonian:
    """Scalar, one- and two-body parts of an active-space effective Hamiltonian"""

    n_spatial: int
    n_electrons: int
    ms2: int
    e_core: float
    h1: np.ndarray
    h2: np.ndarray
    orbital_symmetries: Tuple[int, ...] = ()
    isym: int = 1
    spin_orbital: bool = False
    permutational_symmetry: str = '8-fold'
    basis_detection: str = 'declared'
    extra_terms: Tuple[ExtraTerm, ...] = ()

    def __post_init__(self):
        n = self.h1.shape[0]
        if self.h1.shape != (n, n) or self.h2.shape != (n, n, n, n):
            raise ValueError(f"Integral shapes {self.h1.shape} / {self.h2.shape} are inconsistent")
        if not (np.all(np.isfinite(self.h1)) and np.all(np.isfinite(self.h2)) and np.isfinite(self.e_core)):
            raise ValueError("Hamiltonian contains non-finite coefficients")
        if self.n_electrons > 2 * self.n_spatial:
            raise ValueError(f"{self.n_electrons} electrons do not fit in {self.n_spatial} spatial orbitals")
        for array in (self.h1, self.h2):
            array.flags.writeable = False

    @property
    def n_orbitals(self) -> int:
        """Number of orbitals the tensors are indexed by (spatial or spin)"""
        return self.h1.shape[0]

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n_spatial

    @property
    def orbital_basis(self) -> str:
        return 'spin' if self.spin_orbital else 'spatial'

    def reference_occupation(self) -> List[int]:
        """Occupied spin orbitals of the Hartree-Fock determinant (interleaved ordering)"""
        return reference_occupation(self.n_electrons, self.ms2, self.n_spin_orbitals)


@dataclass
class SymmetryReport:
    """Diagnostic result of validate_symmetries"""

    hermitian: bool
    number_conserving: bool
    max_violation: float
    worst_entry: str
    number_violation: float
    orbital_basis: str
    basis_detection: str
    permutational_symmetry: str

    def to_dict(self) -> Dict:
        return {
            'hermitian': self.hermitian,
            'number_conserving': self.number_conserving,
            'max_violation': self.max_violation,
            'worst_entry': self.worst_entry,
            'number_violation': self.number_violation,
            'orbital_basis': self.orbital_basis,
            'basis_detection': self.basis_detection,
            'permutational_symmetry': self.permutational_symmetry,
        }


def reference_occupation(n_electrons: int, ms2: int, n_spin_orbitals: int) -> List[int]:
    """Lowest alpha orbitals on even qubits, lowest beta orbitals on odd qubits"""
    if (n_electrons + ms2) % 2:
        raise ValueError(f"NELEC={n_electrons} and MS2={ms2} have different parity")
    n_alpha = (n_electrons + ms2) // 2
    n_beta = n_electrons - n_alpha
    if max(n_alpha, n_beta) > n_spin_orbitals // 2 or min(n_alpha, n_beta) < 0:
        raise ValueError(f"Cannot place {n_alpha} alpha / {n_beta} beta electrons "
                         f"in {n_spin_orbitals} spin orbitals")
    return sorted([2 * i for i in range(n_alpha)] + [2 * i + 1 for i in range(n_beta)])


# -- permutational symmetry -------------------------------------------------

def _orbit4(key: Tuple[int, int, int, int]) -> Tuple[Tuple[int, int, int, int], ...]:
    i, j, k, l = key
    return ((i, j, k, l), (j, i, l, k), (k, l, i, j), (l, k, j, i))


def _orbit8(key: Tuple[int, int, int, int]) -> Tuple[Tuple[int, int, int, int], ...]:
    i, j, k, l = key
    return _orbit4(key) + ((j, i, k, l), (i, j, l, k), (l, k, i, j), (k, l, j, i))


def _store(table: Dict, keys: Iterable, value: float, line_number: int, label: str):
    for key in keys:
        existing = table.get(key)
        if existing is not None and abs(existing - value) > INTEGRAL_TOLERANCE:
            raise InconsistentIntegral(
                f"{label} {tuple(i + 1 for i in key)} = {value!r} conflicts with earlier value {existing!r}",
                line_number)
        if existing is None:
            table[key] = value


def _eightfold_consistent(two_body: Dict) -> bool:
    for key, value in two_body.items():
        for partner in _orbit8(key):
            other = two_body.get(partner)
            if other is not None and abs(other - value) > INTEGRAL_TOLERANCE:
                return False
    return True


# -- header -----------------------------------------------------------------

_KEY_PATTERN = re.compile(r'([A-Za-z_][A-Za-z0-9_]*)\s*=')


def _parse_namelist(header: str, line_number: int) -> Dict[str, List[str]]:
    body = re.sub(r'&FCI|&END|/', ' ', header, flags=re.IGNORECASE)
    matches = list(_KEY_PATTERN.finditer(body))
    if not matches:
        raise ParseError("namelist header has no KEY=VALUE entries", line_number)
    entries = {}
    leading = body[:matches[0].start()].strip(' ,\n\t')
    if leading:
        raise ParseError(f"unexpected text {leading!r} in namelist header", line_number)
    for index, match in enumerate(matches):
        end = matches[index + 1].start() if index + 1 < len(matches) else len(body)
        raw = body[match.end():end]
        entries[match.group(1).upper()] = [v.strip() for v in raw.replace('\n', ',').split(',') if v.strip()]
    return entries


def _header_int(entries: Dict[str, List[str]], key: str, line_number: int,
                default: Optional[int] = None) -> int:
    values = entries.get(key)
    if not values:
        if default is None:
            raise ParseError(f"namelist header is missing {key}", line_number)
        return default
    try:
        return int(values[0])
    except ValueError:
        raise ParseError(f"{key}={values[0]!r} is not an integer", line_number)


def _detect_spin_orbitals(h1: np.ndarray, h2: np.ndarray) -> Tuple[bool, str]:
    n = h1.shape[0]
    if n % 2:
        return False, 'auto: odd NORB cannot hold interleaved spin orbitals'
    p, q, r, s = np.nonzero(np.abs(h2) > 0)
    if p.size == 0:
        return False, 'auto: no two-body entries, assuming spatial orbitals'
    if np.any(p % 2 != q % 2) or np.any(r % 2 != s % 2):
        return False, 'auto: spin-mixing (pq|rs) entries present, spatial orbitals'
    a, b = np.nonzero(np.abs(h1) > 0)
    if np.any(a % 2 != b % 2):
        return False, 'auto: spin-mixing h1 entries present, spatial orbitals'
    return True, 'auto: all entries obey interleaved spin selection rules, spin orbitals'


# -- public API -------------------------------------------------------------

def parse_fcidump(text: Union[str, TextIO], orbital_basis: str = 'auto',
                  expected_spatial: Optional[int] = None) -> FermionHamiltonian:
    """Parse FCIDUMP text into a FermionHamiltonian (indices become 0-based here)

    ``orbital_basis`` is auto, spatial or spin. With ``expected_spatial`` the
    auto mode compares NORB against the active-space size instead of
    inspecting the integrals.
    """
    if not isinstance(text, str):
        text = text.read()
    lines = text.splitlines()

    # Namelist header
    start = next((i for i, line in enumerate(lines) if line.strip()), None)
    if start is None or not lines[start].strip().upper().startswith('&FCI'):
        raise ParseError("file must begin with an &FCI namelist header", (start or 0) + 1)
    end = None
    for i in range(start, len(lines)):
        stripped = lines[i].strip().upper()
        if '&END' in stripped or stripped == '/' or (i > start and stripped.endswith('/')):
            end = i
            break
        if i == start and stripped.endswith('/'):
            end = i
            break
    if end is None:
        raise ParseError("namelist header is not terminated by &END or /", len(lines))

    entries = _parse_namelist('\n'.join(lines[start:end + 1]), start + 1)
    if _header_int(entries, 'IUHF', start + 1, default=0):
        raise ParseError("unrestricted (IUHF) FCIDUMP files are not supported", start + 1)
    norb = _header_int(entries, 'NORB', start + 1)
    nelec = _header_int(entries, 'NELEC', start + 1)
    ms2 = _header_int(entries, 'MS2', start + 1, default=0)
    isym = _header_int(entries, 'ISYM', start + 1, default=1)
    try:
        orbsym = tuple(int(v) for v in entries.get('ORBSYM', []))
    except ValueError:
        raise ParseError("ORBSYM must be a list of integers", start + 1)
    if norb < 1:
        raise ParseError(f"NORB must be positive, got {norb}", start + 1)

    # Integral records
    one_body: Dict[Tuple[int, int], float] = {}
    two_body: Dict[Tuple[int, int, int, int], float] = {}
    e_core = 0.0
    core_line = None
    skipped = 0

    for line_number in range(end + 2, len(lines) + 1):
        line = lines[line_number - 1].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ParseError(f"expected 'value i j k l', got {line!r}", line_number)
        try:
            value = float(fields[0].replace('D', 'E').replace('d', 'e'))
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError:
            raise ParseError(f"cannot read integral record {line!r}", line_number)
        if not np.isfinite(value):
            raise ParseError(f"non-finite integral value {fields[0]!r}", line_number)
        for index in (i, j, k, l):
            if not 0 <= index <= norb:
                raise OrbitalIndexError(
                    f"line {line_number}: orbital index {index} outside [1, {norb}]")

        if i and j and k and l:
            _store(two_body, _orbit4((i - 1, j - 1, k - 1, l - 1)), value, line_number, 'two-body integral')
        elif i and j and not k and not l:
            _store(one_body, ((i - 1, j - 1), (j - 1, i - 1)), value, line_number, 'one-body integral')
        elif not (i or j or k or l):
            if core_line is not None and abs(e_core - value) > INTEGRAL_TOLERANCE:
                raise InconsistentIntegral(
                    f"core energy {value!r} conflicts with {e_core!r} from line {core_line}", line_number)
            e_core, core_line = value, line_number
        else:
            # orbital energies and other auxiliary records
            skipped += 1

    if skipped:
        logger.debug(f"Skipped {skipped} auxiliary FCIDUMP records")

    symmetry = '4-fold'
    if _eightfold_consistent(two_body):
        symmetry = '8-fold'
        for key, value in list(two_body.items()):
            for partner in _orbit8(key):
                two_body.setdefault(partner, value)

    h1 = np.zeros((norb, norb))
    for (p, q), value in one_body.items():
        h1[p, q] = value
    h2 = np.zeros((norb, norb, norb, norb))
    for key, value in two_body.items():
        h2[key] = value

    if orbital_basis == 'spin':
        spin, detection = True, 'declared spin orbitals'
    elif orbital_basis == 'spatial':
        spin, detection = False, 'declared spatial orbitals'
    elif orbital_basis == 'auto' and expected_spatial is not None:
        if norb == 2 * expected_spatial:
            spin, detection = True, f'auto: NORB={norb} is twice the {expected_spatial}-orbital active space'
        else:
            spin, detection = False, f'auto: NORB={norb} matches the {expected_spatial}-orbital active space'
    elif orbital_basis == 'auto':
        spin, detection = _detect_spin_orbitals(h1, h2)
    else:
        raise ValueError(f"orbital_basis must be auto, spatial or spin, got {orbital_basis!r}")

    n_spatial = norb // 2 if spin else norb
    logger.info(f"Parsed FCIDUMP: NORB={norb}, NELEC={nelec}, MS2={ms2}, "
                f"{len(one_body)} one-body / {len(two_body)} two-body entries ({symmetry}), {detection}")

    try:
        return FermionHamiltonian(
            n_spatial=n_spatial,
            n_electrons=nelec,
            ms2=ms2,
            e_core=e_core,
            h1=h1,
            h2=h2,
            orbital_symmetries=orbsym,
            isym=isym,
            spin_orbital=spin,
            permutational_symmetry=symmetry,
            basis_detection=detection,
        )
    except ValueError as e:
        raise ParseError(str(e), start + 1)


def read_fcidump(path: Union[str, Path], orbital_basis: str = 'auto',
                 expected_spatial: Optional[int] = None) -> FermionHamiltonian:
    """Parse an FCIDUMP file from disk"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except (OSError, UnicodeDecodeError) as e:
        raise ParseError(f"Cannot read {path}: {e}") from e
    return parse_fcidump(text, orbital_basis, expected_spatial)


def write_fcidump(hamiltonian: FermionHamiltonian) -> str:
    """Serialise to FCIDUMP text with 17 significant digits"""
    n = hamiltonian.n_orbitals
    h1, h2 = hamiltonian.h1, hamiltonian.h2
    orbsym = hamiltonian.orbital_symmetries or (1,) * n
    lines = [
        f" &FCI NORB={n},NELEC={hamiltonian.n_electrons},MS2={hamiltonian.ms2},",
        f"  ORBSYM={','.join(str(s) for s in orbsym)},",
        f"  ISYM={hamiltonian.isym},",
        " &END",
    ]
    record = "{: .16E} {:4d} {:4d} {:4d} {:4d}"

    eightfold = all(np.array_equal(h2, h2.transpose(perm))
                    for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)))
    for key in itertools.product(range(n), repeat=4):
        if eightfold:
            if key != min(_orbit8(key)) or h2[key] == 0:
                continue
        else:
            if key != min(_orbit4(key)) or not any(h2[p] != 0 for p in _orbit8(key)):
                continue
        lines.append(record.format(h2[key], *(i + 1 for i in key)))

    if not np.array_equal(h1, h1.T):
        logger.warning("h1 is not symmetric; only the lower triangle is written")
    for p in range(n):
        for q in range(p + 1):
            if h1[p, q] != 0:
                lines.append(record.format(h1[p, q], p + 1, q + 1, 0, 0))

    lines.append(record.format(hamiltonian.e_core, 0, 0, 0, 0))
    if hamiltonian.extra_terms:
        logger.warning(f"{len(hamiltonian.extra_terms)} extra terms cannot be expressed in FCIDUMP and were dropped")
    return '\n'.join(lines) + '\n'


def expand_to_spin_orbitals(hamiltonian: FermionHamiltonian) -> FermionHamiltonian:
    """Restricted spatial integrals -> interleaved spin-orbital integrals"""
    if hamiltonian.spin_orbital:
        return hamiltonian
    n = hamiltonian.n_spatial
    h1 = np.zeros((2 * n, 2 * n))
    h2 = np.zeros((2 * n,) * 4)
    for sigma in (0, 1):
        h1[sigma::2, sigma::2] = hamiltonian.h1
        for tau in (0, 1):
            h2[sigma::2, sigma::2, tau::2, tau::2] = hamiltonian.h2
    orbsym = tuple(s for s in hamiltonian.orbital_symmetries for _ in (0, 1))
    return replace(hamiltonian, h1=h1, h2=h2, orbital_symmetries=orbsym, spin_orbital=True)


def validate_symmetries(hamiltonian: FermionHamiltonian,
                        prune_threshold: float = INTEGRAL_TOLERANCE) -> SymmetryReport:
    """Hermiticity of the tensors plus particle-number conservation of the mapped operator"""
    from converters.jordan_wigner import check_number_symmetry, jordan_wigner, number_violation

    h1, h2 = hamiltonian.h1, hamiltonian.h2
    candidates = [
        (np.abs(h1 - h1.T), 'h1(p,q) vs h1(q,p)'),
        (np.abs(h2 - h2.transpose(1, 0, 3, 2)), '(pq|rs) vs (qp|sr)'),
        (np.abs(h2 - h2.transpose(2, 3, 0, 1)), '(pq|rs) vs (rs|pq)'),
    ]
    max_violation, worst_entry = 0.0, 'none'
    for diff, description in candidates:
        if diff.size and diff.max() > max_violation:
            max_violation = float(diff.max())
            index = tuple(int(i) + 1 for i in np.unravel_index(np.argmax(diff), diff.shape))
            worst_entry = f"{description} at {index}"

    mapped = jordan_wigner(expand_to_spin_orbitals(hamiltonian), prune_threshold=0.0)
    hermitian = max_violation <= INTEGRAL_TOLERANCE and mapped.max_imag() <= INTEGRAL_TOLERANCE
    conserving = check_number_symmetry(mapped, mapped.n_qubits)
    report = SymmetryReport(
        hermitian=hermitian,
        number_conserving=conserving,
        max_violation=max_violation,
        worst_entry=worst_entry,
        number_violation=number_violation(mapped),
        orbital_basis=hamiltonian.orbital_basis,
        basis_detection=hamiltonian.basis_detection,
        permutational_symmetry=hamiltonian.permutational_symmetry,
    )
    if not (report.hermitian and report.number_conserving):
        logger.warning(f"Symmetry check failed: hermitian={report.hermitian}, "
                       f"number_conserving={report.number_conserving}, worst {worst_entry}")
    return report


def random_hamiltonian(n_spatial: int, n_electrons: int, seed: int = 0,
                       scale: float = 0.5, rank: int = 3) -> FermionHamiltonian:
    """Seeded Hamiltonian with exactly 8-fold symmetric real integrals"""
    rng = np.random.default_rng(seed)
    a = rng.normal(scale=scale, size=(n_spatial, n_spatial))
    h1 = (a + a.T) / 2 + np.diag(np.sort(rng.uniform(-2.0, 1.0, size=n_spatial)))
    h2 = np.zeros((n_spatial,) * 4)
    for _ in range(rank):
        b = rng.normal(scale=scale, size=(n_spatial, n_spatial))
        factor = (b + b.T) / 2
        h2 += np.multiply.outer(factor, factor)
    return FermionHamiltonian(
        n_spatial=n_spatial,
        n_electrons=n_electrons,
        ms2=n_electrons % 2,
        e_core=float(rng.uniform(-5.0, 5.0)),
        h1=h1,
        h2=h2,
        orbital_symmetries=(1,) * n_spatial,
    )
