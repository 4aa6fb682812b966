"""
Exact diagonalization oracle, optionally restricted to a particle-number sector
"""

import logging
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from converters.jordan_wigner import check_number_symmetry, check_spin_symmetry
from converters.pauli import PauliSum, basis_indices
from errors import NonHermitianInput, SymmetryError

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4096
ALPHA_MASK = int('01' * 32, 2)


def sector_indices(n_qubits: int, n_electrons: int, ms2: Optional[int] = None) -> np.ndarray:
    """Basis indices with ``n_electrons`` set bits and n_alpha - n_beta = ms2 (alpha on even qubits)"""
    indices = basis_indices(n_qubits)
    counts = np.array([bin(i).count('1') for i in range(indices.size)])
    keep = counts == n_electrons
    if ms2 is not None:
        alpha = np.array([bin(i & ALPHA_MASK).count('1') for i in range(indices.size)])
        keep &= (2 * alpha - counts) == ms2
    return indices[keep]


def _lowest(matrix) -> Tuple[float, np.ndarray]:
    dim = matrix.shape[0]
    if dim <= DENSE_LIMIT:
        dense = matrix.toarray() if hasattr(matrix, 'toarray') else np.asarray(matrix)
        values, vectors = scipy.linalg.eigh(dense, subset_by_index=[0, 0])
        return float(values[0]), vectors[:, 0]
    values, vectors = scipy.sparse.linalg.eigsh(matrix, k=1, which='SA', tol=1e-12)
    return float(values[0]), vectors[:, 0]


def exact_ground_state(operator: PauliSum, sector: Optional[Tuple[int, Optional[int]]] = None,
                       enforce_symmetry: bool = True) -> Tuple[float, np.ndarray]:
    """Lowest eigenvalue and its eigenvector in the full 2^n basis

    ``sector`` is (n_electrons, ms2); ms2 may be None to fix only the number.
    The operator must commute with N, and with S_z when ms2 is given. With
    ``enforce_symmetry=False`` a broken symmetry is only logged and the
    operator projected onto the sector is diagonalized instead.
    """
    if not operator.is_hermitian():
        raise NonHermitianInput(f"Operator has imaginary coefficients up to {operator.max_imag():.3e}")
    n = operator.n_qubits
    matrix = operator.to_sparse()

    if sector is None:
        energy, vector = _lowest(matrix)
        logger.info(f"Exact ground state over the full {1 << n}-dimensional space: {energy:.10f}")
        return energy, vector

    n_electrons, ms2 = sector
    broken = []
    if not check_number_symmetry(operator):
        broken.append('the particle-number operator')
    if ms2 is not None and not check_spin_symmetry(operator):
        broken.append('S_z')
    if broken:
        message = f"Operator does not commute with {' or '.join(broken)}"
        if enforce_symmetry:
            raise SymmetryError(f"{message}; pass ms2=None to fix only the number"
                                if broken == ['S_z'] else message)
        logger.warning(f"{message}; diagonalizing its projection onto the sector")
    indices = sector_indices(n, n_electrons, ms2)
    if indices.size == 0:
        raise ValueError(f"Sector (N={n_electrons}, MS2={ms2}) is empty on {n} qubits")
    block = matrix[indices][:, indices]
    energy, block_vector = _lowest(block)
    vector = np.zeros(1 << n, dtype=complex)
    vector[indices] = block_vector
    logger.info(f"Exact ground state in sector N={n_electrons}, MS2={ms2} "
                f"({indices.size} determinants): {energy:.10f}")
    return energy, vector
