"""
Exception hierarchy shared by every pipeline component
"""

from typing import Optional


class DuccError(Exception):
    """Base class for all pipeline errors"""


class ConfigError(DuccError, ValueError):
    """Invalid or unknown configuration entry"""


class ParseError(DuccError, ValueError):
    """Malformed FCIDUMP content"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class InconsistentIntegral(ParseError):
    """Duplicate integral entries that disagree"""


class OrbitalIndexError(DuccError, IndexError):
    """Orbital or qubit index outside the allowed range, or repeated"""


class DimensionError(DuccError, ValueError):
    """Operands act on different numbers of qubits"""


class RangeError(DuccError, ValueError):
    """Count argument outside its allowed range"""


class InsufficientShots(DuccError, ValueError):
    """A measurement group has no recorded shots"""


class NonHermitianInput(DuccError, ValueError):
    """Operator expected to be Hermitian is not"""


class SymmetryError(DuccError):
    """Operator breaks particle-number symmetry where it is required"""


class DegenerateSubspace(DuccError):
    """Every overlap eigenvalue falls below the cutoff"""


class SolverError(DuccError):
    """Solver failure; carries the partial trace"""

    def __init__(self, message: str, trace=None):
        self.trace = trace
        super().__init__(message)


class NotAmplifiable(DuccError):
    """Circuit has no two-qubit gates to amplify"""


class DivisionByZeroGuard(DuccError, ZeroDivisionError):
    """Noise factor requested for a circuit without two-qubit gates"""


class FitError(DuccError):
    """Extrapolation fit is undetermined"""


class ExternalityError(DuccError, ValueError):
    """External cluster amplitude touches only active orbitals"""


class LibraryFetchError(DuccError):
    """Hamiltonian library download failed"""
