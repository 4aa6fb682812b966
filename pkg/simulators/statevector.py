"""
State-vector simulation of Pauli-rotation circuits

Amplitudes are indexed by computational-basis integers with qubit 0 least
significant. Noiseless circuits are applied rotation by rotation with the
two-term update exp(-i phi/2 P) psi = cos(phi/2) psi - i sin(phi/2) P psi.
Noisy circuits are run gate by gate as stochastic Pauli trajectories: after
every CX a uniformly random non-identity two-qubit Pauli is applied with
probability p2.
"""

import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from converters.pauli import PauliSum, PauliTerm, pauli_action
from errors import DimensionError, NonHermitianInput, OrbitalIndexError, RangeError
from measurement.grouping import MeasurementGroup, MeasurementPlan
from simulators.circuits import Circuit, GateTally, Rotation

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
IMAG_TOLERANCE = 1e-10

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)


def derive_rng(root_seed: int, *key: Union[int, str]) -> np.random.Generator:
    """Independent generator for ``key`` under ``root_seed`` (order-independent)"""
    spawn_key = tuple(k if isinstance(k, int) else zlib.crc32(k.encode()) for k in key)
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=spawn_key))


@dataclass
class NoiseModel:
    """Two-qubit depolarizing Pauli noise for trajectory simulation"""

    p2: float = 0.0
    rng_seed: int = 0
    trajectories: int = 64

    def __post_init__(self):
        if not 0.0 <= self.p2 <= 1.0:
            raise RangeError(f"p2 must lie in [0, 1], got {self.p2}")
        if self.trajectories < 1:
            raise RangeError(f"trajectories must be >= 1, got {self.trajectories}")

    @property
    def is_noiseless(self) -> bool:
        return self.p2 == 0.0


class State:
    """Normalised 2^n amplitude vector"""

    __slots__ = ('n_qubits', 'amplitudes')

    def __init__(self, amplitudes: np.ndarray, n_qubits: Optional[int] = None):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        n = int(round(math.log2(amplitudes.size))) if n_qubits is None else n_qubits
        if amplitudes.shape != (1 << n,):
            raise DimensionError(f"Amplitude vector of shape {amplitudes.shape} is not a {n}-qubit state")
        self.n_qubits = n
        self.amplitudes = amplitudes

    def copy(self) -> 'State':
        return State(self.amplitudes.copy(), self.n_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        probs = np.abs(self.amplitudes) ** 2
        return probs / probs.sum()

    def overlap(self, other: 'State') -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def dump(self, path: Union[str, Path]):
        """Raw little-endian interleaved re/im doubles"""
        self.amplitudes.astype('<c16').tofile(str(path))

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'State':
        return cls(np.fromfile(str(path), dtype='<c16').astype(complex))


def init_reference(n_qubits: int, occupied: Iterable[int]) -> State:
    """Computational-basis state with 1-bits on ``occupied``"""
    index = 0
    for q in occupied:
        if not 0 <= q < n_qubits:
            raise OrbitalIndexError(f"Occupied qubit {q} outside register of {n_qubits}")
        index |= 1 << q
    amplitudes = np.zeros(1 << n_qubits, dtype=complex)
    amplitudes[index] = 1.0
    return State(amplitudes, n_qubits)


@lru_cache(maxsize=8192)
def _cached_action(x_mask: int, z_mask: int, n_qubits: int) -> Tuple[np.ndarray, np.ndarray]:
    return pauli_action(x_mask, z_mask, n_qubits)


def apply_pauli_exp(state: State, pauli: PauliTerm, angle: float) -> State:
    """In place: state <- exp(-i angle/2 P) state for a unit-coefficient P"""
    if pauli.n_qubits != state.n_qubits:
        raise DimensionError(f"{pauli.n_qubits}-qubit rotation applied to {state.n_qubits}-qubit state")
    coeff = complex(pauli.coeff)
    if abs(coeff.imag) > NORM_TOLERANCE or abs(abs(coeff) - 1.0) > NORM_TOLERANCE:
        raise ValueError(f"Rotation generator must have coefficient +-1, got {coeff}")
    angle = angle * coeff.real
    if angle == 0.0:
        return state
    psi = state.amplitudes
    if pauli.is_identity:
        psi *= np.exp(-0.5j * angle)
        return state
    cols, phases = _cached_action(pauli.x_mask, pauli.z_mask, state.n_qubits)
    rotated = phases * psi[cols]
    psi *= math.cos(angle / 2)
    psi -= 1j * math.sin(angle / 2) * rotated
    return state


def expectation(state: State, operator: PauliSum) -> float:
    """Exact <psi|S|psi> for Hermitian S"""
    if operator.n_qubits != state.n_qubits:
        raise DimensionError(f"{operator.n_qubits}-qubit operator on {state.n_qubits}-qubit state")
    if not operator.is_hermitian(IMAG_TOLERANCE):
        raise NonHermitianInput(f"Operator has imaginary coefficients up to {operator.max_imag():.3e}")
    value = np.vdot(state.amplitudes, operator.apply(state.amplitudes))
    if abs(value.imag) > IMAG_TOLERANCE:
        raise NonHermitianInput(f"Expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


# -- gate-level kernels -----------------------------------------------------

def _apply_one_qubit(psi: np.ndarray, matrix: np.ndarray, qubit: int, n_qubits: int):
    view = psi.reshape(1 << (n_qubits - qubit - 1), 2, 1 << qubit)
    view[:] = np.einsum('ab,ibj->iaj', matrix, view)


def _rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _rz(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def _apply_cx(psi: np.ndarray, control: int, target: int, n_qubits: int):
    indices = np.arange(1 << n_qubits, dtype=np.int64)
    sources = indices[((indices >> control) & 1 == 1) & ((indices >> target) & 1 == 0)]
    partners = sources | (1 << target)
    psi[sources], psi[partners] = psi[partners].copy(), psi[sources].copy()


def _apply_pauli(psi: np.ndarray, x_mask: int, z_mask: int, n_qubits: int):
    cols, phases = _cached_action(x_mask, z_mask, n_qubits)
    psi[:] = phases * psi[cols]


def _random_two_qubit_pauli(rng: np.random.Generator, a: int, b: int) -> Tuple[int, int]:
    # 1..15 encodes (letter on a, letter on b) with letters 0=I,1=X,2=Y,3=Z
    code = int(rng.integers(1, 16))
    x_mask = z_mask = 0
    for qubit, letter in ((a, code // 4), (b, code % 4)):
        if letter in (1, 2):
            x_mask |= 1 << qubit
        if letter in (2, 3):
            z_mask |= 1 << qubit
    return x_mask, z_mask


def _run_gates(state: State, circuit: Circuit, noise: Optional[NoiseModel],
               rng: Optional[np.random.Generator]) -> int:
    psi, n = state.amplitudes, state.n_qubits
    faults = 0
    for name, qubits, parameter in circuit.gates():
        if name == 'h':
            _apply_one_qubit(psi, _H, qubits[0], n)
        elif name == 'rx':
            _apply_one_qubit(psi, _rx(parameter), qubits[0], n)
        elif name == 'rz':
            _apply_one_qubit(psi, _rz(parameter), qubits[0], n)
        elif name == 'cx':
            _apply_cx(psi, qubits[0], qubits[1], n)
            if noise is not None and noise.p2 > 0 and rng.random() < noise.p2:
                _apply_pauli(psi, *_random_two_qubit_pauli(rng, *qubits), n)
                faults += 1
        else:
            raise ValueError(f"Unknown gate {name!r}")
    return faults


def run_circuit(state: State, circuit: Union[Circuit, Sequence[Rotation]],
                noise: Optional[NoiseModel] = None,
                rng: Optional[np.random.Generator] = None,
                gate_level: bool = False) -> Tuple[State, GateTally]:
    """Apply the circuit in place (one trajectory when noisy) and tally its gates

    Without noise the rotations are applied directly unless ``gate_level``
    asks for the compiled gate stream.
    """
    if not isinstance(circuit, Circuit):
        circuit = Circuit(state.n_qubits, list(circuit))
    if circuit.n_qubits != state.n_qubits:
        raise DimensionError(f"{circuit.n_qubits}-qubit circuit on {state.n_qubits}-qubit state")

    if noise is not None and not noise.is_noiseless:
        rng = rng if rng is not None else derive_rng(noise.rng_seed)
        faults = _run_gates(state, circuit, noise, rng)
        logger.debug(f"Trajectory with {faults} Pauli faults")
    elif gate_level:
        _run_gates(state, circuit, None, None)
    else:
        for pauli, angle in circuit.rotations:
            apply_pauli_exp(state, pauli, angle)
    return state, circuit.tally()


# -- sampling ---------------------------------------------------------------

def rotate_to_basis(state: State, group: MeasurementGroup) -> State:
    """Copy of ``state`` rotated so every member of ``group`` becomes a Z string"""
    rotated = state.copy()
    for q in range(state.n_qubits):
        x_bit = (group.basis_x >> q) & 1
        z_bit = (group.basis_z >> q) & 1
        if x_bit and z_bit:
            _apply_one_qubit(rotated.amplitudes, _SDG, q, state.n_qubits)
            _apply_one_qubit(rotated.amplitudes, _H, q, state.n_qubits)
        elif x_bit:
            _apply_one_qubit(rotated.amplitudes, _H, q, state.n_qubits)
    return rotated


def _histogram(probabilities: np.ndarray, shots: int, n_qubits: int,
               rng: np.random.Generator) -> Dict[str, int]:
    counts = rng.multinomial(shots, probabilities)
    return {format(int(i), f'0{n_qubits}b'): int(counts[i]) for i in np.nonzero(counts)[0]}


def sample_group(state: State, group: MeasurementGroup, shots: int,
                 seed: Union[int, np.random.Generator]) -> Dict[str, int]:
    """Bitstring histogram of ``shots`` measurements in the group's joint basis"""
    if shots < 1:
        raise RangeError(f"shots must be >= 1, got {shots}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    probabilities = rotate_to_basis(state, group).probabilities()
    return _histogram(probabilities, shots, state.n_qubits, rng)


def prepare_state(circuit: Circuit, occupied: Sequence[int], noise: Optional[NoiseModel] = None,
                  rng: Optional[np.random.Generator] = None) -> State:
    state = init_reference(circuit.n_qubits, occupied)
    run_circuit(state, circuit, noise, rng)
    return state


def sample_circuit(circuit: Circuit, occupied: Sequence[int], group: MeasurementGroup, shots: int,
                   noise: Optional[NoiseModel] = None, seed: int = 0,
                   key: Tuple[Union[int, str], ...] = ()) -> List[Dict[str, int]]:
    """Histograms of ``group`` on the circuit's output, one per noise trajectory

    The noiseless case prepares the state once and returns a single histogram.
    Otherwise the shots are spread over ``noise.trajectories`` independent
    trajectories.
    """
    if noise is None or noise.is_noiseless:
        state = prepare_state(circuit, occupied)
        return [sample_group(state, group, shots, derive_rng(seed, *key, 'shots'))]

    n_traj = min(noise.trajectories, shots)
    base, extra = divmod(shots, n_traj)
    histograms = []
    for j in range(n_traj):
        state = prepare_state(circuit, occupied, noise, derive_rng(seed, *key, 'trajectory', j))
        histograms.append(sample_group(state, group, base + (1 if j < extra else 0),
                                       derive_rng(seed, *key, 'shots', j)))
    return histograms


def sample_plan(circuit: Circuit, occupied: Sequence[int], plan: MeasurementPlan,
                noise: Optional[NoiseModel] = None, seed: int = 0, threads: int = 1,
                key: Tuple[Union[int, str], ...] = ()) -> List[List[Dict[str, int]]]:
    """sample_circuit for every retained group with group-indexed random streams"""
    def work(index: int):
        return sample_circuit(circuit, occupied, plan.retained[index], plan.shots_for(index),
                              noise, seed, key + ('group', index))

    indices = range(len(plan.retained))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, indices))
    return [work(i) for i in indices]
