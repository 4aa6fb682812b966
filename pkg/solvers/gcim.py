"""
ADAPT-GCIM: adaptive non-orthogonal subspace expansion

Basis states are ansatz states with frozen parameters. The lowest generalized
eigenvalue of the projected problem H f = e S f estimates the ground energy.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from converters.pauli import PauliSum
from errors import DegenerateSubspace
from settings import SolverConfig
from simulators.statevector import State, derive_rng, expectation
from solvers.pools import OperatorPool
from solvers.trace import IterationRecord, SolverTrace
from solvers.vqe import reference_state, apply_generator, optimize_parameters, pool_gradients, prepare_ansatz

logger = logging.getLogger(__name__)


def solve_gev(hmat: np.ndarray, smat: np.ndarray, cutoff: float = 1e-8,
              return_vectors: bool = False):
    """Canonical orthogonalization solve of H f = e S f

    Overlap eigen-directions with eigenvalue <= ``cutoff`` are discarded.
    Eigenvalues come back ascending; with ``return_vectors`` the
    coefficient vectors f (S-orthonormal) are returned as columns too.
    """
    smat = (smat + smat.conj().T) / 2
    hmat = (hmat + hmat.conj().T) / 2
    s, u = scipy.linalg.eigh(smat)
    keep = s > cutoff
    if not np.any(keep):
        raise DegenerateSubspace(f"All {s.size} overlap eigenvalues fall below the cutoff {cutoff:g}")
    x = u[:, keep] / np.sqrt(s[keep])
    projected = x.conj().T @ hmat @ x
    energies, coefficients = scipy.linalg.eigh((projected + projected.conj().T) / 2)
    if return_vectors:
        return energies, x @ coefficients
    return energies


@dataclass
class GcimSubspace:
    """Prepared basis states with incrementally maintained H and S matrices"""

    cutoff: float = 1e-8
    states: List[np.ndarray] = field(default_factory=list)
    descriptors: List[Dict] = field(default_factory=list)
    hmat: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))
    smat: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))

    def __len__(self) -> int:
        return len(self.states)

    def add(self, state: State, hamiltonian: PauliSum, descriptor: Optional[Dict] = None):
        """Append a basis state and border H and S with its new row and column"""
        psi = state.amplitudes.copy()
        sigma = hamiltonian.apply(psi)
        size = len(self.states)
        hmat = np.zeros((size + 1, size + 1), dtype=complex)
        smat = np.zeros((size + 1, size + 1), dtype=complex)
        hmat[:size, :size] = self.hmat
        smat[:size, :size] = self.smat
        for i, phi in enumerate(self.states):
            hmat[i, size] = np.vdot(phi, sigma)
            smat[i, size] = np.vdot(phi, psi)
            hmat[size, i] = np.conj(hmat[i, size])
            smat[size, i] = np.conj(smat[i, size])
        hmat[size, size] = np.vdot(psi, sigma).real
        smat[size, size] = np.vdot(psi, psi).real
        self.hmat, self.smat = hmat, smat
        self.states.append(psi)
        self.descriptors.append(descriptor or {})

    def retained_directions(self) -> int:
        return int(np.sum(scipy.linalg.eigvalsh((self.smat + self.smat.conj().T) / 2) > self.cutoff))

    def solve(self) -> Tuple[np.ndarray, np.ndarray]:
        return solve_gev(self.hmat, self.smat, self.cutoff, return_vectors=True)

    def ground_state(self) -> Tuple[float, State]:
        """Lowest eigenvalue and the normalized subspace state it belongs to"""
        energies, vectors = self.solve()
        psi = np.tensordot(vectors[:, 0], np.array(self.states), axes=1)
        psi /= np.linalg.norm(psi)
        return float(energies[0]), State(psi)

    def to_dict(self) -> Dict:
        return {
            'cutoff': self.cutoff,
            'size': len(self),
            'descriptors': self.descriptors,
            'hmat': {'re': self.hmat.real.tolist(), 'im': self.hmat.imag.tolist()},
            'smat': {'re': self.smat.real.tolist(), 'im': self.smat.imag.tolist()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def gcim_expand(hamiltonian: PauliSum, pool: OperatorPool, x: int = 1, y: int = 0,
                theta0: float = 0.1, config: Optional[SolverConfig] = None,
                threads: int = 1, seed: int = 0) -> Tuple[GcimSubspace, SolverTrace]:
    """ADAPT-GCIM(x, y)

    Each iteration selects the largest-|gradient| generator on the current
    subspace ground state, appends it to the ansatz with parameter theta0 and
    adds the new ansatz state to the basis. With y > 0, every x selections the
    ansatz parameters are optimized for at most y BFGS iterations and the
    optimized state joins the basis as well.
    """
    config = config or SolverConfig()
    if x < 1 or y < 0:
        raise ValueError(f"ADAPT-GCIM needs x >= 1 and y >= 0, got x={x}, y={y}")
    if not len(pool):
        raise ValueError("ADAPT-GCIM needs a non-empty operator pool")

    started = time.perf_counter()
    solver = 'adapt-gcim' if y == 0 else f'adapt-gcim({x},{y})'
    reference = reference_state(pool)
    rng = derive_rng(seed, 'adapt-gcim', 'optimizer')
    subspace = GcimSubspace(cutoff=config.overlap_cutoff)
    subspace.add(reference, hamiltonian, {'generators': [], 'parameters': []})

    hf_energy = expectation(reference, hamiltonian)
    trace = SolverTrace(solver, hamiltonian.n_qubits, hf_energy)
    trace.add(IterationRecord(iteration=0, energy=hf_energy, basis_size=1))

    generators, parameters = [], []
    ansatz_state = reference.copy()
    ground = reference.copy()

    for iteration in range(1, config.max_iter + 2):
        gradients = pool_gradients(ground, hamiltonian, pool, threads)
        norm = float(np.linalg.norm(gradients))
        trace.records[-1].gradient_norm = norm
        if norm < config.grad_tol:
            trace.convergence_reason = 'gradient norm below tolerance'
            break
        if iteration > config.max_iter:
            trace.convergence_reason = 'maximum iterations reached'
            break

        index = int(np.argmax(np.abs(gradients)))
        generators.append(pool[index])
        parameters.append(theta0)
        trace.generators.append(pool[index].to_dict())
        apply_generator(ansatz_state, pool[index], theta0)
        subspace.add(ansatz_state, hamiltonian,
                     {'generators': [g.label() for g in generators], 'parameters': list(parameters)})

        nit = 0
        if y > 0 and iteration % x == 0:
            optimized, _, nit, _ = optimize_parameters(
                hamiltonian, reference, generators, parameters, config.optimizer,
                maxiter=y, rng=rng, trace=trace)
            parameters = optimized.tolist()
            ansatz_state = prepare_ansatz(reference, generators, parameters)
            subspace.add(ansatz_state, hamiltonian,
                         {'generators': [g.label() for g in generators], 'parameters': list(parameters),
                          'optimized': True})

        energy, ground = subspace.ground_state()
        trace.add(IterationRecord(
            iteration=iteration,
            energy=energy,
            selected=pool[index].label(),
            pool_index=index,
            gradient=float(gradients[index]),
            parameters=list(parameters),
            optimizer_iterations=nit,
            basis_size=len(subspace),
        ))
        logger.info(f"{solver} iteration {iteration}: selected {pool[index].label()}, "
                    f"basis {len(subspace)} ({subspace.retained_directions()} retained), energy {energy:.10f}")

    trace.timings['total_seconds'] = time.perf_counter() - started
    logger.info(f"{solver} finished with {len(subspace)} basis states: {trace.final_energy:.10f} "
                f"({trace.convergence_reason})")
    return subspace, trace
