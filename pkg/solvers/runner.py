"""
Solver dispatch by configured name
"""

import logging
import time
from typing import Optional, Tuple

from converters.jordan_wigner import ExcitationGenerator
from converters.pauli import PauliSum
from extractors.fcidump import FermionHamiltonian
from settings import SolverConfig
from simulators.circuits import Circuit
from simulators.statevector import expectation, init_reference
from solvers.exact import exact_ground_state
from solvers.gcim import gcim_expand
from solvers.pools import build_pool
from solvers.trace import IterationRecord, SolverTrace
from solvers.vqe import adapt_vqe, ansatz_circuit, qubit_adapt_vqe, uccgsd_vqe

logger = logging.getLogger(__name__)


def fci_trace(hamiltonian: PauliSum, fermion: FermionHamiltonian, use_sector: bool = True) -> SolverTrace:
    """Exact diagonalization wrapped in a one-record trace"""
    started = time.perf_counter()
    reference = init_reference(hamiltonian.n_qubits, fermion.reference_occupation())
    trace = SolverTrace('fci', hamiltonian.n_qubits, expectation(reference, hamiltonian))
    sector = (fermion.n_electrons, fermion.ms2) if use_sector else None
    energy, _ = exact_ground_state(hamiltonian, sector)
    trace.add(IterationRecord(iteration=0, energy=energy))
    trace.convergence_reason = 'exact diagonalization'
    trace.timings['total_seconds'] = time.perf_counter() - started
    return trace


def trace_circuit(trace: SolverTrace) -> Optional[Circuit]:
    """Rotation circuit of a product ansatz trace; None for FCI and GCIM"""
    if trace.solver == 'fci' or trace.solver.startswith('adapt-gcim'):
        return None
    generators = [ExcitationGenerator.from_dict(g) for g in trace.generators]
    return ansatz_circuit(generators, trace.parameters, trace.n_qubits)


def run_solver(hamiltonian: PauliSum, fermion: FermionHamiltonian, config: SolverConfig,
               threads: int = 1, seed: int = 0) -> Tuple[SolverTrace, Optional[Circuit]]:
    """Run ``config.name`` and return its trace with the ansatz circuit when there is one"""
    name = config.name
    n_electrons, ms2 = fermion.n_electrons, fermion.ms2
    logger.info(f"Running {name} on {hamiltonian.n_qubits} qubits ({n_electrons} electrons, MS2={ms2})")

    if name == 'fci':
        trace = fci_trace(hamiltonian, fermion, config.use_sector)
    elif name == 'adapt-vqe':
        pool = build_pool(config.pool, hamiltonian.n_qubits, n_electrons, ms2)
        trace = adapt_vqe(hamiltonian, pool, config, threads, seed)
    elif name == 'qubit-adapt-vqe':
        trace = qubit_adapt_vqe(hamiltonian, n_electrons, config, ms2, threads, seed)
    elif name == 'uccgsd':
        trace = uccgsd_vqe(hamiltonian, n_electrons, config, ms2, seed)
    elif name == 'adapt-gcim':
        pool = build_pool(config.pool, hamiltonian.n_qubits, n_electrons, ms2)
        _, trace = gcim_expand(hamiltonian, pool, config.x, config.y, config.theta0, config, threads, seed)
    else:
        raise ValueError(f"Unknown solver {name!r}")
    return trace, trace_circuit(trace)
