"""
ADAPT-VQE, qubit-ADAPT-VQE and UCCGSD-VQE on the state-vector simulator

The ansatz state is exp(t_L A_L) ... exp(t_1 A_1) |HF>. Energies and their
parameter gradients come from one forward preparation and one reverse sweep.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from converters.jordan_wigner import ExcitationGenerator, jw_excitation_evolution
from converters.pauli import PauliSum
from errors import SolverError
from settings import OptimizerConfig, SolverConfig
from simulators.circuits import Circuit
from simulators.statevector import State, apply_pauli_exp, derive_rng, expectation, init_reference
from solvers.pools import OperatorPool, build_pool
from solvers.trace import IterationRecord, SolverTrace

logger = logging.getLogger(__name__)


def apply_generator(state: State, generator: ExcitationGenerator, theta: float) -> State:
    """In place: state <- exp(theta A) state"""
    for pauli, angle in jw_excitation_evolution(generator, theta, state.n_qubits):
        apply_pauli_exp(state, pauli, angle)
    return state


def prepare_ansatz(reference: State, generators: Sequence[ExcitationGenerator],
                   parameters: Sequence[float]) -> State:
    state = reference.copy()
    for generator, theta in zip(generators, parameters):
        apply_generator(state, generator, theta)
    return state


def ansatz_circuit(generators: Sequence[ExcitationGenerator], parameters: Sequence[float],
                   n_qubits: int) -> Circuit:
    """Rotation circuit preparing the ansatz from the reference determinant"""
    rotations = []
    for generator, theta in zip(generators, parameters):
        rotations.extend(jw_excitation_evolution(generator, theta, n_qubits))
    return Circuit(n_qubits, rotations)


def adapt_gradient(state: State, hamiltonian: PauliSum, generator: ExcitationGenerator) -> float:
    """<psi|[H, A]|psi> = 2 Re <H psi|A psi>"""
    sigma = hamiltonian.apply(state.amplitudes)
    a_psi = generator.operator(state.n_qubits).apply(state.amplitudes)
    return float(2.0 * np.vdot(sigma, a_psi).real)


def pool_gradients(state: State, hamiltonian: PauliSum, pool: OperatorPool, threads: int = 1) -> np.ndarray:
    """adapt_gradient for every pool element against one read-only state"""
    sigma = hamiltonian.apply(state.amplitudes)
    operators = pool.operators()

    def work(index: int) -> float:
        return float(2.0 * np.vdot(sigma, operators[index].apply(state.amplitudes)).real)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return np.array(list(executor.map(work, range(len(operators)))))
    return np.array([work(i) for i in range(len(operators))])


def energy_and_gradient(parameters: np.ndarray, hamiltonian: PauliSum, reference: State,
                        generators: Sequence[ExcitationGenerator]) -> Tuple[float, np.ndarray]:
    """Energy and analytic gradient by a reverse sweep over the ansatz"""
    psi = prepare_ansatz(reference, generators, parameters)
    sigma_vec = hamiltonian.apply(psi.amplitudes)
    energy = float(np.vdot(psi.amplitudes, sigma_vec).real)
    sigma = State(sigma_vec, psi.n_qubits)

    gradient = np.zeros(len(generators))
    for k in reversed(range(len(generators))):
        a_psi = generators[k].operator(psi.n_qubits).apply(psi.amplitudes)
        gradient[k] = 2.0 * np.vdot(sigma.amplitudes, a_psi).real
        apply_generator(psi, generators[k], -parameters[k])
        apply_generator(sigma, generators[k], -parameters[k])
    return energy, gradient


def optimize_parameters(hamiltonian: PauliSum, reference: State, generators: Sequence[ExcitationGenerator],
                        initial: Sequence[float], config: OptimizerConfig, maxiter: Optional[int] = None,
                        rng: Optional[np.random.Generator] = None,
                        trace: Optional[SolverTrace] = None) -> Tuple[np.ndarray, float, int, int]:
    """BFGS on the analytic gradient

    Returns (parameters, energy, iterations, restarts). A run that stops
    without success and with a gradient above ``failure_gtol`` is retried
    once from a perturbed start before SolverError is raised.
    """
    x0 = np.asarray(initial, dtype=float)
    limit = config.maxiter if maxiter is None else maxiter
    rng = rng if rng is not None else np.random.default_rng(0)

    def run(start: np.ndarray):
        return scipy.optimize.minimize(
            energy_and_gradient, start, args=(hamiltonian, reference, generators),
            jac=True, method='BFGS', options={'gtol': config.gtol, 'maxiter': limit})

    result = run(x0)
    restarts = 0
    # runs with an explicit iteration cap are never retried
    if not result.success and maxiter is None and np.max(np.abs(result.jac), initial=0.0) > config.failure_gtol:
        logger.warning(f"Optimizer failed ({result.message}); retrying from a perturbed start")
        restarts = 1
        retry = run(result.x + rng.normal(scale=config.perturbation, size=x0.size))
        if not retry.success and np.max(np.abs(retry.jac), initial=0.0) > config.failure_gtol:
            raise SolverError(f"Optimizer failed twice: {retry.message}", trace)
        if retry.fun <= result.fun:
            result = retry
    return np.asarray(result.x), float(result.fun), int(result.nit), restarts


def reference_state(pool: OperatorPool) -> State:
    return init_reference(pool.n_spin_orbitals, pool.reference)


def run_adapt(hamiltonian: PauliSum, pool: OperatorPool, config: Optional[SolverConfig] = None,
              solver: str = 'adapt-vqe', threads: int = 1, seed: int = 0) -> SolverTrace:
    """Generic ADAPT loop over ``pool``"""
    config = config or SolverConfig()
    if not len(pool):
        raise ValueError("ADAPT needs a non-empty operator pool")
    if pool.n_spin_orbitals != hamiltonian.n_qubits:
        raise ValueError(f"Pool on {pool.n_spin_orbitals} qubits, Hamiltonian on {hamiltonian.n_qubits}")

    started = time.perf_counter()
    reference = reference_state(pool)
    rng = derive_rng(seed, solver, 'optimizer')
    hf_energy = expectation(reference, hamiltonian)
    trace = SolverTrace(solver, hamiltonian.n_qubits, hf_energy)
    trace.add(IterationRecord(iteration=0, energy=hf_energy))

    generators: List[ExcitationGenerator] = []
    parameters = np.zeros(0)
    state = reference.copy()

    for iteration in range(1, config.max_iter + 2):
        gradients = pool_gradients(state, hamiltonian, pool, threads)
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
        trace.generators.append(pool[index].to_dict())
        parameters, energy, nit, restarts = optimize_parameters(
            hamiltonian, reference, generators, np.append(parameters, 0.0),
            config.optimizer, rng=rng, trace=trace)
        state = prepare_ansatz(reference, generators, parameters)

        trace.add(IterationRecord(
            iteration=iteration,
            energy=energy,
            selected=pool[index].label(),
            pool_index=index,
            gradient=float(gradients[index]),
            parameters=parameters.tolist(),
            optimizer_iterations=nit,
            optimizer_restarts=restarts,
        ))
        logger.info(f"{solver} iteration {iteration}: selected {pool[index].label()} "
                    f"(|g|={abs(gradients[index]):.3e}), energy {energy:.10f}")

    trace.timings['total_seconds'] = time.perf_counter() - started
    logger.info(f"{solver} finished after {len(generators)} generators: {trace.final_energy:.10f} "
                f"({trace.convergence_reason})")
    return trace


def adapt_vqe(hamiltonian: PauliSum, pool: OperatorPool, config: Optional[SolverConfig] = None,
              threads: int = 1, seed: int = 0) -> SolverTrace:
    """ADAPT-VQE with a fermionic pool"""
    return run_adapt(hamiltonian, pool, config, 'adapt-vqe', threads, seed)


def qubit_adapt_vqe(hamiltonian: PauliSum, n_electrons: int, config: Optional[SolverConfig] = None,
                    ms2: Optional[int] = None, threads: int = 1, seed: int = 0) -> SolverTrace:
    """ADAPT-VQE over the qubit-minimal pool; every ansatz element is one Pauli rotation"""
    pool = build_pool('qubit-minimal', hamiltonian.n_qubits, n_electrons, ms2)
    return run_adapt(hamiltonian, pool, config, 'qubit-adapt-vqe', threads, seed)


def uccgsd_vqe(hamiltonian: PauliSum, n_electrons: int, config: Optional[SolverConfig] = None,
               ms2: Optional[int] = None, seed: int = 0) -> SolverTrace:
    """One first-order product over the full GSD pool, all parameters optimized from zero"""
    config = config or SolverConfig()
    started = time.perf_counter()
    pool = build_pool('fermionic-gsd', hamiltonian.n_qubits, n_electrons, ms2)
    reference = reference_state(pool)
    hf_energy = expectation(reference, hamiltonian)
    trace = SolverTrace('uccgsd', hamiltonian.n_qubits, hf_energy,
                        generators=[g.to_dict() for g in pool])
    trace.add(IterationRecord(iteration=0, energy=hf_energy))

    parameters, energy, nit, restarts = optimize_parameters(
        hamiltonian, reference, pool.elements, np.zeros(len(pool)), config.optimizer,
        rng=derive_rng(seed, 'uccgsd', 'optimizer'), trace=trace)
    _, gradient = energy_and_gradient(parameters, hamiltonian, reference, pool.elements)
    trace.add(IterationRecord(
        iteration=1,
        energy=energy,
        gradient_norm=float(np.linalg.norm(gradient)),
        parameters=parameters.tolist(),
        optimizer_iterations=nit,
        optimizer_restarts=restarts,
    ))
    trace.convergence_reason = 'optimizer converged'
    trace.timings['total_seconds'] = time.perf_counter() - started
    logger.info(f"UCCGSD with {len(pool)} parameters: {energy:.10f} after {nit} BFGS iterations")
    return trace
