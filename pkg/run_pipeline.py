#!/usr/bin/env python3
"""
DUCC Hamiltonian Solver Pipeline - command-line orchestrator

Verbs:
    inspect       parse an FCIDUMP file and report sizes and symmetry checks
    map           Jordan-Wigner map to a Pauli sum
    group         qubit-wise commuting measurement groups
    truncate      keep the heaviest groups and report the energy shift
    solve         FCI / ADAPT-VQE / qubit-ADAPT-VQE / UCCGSD / ADAPT-GCIM
    sample        shot-based energy estimate of an ansatz circuit
    zne           zero-noise extrapolation of the sampled energy
    downfold-toy  similarity-transform checks on a small dense Fock space

Usage:
    python3 run_pipeline.py solve data/n2_1.0.FCIDUMP --solver adapt-gcim --x 2 --y 2
"""

import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Optional, Tuple

import click
import jsonschema
import numpy as np
from tabulate import tabulate

from converters.jordan_wigner import check_number_symmetry, jordan_wigner
from converters.pauli import PauliSum
from downfolding.toy import (ActiveSpaceDef, a7_error_scaling, bch_transform, build_sigma,
                             decoupling_generator, fock_normal_parts, hamiltonian_matrix,
                             project_active, random_external_amplitudes, sector_lowest)
from errors import (ConfigError, DegenerateSubspace, DimensionError, DivisionByZeroGuard, FitError,
                    InsufficientShots, NonHermitianInput, NotAmplifiable, OrbitalIndexError, ParseError,
                    RangeError, SolverError, SymmetryError)
from extractors.fcidump import FermionHamiltonian, random_hamiltonian, read_fcidump, validate_symmetries
from measurement.estimator import estimate_energy
from measurement.grouping import build_plan, k_for_weight_fraction, truncate_groups
from mitigation.zne import run_zne
from settings import RunConfig, apply_overrides, load_config, setup_logging
from simulators.circuits import Circuit
from simulators.statevector import NoiseModel, expectation, prepare_state, sample_plan
from solvers.exact import exact_ground_state
from solvers.runner import run_solver

logger = logging.getLogger('run_pipeline')

SCHEMA_DIR = Path(__file__).parent / 'schemas'

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_MITIGATION = 4


# -- plumbing ---------------------------------------------------------------

def common_options(func):
    """--config, --seed, --shots, --threads, --output, --verbose"""
    options = [
        click.option('--config', 'config_path', default=None, help='Configuration file path'),
        click.option('--seed', type=int, default=None, help='Root random seed'),
        click.option('--shots', type=int, default=None, help='Shots per measurement group'),
        click.option('--threads', type=int, default=None, help='Worker threads'),
        click.option('--output', default=None, help='Output directory'),
        click.option('--verbose', is_flag=True, help='Enable verbose logging'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@contextmanager
def exit_codes(partial_path: Optional[Path] = None):
    """Map library errors to process exit codes"""
    try:
        yield
    except (ConfigError, DimensionError, RangeError, InsufficientShots) as e:
        logger.error(f"Configuration error: {e}")
        sys.exit(EXIT_CONFIG)
    except (ParseError, OrbitalIndexError, SymmetryError, NonHermitianInput) as e:
        logger.error(f"Input error: {e}")
        sys.exit(EXIT_PARSE)
    except (OSError, UnicodeDecodeError) as e:
        logger.error(f"Cannot read input: {e}")
        sys.exit(EXIT_PARSE)
    except (SolverError, DegenerateSubspace) as e:
        logger.error(f"Solver failed: {e}")
        trace = getattr(e, 'trace', None)
        if trace is not None and partial_path is not None:
            partial_path.parent.mkdir(parents=True, exist_ok=True)
            partial_path.write_text(trace.to_json())
            logger.error(f"Partial trace written to {partial_path}")
        sys.exit(EXIT_SOLVER)
    except (NotAmplifiable, FitError, DivisionByZeroGuard) as e:
        logger.error(f"Mitigation failed: {e}")
        sys.exit(EXIT_MITIGATION)


def prepare(command: str, config_path: Optional[str], overrides: Dict, verbose: bool) -> RunConfig:
    """Load, override and validate the configuration, then set up logging"""
    with exit_codes():
        config = load_config(config_path)
        config = apply_overrides(config, overrides).validate(command)
    setup_logging(config.logging, verbose)
    logger.debug(f"Configuration for {command}: {config}")
    return config


def common_overrides(seed, shots, threads, output) -> Dict:
    return {'seed': seed, 'measurement.shots': shots, 'threads': threads, 'output.dir': output}


def input_path(config: RunConfig, fcidump: Optional[str]) -> Path:
    path = fcidump or config.input.path
    if not path:
        raise ConfigError("No FCIDUMP file given (argument or input.path)")
    return Path(path)


def load_hamiltonian(config: RunConfig, path: Path) -> Tuple[FermionHamiltonian, PauliSum]:
    fermion = read_fcidump(path, config.input.orbital_basis)
    return fermion, jordan_wigner(fermion, config.mapping.prune_threshold)


def load_circuit(path: str) -> Circuit:
    """Circuit JSON, or a solve result carrying a ``circuit`` entry"""
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"Cannot read circuit {path}: {e}") from e
    if 'rotations' not in data:
        data = data.get('circuit') or {}
        if 'rotations' not in data:
            raise ConfigError(f"{path} holds neither a circuit nor a solve result with a circuit")
    return Circuit.from_dict(data)


def output_dir(config: RunConfig) -> Path:
    directory = Path(config.output.dir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def emit(payload: Dict, schema_name: str, path: Path):
    """Validate against schemas/<name>.schema.json and write JSON"""
    with open(SCHEMA_DIR / f"{schema_name}.schema.json", 'r') as f:
        schema = json.load(f)
    jsonschema.validate(payload, schema)
    path.write_text(json.dumps(payload, indent=2) + '\n')
    logger.info(f"Wrote {path}")


def print_table(rows, headers=()):
    click.echo(tabulate(rows, headers=headers, tablefmt='grid'))


def circuit_for_sampling(config: RunConfig, circuit_path: Optional[str], fermion: FermionHamiltonian,
                         hamiltonian: PauliSum) -> Circuit:
    """Given circuit, else the configured solver's ansatz, else a qubit-ADAPT-VQE ansatz"""
    circuit_path = circuit_path or config.input.circuit
    if circuit_path:
        circuit = load_circuit(circuit_path)
    else:
        solver_config = config.solver
        if solver_config.name in ('fci', 'adapt-gcim'):
            logger.info(f"{solver_config.name} yields no circuit; building a qubit-ADAPT-VQE ansatz")
            solver_config = apply_overrides(config, {'solver.name': 'qubit-adapt-vqe'}).solver
        _, circuit = run_solver(hamiltonian, fermion, solver_config, config.threads, config.seed)
    if circuit.n_qubits != hamiltonian.n_qubits:
        raise DimensionError(f"Circuit on {circuit.n_qubits} qubits, Hamiltonian on {hamiltonian.n_qubits}")
    return circuit


# -- commands ---------------------------------------------------------------

@click.group()
def cli():
    """DUCC Hamiltonian solver pipeline"""


@cli.command()
@click.argument('fcidump', required=False)
@common_options
def inspect(fcidump, config_path, seed, shots, threads, output, verbose):
    """Orbital counts, core energy, string and group counts, symmetry checks"""
    config = prepare('inspect', config_path, common_overrides(seed, shots, threads, output), verbose)
    with exit_codes():
        path = input_path(config, fcidump)
        fermion, hamiltonian = load_hamiltonian(config, path)
        report = validate_symmetries(fermion, config.mapping.prune_threshold)
        plan = build_plan(hamiltonian, None, config.measurement.shots, config.measurement.allocation)

        payload = {
            'command': 'inspect',
            'input': str(path),
            'n_spatial': fermion.n_spatial,
            'n_spin_orbitals': fermion.n_spin_orbitals,
            'n_electrons': fermion.n_electrons,
            'ms2': fermion.ms2,
            'e_core': fermion.e_core,
            'orbital_basis': fermion.orbital_basis,
            'basis_detection': fermion.basis_detection,
            'permutational_symmetry': fermion.permutational_symmetry,
            'pauli_strings': len(hamiltonian.non_identity()),
            'identity_coeff': complex(hamiltonian.identity_coeff).real,
            'one_norm': hamiltonian.one_norm(include_identity=False),
            'discarded_weight': hamiltonian.discarded_weight,
            'groups': len(plan.groups),
            'symmetry': report.to_dict(),
        }
        emit(payload, 'inspect', output_dir(config) / f"{path.stem}_inspect.json")

    print_table([(key, value) for key, value in payload.items() if key != 'symmetry'], ['Field', 'Value'])
    print_table(list(report.to_dict().items()), ['Symmetry check', 'Result'])


@cli.command(name='map')
@click.argument('fcidump', required=False)
@common_options
def map_command(fcidump, config_path, seed, shots, threads, output, verbose):
    """Jordan-Wigner map; writes the Pauli sum as text and JSON"""
    config = prepare('map', config_path, common_overrides(seed, shots, threads, output), verbose)
    with exit_codes():
        path = input_path(config, fcidump)
        _, hamiltonian = load_hamiltonian(config, path)
        directory = output_dir(config)
        (directory / f"{path.stem}.paulis").write_text(hamiltonian.to_text())

        payload = {
            'command': 'map',
            'input': str(path),
            'n_qubits': hamiltonian.n_qubits,
            'pauli_strings': len(hamiltonian.non_identity()),
            'identity_coeff': complex(hamiltonian.identity_coeff).real,
            'one_norm': hamiltonian.one_norm(include_identity=False),
            'discarded_weight': hamiltonian.discarded_weight,
            'hermitian': hamiltonian.is_hermitian(),
            'number_conserving': check_number_symmetry(hamiltonian),
            'hamiltonian': hamiltonian.to_dict(),
        }
        emit(payload, 'map', directory / f"{path.stem}_map.json")

    print_table([(key, value) for key, value in payload.items() if key != 'hamiltonian'], ['Field', 'Value'])


@cli.command()
@click.argument('fcidump', required=False)
@click.option('--k', type=int, default=None, help='Number of heaviest groups to retain')
@click.option('--allocation', type=click.Choice(['uniform', 'weighted']), default=None,
              help='Shot allocation across retained groups')
@common_options
def group(fcidump, k, allocation, config_path, seed, shots, threads, output, verbose):
    """Qubit-wise commuting groups in descending coefficient weight"""
    overrides = common_overrides(seed, shots, threads, output)
    overrides.update({'measurement.k': k, 'measurement.allocation': allocation})
    config = prepare('group', config_path, overrides, verbose)
    with exit_codes():
        path = input_path(config, fcidump)
        _, hamiltonian = load_hamiltonian(config, path)
        plan = build_plan(hamiltonian, config.measurement.k, config.measurement.shots,
                          config.measurement.allocation)
        payload = {'command': 'group', 'input': str(path), **plan.summary(), 'plan': plan.to_dict()}
        emit(payload, 'group', output_dir(config) / f"{path.stem}_groups.json")

    rows = [(i, g.basis_string(), len(g.members), f"{g.weight:.6f}", 'yes' if i < plan.retained_k else 'no')
            for i, g in enumerate(plan.groups)]
    print_table(rows, ['Group', 'Basis', 'Strings', 'Weight', 'Retained'])
    print_table(list(plan.summary().items()), ['Field', 'Value'])


@cli.command()
@click.argument('fcidump', required=False)
@click.option('--k', type=int, default=None, help='Number of heaviest groups to retain')
@click.option('--weight-fraction', type=float, default=None,
              help='Retain the fewest groups carrying this fraction of the coefficient weight')
@common_options
def truncate(fcidump, k, weight_fraction, config_path, seed, shots, threads, output, verbose):
    """Exact ground energy of the full and the truncated Hamiltonian"""
    overrides = common_overrides(seed, shots, threads, output)
    overrides['measurement.k'] = k
    config = prepare('truncate', config_path, overrides, verbose)
    with exit_codes():
        path = input_path(config, fcidump)
        fermion, hamiltonian = load_hamiltonian(config, path)
        plan = build_plan(hamiltonian)
        if weight_fraction is not None:
            retained = k_for_weight_fraction(plan, weight_fraction)
        elif config.measurement.k is not None:
            retained = config.measurement.k
        else:
            raise ConfigError("truncate needs --k, measurement.k or --weight-fraction")
        truncated = truncate_groups(plan, retained)

        sector = (fermion.n_electrons, fermion.ms2) if config.solver.use_sector else None
        full_energy, _ = exact_ground_state(hamiltonian, sector)
        # dropping groups can split XX/YY partners, so the truncated sum may break symmetries
        truncated_energy, _ = exact_ground_state(truncated, sector, enforce_symmetry=False)
        kept = build_plan(hamiltonian, retained)
        payload = {
            'command': 'truncate',
            'input': str(path),
            **kept.summary(),
            'full_energy': full_energy,
            'truncated_energy': truncated_energy,
            'shift': truncated_energy - full_energy,
        }
        directory = output_dir(config)
        (directory / f"{path.stem}_k{retained}.paulis").write_text(truncated.to_text())
        emit(payload, 'truncate', directory / f"{path.stem}_truncate.json")

    print_table([(key, value) for key, value in payload.items()], ['Field', 'Value'])


@cli.command()
@click.argument('fcidump', required=False)
@click.option('--solver', 'solver_name', default=None, help='fci, adapt-vqe, qubit-adapt-vqe, uccgsd or adapt-gcim')
@click.option('--pool', default=None, help='fermionic-sd, fermionic-gsd or qubit-minimal')
@click.option('--grad-tol', type=float, default=None, help='Gradient-norm convergence threshold')
@click.option('--max-iter', type=int, default=None, help='Maximum selection iterations')
@click.option('--theta0', type=float, default=None, help='ADAPT-GCIM generator parameter')
@click.option('--x', type=int, default=None, help='ADAPT-GCIM optimization period')
@click.option('--y', type=int, default=None, help='ADAPT-GCIM optimizer iterations per round')
@click.option('--fci-reference/--no-fci-reference', default=True, help='Also report the FCI energy')
@common_options
def solve(fcidump, solver_name, pool, grad_tol, max_iter, theta0, x, y, fci_reference,
          config_path, seed, shots, threads, output, verbose):
    """Run one solver and write its trace as JSON and CSV"""
    overrides = common_overrides(seed, shots, threads, output)
    overrides.update({'solver.name': solver_name, 'solver.pool': pool, 'solver.grad_tol': grad_tol,
                      'solver.max_iter': max_iter, 'solver.theta0': theta0, 'solver.x': x, 'solver.y': y})
    config = prepare('solve', config_path, overrides, verbose)
    path = input_path(config, fcidump) if (fcidump or config.input.path) else None
    tag = config.solver.name if not (config.solver.name == 'adapt-gcim' and config.solver.y) \
        else f"adapt-gcim-{config.solver.x}-{config.solver.y}"
    stem = path.stem if path else 'result'
    directory = output_dir(config)

    with exit_codes(partial_path=directory / f"{stem}_{tag}_partial.json"):
        path = input_path(config, fcidump)
        fermion, hamiltonian = load_hamiltonian(config, path)
        trace, circuit = run_solver(hamiltonian, fermion, config.solver, config.threads, config.seed)

        fci_energy = None
        if fci_reference and config.solver.name != 'fci':
            fci_energy, _ = exact_ground_state(hamiltonian, (fermion.n_electrons, fermion.ms2))
        payload = {
            'command': 'solve',
            'input': str(path),
            'solver': trace.solver,
            'energy': trace.final_energy,
            'reference_energy': trace.reference_energy,
            'fci_energy': fci_energy,
            'error_vs_fci': None if fci_energy is None else trace.final_energy - fci_energy,
            'convergence_reason': trace.convergence_reason,
            'n_generators': len(trace.generators),
            'trace': trace.to_dict(),
            'circuit': circuit.to_dict() if circuit is not None else None,
        }
        emit(payload, 'solve', directory / f"{stem}_{tag}.json")
        trace.to_csv(directory / f"{stem}_{tag}.csv")

    rows = [('solver', trace.solver), ('energy', f"{trace.final_energy:.10f}"),
            ('Hartree-Fock', f"{trace.reference_energy:.10f}"),
            ('convergence', trace.convergence_reason), ('generators', len(trace.generators))]
    if fci_energy is not None:
        rows += [('FCI', f"{fci_energy:.10f}"),
                 ('error (mHa)', f"{1000 * (trace.final_energy - fci_energy):.4f}")]
    if circuit is not None:
        tally = circuit.tally()
        rows += [('one-qubit gates', tally.one_qubit), ('two-qubit gates', tally.two_qubit)]
    print_table(rows, ['Field', 'Value'])


@cli.command()
@click.argument('fcidump', required=False)
@click.option('--circuit', 'circuit_path', default=None, help='Circuit JSON or solve result JSON')
@click.option('--k', type=int, default=None, help='Number of heaviest groups to measure')
@click.option('--p2', type=float, default=None, help='Two-qubit depolarizing probability')
@common_options
def sample(fcidump, circuit_path, k, p2, config_path, seed, shots, threads, output, verbose):
    """Shot-based energy estimate of an ansatz circuit"""
    overrides = common_overrides(seed, shots, threads, output)
    overrides.update({'measurement.k': k, 'noise.p2': p2})
    config = prepare('sample', config_path, overrides, verbose)
    with exit_codes():
        path = input_path(config, fcidump)
        fermion, hamiltonian = load_hamiltonian(config, path)
        circuit = circuit_for_sampling(config, circuit_path, fermion, hamiltonian)
        plan = build_plan(hamiltonian, config.measurement.k, config.measurement.shots,
                          config.measurement.allocation)
        noise = NoiseModel(config.noise.p2, config.seed, config.noise.trajectories)
        occupied = fermion.reference_occupation()

        counts = sample_plan(circuit, occupied, plan, noise, config.seed, config.threads, key=('sample',))
        energy, standard_error = estimate_energy(counts, plan, config.threads)
        noiseless = expectation(prepare_state(circuit, occupied), plan.to_sum())
        payload = {
            'command': 'sample',
            'input': str(path),
            'energy': energy,
            'standard_error': standard_error,
            'noiseless': noiseless,
            'p2': config.noise.p2,
            'shots': int(sum(plan.shot_allocation)),
            **plan.summary(),
            'gate_counts': circuit.tally().to_dict(),
        }
        emit(payload, 'sample', output_dir(config) / f"{path.stem}_sample.json")

    print_table([(key, value) for key, value in payload.items() if key != 'gate_counts'], ['Field', 'Value'])


@cli.command()
@click.argument('fcidump', required=False)
@click.option('--circuit', 'circuit_path', default=None, help='Circuit JSON or solve result JSON')
@click.option('--k', type=int, default=None, help='Number of heaviest groups to measure')
@click.option('--p2', type=float, default=None, help='Two-qubit depolarizing probability')
@click.option('--factors', default=None, help='Comma-separated noise factors, e.g. 1,1.5,2')
@click.option('--unweighted', is_flag=True, help='Ordinary instead of weighted least squares')
@common_options
def zne(fcidump, circuit_path, k, p2, factors, unweighted, config_path, seed, shots, threads, output, verbose):
    """Zero-noise extrapolation; writes the series as JSON and CSV"""
    overrides = common_overrides(seed, shots, threads, output)
    overrides.update({'measurement.k': k, 'noise.p2': p2})
    if factors:
        try:
            overrides['zne.factors'] = [float(f) for f in factors.split(',')]
        except ValueError:
            raise click.BadParameter(f"cannot parse noise factors {factors!r}", param_hint='--factors')
    if unweighted:
        overrides['zne.weighted'] = False
    config = prepare('zne', config_path, overrides, verbose)
    with exit_codes():
        path = input_path(config, fcidump)
        fermion, hamiltonian = load_hamiltonian(config, path)
        circuit = circuit_for_sampling(config, circuit_path, fermion, hamiltonian)
        plan = build_plan(hamiltonian, config.measurement.k, config.measurement.shots,
                          config.measurement.allocation)
        noise = NoiseModel(config.noise.p2, config.seed, config.noise.trajectories)

        series = run_zne(circuit, fermion.reference_occupation(), plan, noise, config.zne.factors,
                         config.seed, config.zne.weighted, config.threads)
        directory = output_dir(config)
        payload = {'command': 'zne', 'input': str(path), 'p2': config.noise.p2, **series.to_dict()}
        emit(payload, 'zne', directory / f"{path.stem}_zne.json")
        series.to_csv(directory / f"{path.stem}_zne.csv")

    print_table([(p.noise_factor, p.energy, p.standard_error) for p in series.points],
                ['lambda', 'Energy', 'SE'])
    fit = series.fit
    print_table([('E0', fit.intercept), ('SE(E0)', fit.intercept_se), ('slope', fit.slope),
                 ('R^2', fit.r_squared), ('RMSE', fit.rmse), ('noiseless', series.noiseless)],
                ['Field', 'Value'])


@cli.command(name='downfold-toy')
@click.option('--n-spatial', type=int, default=None, help='Spatial orbitals of the toy system')
@click.option('--electrons', type=int, default=None, help='Electron count')
@click.option('--active', type=int, default=None, help='Active spatial orbitals')
@click.option('--scale', type=float, default=None, help='External amplitude scale')
@common_options
def downfold_toy(n_spatial, electrons, active, scale, config_path, seed, shots, threads, output, verbose):
    """Isospectrality, A7 error order and exact decoupling on a random toy Hamiltonian"""
    overrides = common_overrides(seed, shots, threads, output)
    overrides.update({'toy.n_spatial': n_spatial, 'toy.n_electrons': electrons,
                      'toy.active_spatial': active, 'toy.amplitude_scale': scale})
    config = prepare('downfold-toy', config_path, overrides, verbose)
    toy = config.toy
    with exit_codes():
        fermion = random_hamiltonian(toy.n_spatial, toy.n_electrons, seed=config.seed)
        space = ActiveSpaceDef.frontier(toy.n_spatial, toy.n_electrons, toy.active_spatial, fermion.ms2)
        dense = hamiltonian_matrix(fermion)
        normal_parts = fock_normal_parts(fermion, space.reference)
        sigma = build_sigma(random_external_amplitudes(space, toy.amplitude_scale, config.seed), space)

        transformed = bch_transform(dense, sigma, 'exact')
        spectrum_gap = float(np.max(np.abs(transformed.eigenvalues() - dense.eigenvalues())))
        scales, errors, slope = a7_error_scaling(dense, sigma, normal_parts, toy.scales)

        exact_energy = sector_lowest(dense, np.arange(dense.dimension), toy.n_electrons)
        decoupled = bch_transform(dense, decoupling_generator(dense, space), 'exact')
        effective = project_active(decoupled, space)
        effective_energy = sector_lowest(effective, space.model_space(), toy.n_electrons)

        payload = {
            'command': 'downfold-toy',
            'n_spin_orbitals': space.n_spin_orbitals,
            'active': list(space.active),
            'reference': list(space.reference),
            'isospectral_deviation': spectrum_gap,
            'a7_scales': list(scales),
            'a7_errors': errors,
            'a7_slope': slope,
            'exact_ground_energy': exact_energy,
            'decoupled_ground_energy': effective_energy,
            'decoupling_deviation': abs(effective_energy - exact_energy),
        }
        emit(payload, 'downfold_toy', output_dir(config) / 'downfold_toy.json')

    print_table([(s, e) for s, e in zip(scales, errors)], ['Scale', 'A7 Frobenius error'])
    print_table([(key, value) for key, value in payload.items() if not key.startswith('a7_')
                 or key == 'a7_slope'], ['Field', 'Value'])


if __name__ == "__main__":
    cli()
