#!/usr/bin/env python3
"""
Reproduce the solver comparison on the DUCC Hamiltonian library

Runs FCI plus ADAPT-VQE, ADAPT-GCIM, ADAPT-GCIM(2,2), qubit-ADAPT-VQE and
UCCGSD on every reference system in config.yaml that names a library file,
then prints the energies against the tabulated values and flags accuracy
amplification (solver energy below the CCSD source energy).
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from tabulate import tabulate

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from collectors.library_collector import LibraryCollector, compare_to_reference  # noqa: E402
from converters.jordan_wigner import jordan_wigner  # noqa: E402
from errors import DuccError  # noqa: E402
from extractors.fcidump import read_fcidump  # noqa: E402
from settings import load_config, setup_logging  # noqa: E402
from solvers.runner import run_solver  # noqa: E402

logger = logging.getLogger('reproduce_tables')

# (label, solver name, x, y)
SOLVER_RUNS = [
    ('fci', 'fci', 1, 0),
    ('adapt-vqe', 'adapt-vqe', 1, 0),
    ('adapt-gcim', 'adapt-gcim', 1, 0),
    ('adapt-gcim(2,2)', 'adapt-gcim', 2, 2),
    ('qubit-adapt-vqe', 'qubit-adapt-vqe', 1, 0),
    ('uccgsd', 'uccgsd', 1, 0),
]


def run_system(name, path, config, solvers):
    """Energies of the selected solvers on one library file"""
    fermion = read_fcidump(path, config.input.orbital_basis)
    hamiltonian = jordan_wigner(fermion, config.mapping.prune_threshold)
    logger.info(f"{name}: {fermion.n_spatial} orbitals, {fermion.n_electrons} electrons, "
                f"{len(hamiltonian.non_identity())} Pauli strings")

    energies = {}
    for label, solver, x, y in SOLVER_RUNS:
        if solvers and label not in solvers:
            continue
        solver_config = dataclasses.replace(config.solver, name=solver, x=x, y=y)
        trace, _ = run_solver(hamiltonian, fermion, solver_config, config.threads, config.seed)
        energies[label] = trace.final_energy
    return energies, len(hamiltonian.non_identity())


def main():
    parser = argparse.ArgumentParser(description='Solver comparison on the DUCC Hamiltonian library')
    parser.add_argument('--config', default=None, help='Configuration file path')
    parser.add_argument('--systems', nargs='+', help='Reference systems to run (default: all with a file)')
    parser.add_argument('--solvers', nargs='+', choices=[run[0] for run in SOLVER_RUNS],
                        help='Solvers to run (default: all)')
    parser.add_argument('--list', metavar='PATTERN', nargs='?', const='',
                        help='List library FCIDUMP files matching PATTERN and exit')
    parser.add_argument('--verbose', action='store_true', help='Enable verbose logging')
    args = parser.parse_args()

    try:
        config = load_config(args.config).validate()
    except DuccError as e:
        print(f"\n✗ Configuration error: {e}")
        return 1
    setup_logging(config.logging, args.verbose)
    collector = LibraryCollector(config.library)

    try:
        if args.list is not None:
            for path in collector.list_files(args.list):
                print(path)
            return 0

        references = {name: entry for name, entry in config.library.references.items()
                      if entry.file and (not args.systems or name in args.systems)}
        if not references:
            print("No reference system names a library file; set library.references.<name>.file")
            return 1

        rows, strings = [], []
        for name, path in collector.fetch_references(references).items():
            energies, n_strings = run_system(name, path, config, args.solvers)
            rows.extend(compare_to_reference(name, energies, references[name]))
            strings.append((name, n_strings, references[name].pauli_strings))
    except DuccError as e:
        logger.error(f"Reproduction failed: {e}")
        return 1

    print("\n" + "=" * 70)
    print("Solver energies (Ha) against the reference table")
    print("=" * 70)
    print(tabulate([(r['system'], r['solver'], f"{r['energy']:.6f}",
                     '' if r['reference'] is None else f"{r['reference']:.4f}",
                     '' if r['deviation_mha'] is None else f"{r['deviation_mha']:+.2f}",
                     '' if r['amplified'] is None else ('yes' if r['amplified'] else 'no'))
                    for r in rows],
                   headers=['System', 'Solver', 'Energy', 'Reference', 'Dev (mHa)', 'Below CCSD'],
                   tablefmt='grid'))
    print(tabulate(strings, headers=['System', 'Pauli strings', 'Reference'], tablefmt='grid'))
    return 0


if __name__ == "__main__":
    sys.exit(main())
