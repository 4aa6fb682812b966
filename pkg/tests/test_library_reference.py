"""Checks against the tabulated energies of the DUCC library systems

Runs only for reference entries whose ``file`` is already in the local cache
(fetch them with ``python3 scripts/reproduce_tables.py``).
"""

from pathlib import Path

import pytest

from converters.jordan_wigner import jordan_wigner
from extractors.fcidump import read_fcidump
from settings import load_config
from solvers.exact import exact_ground_state

pytestmark = [pytest.mark.library, pytest.mark.slow]

CONFIG = load_config()
CACHED = {
    name: Path(CONFIG.library.cache_dir) / entry.file
    for name, entry in CONFIG.library.references.items()
    if entry.file and (Path(CONFIG.library.cache_dir) / entry.file).exists()
}


@pytest.mark.skipif(not CACHED, reason='no DUCC library files in the cache')
@pytest.mark.parametrize('system', sorted(CACHED))
def test_fci_matches_table(system):
    entry = CONFIG.library.references[system]
    fermion = read_fcidump(CACHED[system], CONFIG.input.orbital_basis)
    hamiltonian = jordan_wigner(fermion, CONFIG.mapping.prune_threshold)

    if entry.pauli_strings is not None:
        assert len(hamiltonian.non_identity()) == entry.pauli_strings
    energy, _ = exact_ground_state(hamiltonian, (fermion.n_electrons, fermion.ms2))
    # tables round to 0.1 mHa
    assert energy == pytest.approx(entry.fci, abs=2e-4)
