import json

import pandas as pd
import pytest
from click.testing import CliRunner

import run_pipeline
from converters.jordan_wigner import jordan_wigner
from converters.pauli import PauliTerm
from errors import InsufficientShots, NonHermitianInput, SymmetryError
from extractors.fcidump import read_fcidump
from simulators.circuits import Circuit
from solvers.exact import exact_ground_state


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch):
    monkeypatch.setattr(run_pipeline, 'setup_logging', lambda *args, **kwargs: None)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / 'config.yaml'
    path.write_text(f"""
logging:
  file: null
output:
  dir: {tmp_path / 'results'}
measurement:
  shots: 256
noise:
  trajectories: 8
""")
    return str(path)


@pytest.fixture
def invoke(config_file):
    runner = CliRunner()

    def run(*args):
        return runner.invoke(run_pipeline.cli, [*map(str, args), '--config', config_file])
    return run


def results(tmp_path, name):
    return json.loads((tmp_path / 'results' / name).read_text())


def test_inspect_reports_string_count(invoke, fcidump_file, tmp_path):
    result = invoke('inspect', fcidump_file)
    assert result.exit_code == 0, result.output

    report = results(tmp_path, 'small_inspect.json')
    expected = jordan_wigner(read_fcidump(fcidump_file)).non_identity()
    assert report['pauli_strings'] == len(expected)
    assert report['n_spin_orbitals'] == 4
    assert report['symmetry']['hermitian'] is True


def test_corrupted_file_exits_with_parse_code(invoke, tmp_path):
    path = tmp_path / 'broken.FCIDUMP'
    path.write_text(" &FCI NORB=2,NELEC=2,MS2=0,\n &END\n  0.5 1 1 1 1\n  0.25 1 x 2 2\n")
    result = invoke('inspect', path)
    assert result.exit_code == run_pipeline.EXIT_PARSE


def test_core_only_file_has_no_strings(invoke, tmp_path):
    path = tmp_path / 'core.FCIDUMP'
    path.write_text(" &FCI NORB=2,NELEC=2,MS2=0,\n &END\n  -1.5 0 0 0 0\n")
    result = invoke('inspect', path)
    assert result.exit_code == 0, result.output

    report = results(tmp_path, 'core_inspect.json')
    assert report['pauli_strings'] == 0
    assert report['groups'] == 0
    assert report['identity_coeff'] == pytest.approx(-1.5)


def test_missing_input_is_a_config_error(invoke):
    assert invoke('inspect').exit_code == run_pipeline.EXIT_CONFIG


def test_nonexistent_file_exits_with_parse_code(invoke, tmp_path):
    result = invoke('inspect', tmp_path / 'absent.FCIDUMP')
    assert result.exit_code == run_pipeline.EXIT_PARSE


def test_undecodable_file_exits_with_parse_code(invoke, tmp_path):
    path = tmp_path / 'binary.FCIDUMP'
    path.write_bytes(b' &FCI NORB=2,\n\xff\xfe\x00\x81 &END\n')
    assert invoke('inspect', path).exit_code == run_pipeline.EXIT_PARSE


def test_unreadable_circuit_exits_with_parse_code(invoke, fcidump_file, tmp_path):
    result = invoke('sample', fcidump_file, '--circuit', tmp_path / 'absent.json')
    assert result.exit_code == run_pipeline.EXIT_PARSE


@pytest.mark.parametrize('error', [SymmetryError('[H, N] != 0'), NonHermitianInput('imaginary coefficients')])
def test_invalid_operator_exits_with_parse_code(invoke, fcidump_file, monkeypatch, error):
    def fail(*args, **kwargs):
        raise error
    monkeypatch.setattr(run_pipeline, 'validate_symmetries', fail)
    assert invoke('inspect', fcidump_file).exit_code == run_pipeline.EXIT_PARSE


def test_empty_histograms_exit_with_config_code(invoke, fcidump_file, circuit_file, monkeypatch):
    def fail(*args, **kwargs):
        raise InsufficientShots('Group ZZZZ has no recorded shots')
    monkeypatch.setattr(run_pipeline, 'estimate_energy', fail)
    result = invoke('sample', fcidump_file, '--circuit', circuit_file)
    assert result.exit_code == run_pipeline.EXIT_CONFIG


def test_map_writes_pauli_text(invoke, fcidump_file, tmp_path):
    result = invoke('map', fcidump_file)
    assert result.exit_code == 0, result.output
    assert (tmp_path / 'results' / 'small.paulis').exists()
    assert results(tmp_path, 'small_map.json')['number_conserving'] is True


def test_group_k_out_of_range(invoke, fcidump_file):
    assert invoke('group', fcidump_file, '--k', 1000).exit_code == run_pipeline.EXIT_CONFIG


def test_truncate_keeping_everything_has_no_shift(invoke, fcidump_file, tmp_path):
    result = invoke('truncate', fcidump_file, '--weight-fraction', 1.0)
    assert result.exit_code == 0, result.output
    assert results(tmp_path, 'small_truncate.json')['shift'] == pytest.approx(0.0, abs=1e-10)


def test_truncate_to_one_group_still_reports_a_shift(invoke, fcidump_file, tmp_path):
    # a single group may hold XX without its YY partner
    result = invoke('truncate', fcidump_file, '--k', 1)
    assert result.exit_code == 0, result.output
    payload = results(tmp_path, 'small_truncate.json')
    assert payload['shift'] == pytest.approx(payload['truncated_energy'] - payload['full_energy'])


def test_solve_fci_matches_exact(invoke, fcidump_file, tmp_path):
    result = invoke('solve', fcidump_file, '--solver', 'fci')
    assert result.exit_code == 0, result.output

    fermion = read_fcidump(fcidump_file)
    exact, _ = exact_ground_state(jordan_wigner(fermion), (fermion.n_electrons, fermion.ms2))
    payload = results(tmp_path, 'small_fci.json')
    assert payload['energy'] == pytest.approx(exact, abs=1e-10)
    assert payload['circuit'] is None
    assert (tmp_path / 'results' / 'small_fci.csv').exists()


def test_solve_is_reproducible(invoke, fcidump_file, tmp_path):
    def run():
        result = invoke('solve', fcidump_file, '--solver', 'adapt-vqe', '--seed', 3)
        assert result.exit_code == 0, result.output
        payload = results(tmp_path, 'small_adapt-vqe.json')
        payload['trace'].pop('timings')
        return payload

    assert run() == run()


def test_gcim_output_is_tagged(invoke, fcidump_file, tmp_path):
    result = invoke('solve', fcidump_file, '--solver', 'adapt-gcim', '--x', 2, '--y', 2)
    assert result.exit_code == 0, result.output
    assert results(tmp_path, 'small_adapt-gcim-2-2.json')['solver'] == 'adapt-gcim(2,2)'


def test_unknown_solver_is_a_config_error(invoke, fcidump_file):
    assert invoke('solve', fcidump_file, '--solver', 'dmrg').exit_code == run_pipeline.EXIT_CONFIG


@pytest.fixture
def circuit_file(tmp_path):
    circuit = Circuit(4, [(PauliTerm.from_label('XXXY'), -0.2), (PauliTerm.from_label('IYZX'), 0.45)])
    path = tmp_path / 'circuit.json'
    path.write_text(json.dumps(circuit.to_dict()))
    return path


def test_zne_single_factor_is_rejected(invoke, fcidump_file, circuit_file):
    result = invoke('zne', fcidump_file, '--circuit', circuit_file, '--factors', '1.0')
    assert result.exit_code == run_pipeline.EXIT_CONFIG


def test_zne_noiseless_run(invoke, fcidump_file, circuit_file, tmp_path):
    result = invoke('zne', fcidump_file, '--circuit', circuit_file, '--p2', 0, '--factors', '1,2')
    assert result.exit_code == 0, result.output

    payload = results(tmp_path, 'small_zne.json')
    assert [p['noise_factor'] for p in payload['points']] == [1.0, 2.0]
    frame = pd.read_csv(tmp_path / 'results' / 'small_zne.csv')
    assert len(frame) == 2


def test_zne_circuit_on_wrong_register(invoke, fcidump_file, tmp_path):
    path = tmp_path / 'wide.json'
    path.write_text(json.dumps(Circuit(6, [(PauliTerm.from_label('XXIIII'), 0.1)]).to_dict()))
    result = invoke('zne', fcidump_file, '--circuit', path)
    assert result.exit_code == run_pipeline.EXIT_CONFIG


def test_sample_reports_energy(invoke, fcidump_file, circuit_file, tmp_path):
    result = invoke('sample', fcidump_file, '--circuit', circuit_file, '--shots', 2000)
    assert result.exit_code == 0, result.output

    payload = results(tmp_path, 'small_sample.json')
    assert abs(payload['energy'] - payload['noiseless']) < 5 * payload['standard_error'] + 1e-9
    assert payload['gate_counts']['two_qubit'] == 10


@pytest.mark.slow
def test_downfold_toy(invoke, tmp_path):
    result = invoke('downfold-toy')
    assert result.exit_code == 0, result.output

    payload = results(tmp_path, 'downfold_toy.json')
    assert payload['isospectral_deviation'] < 1e-9
    assert payload['decoupling_deviation'] < 1e-8
    assert 2.5 <= payload['a7_slope'] <= 3.5
