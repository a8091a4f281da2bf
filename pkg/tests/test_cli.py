import json

import pandas as pd

from kahler_dynamics.models.run import RunRecord

CAT_MAP = {'type': 'torus', 'parameters': {'A': [[2, 1], [1, 1]]}}


def invoke(runner, command, path, *extra):
    return runner.invoke(args=[command, '--config', path, *extra])


def test_jordan_writes_document(runner, write_config, tmp_path):
    out = tmp_path / 'jordan.json'
    path = write_config({'command': 'jordan', 'n_max': 60, 'options': {'matrix': [[2, 1], [0, 2]]}})
    result = invoke(runner, 'jordan', path, '--output', str(out))
    assert result.exit_code == 0, result.output
    document = json.loads(out.read_text())
    assert document['command'] == 'jordan'
    assert document['numeric_format'] == {'precision_bits': 128, 'decimal_digits': 38}
    assert document['result']['jordan']['multiplicity'] == 2
    assert document['result']['jordan']['theta_group'] == {'kind': 'Trivial', 'order': 1}
    assert document['config']['options']['matrix'] == [['2', '1'], ['0', '2']]
    assert document['warnings'] == []

    record = RunRecord.query.one()
    assert record.status == 'succeeded'
    assert record.command == 'jordan'
    assert record.finished_at is not None


def test_degrees_to_stdout(runner, write_config):
    result = invoke(runner, 'degrees', write_config({'command': 'degrees', 'model': CAT_MAP}))
    assert result.exit_code == 0
    document = json.loads(result.stdout)
    assert document['result']['multiplicities'] == [1, 1, 1]
    assert document['result']['concavity']['concave'] is True
    assert abs(float(document['result']['degrees'][1]) - 6.854101966249685) < 1e-12


def test_precision_override(runner, write_config):
    result = invoke(runner, 'degrees', write_config({'command': 'degrees', 'model': CAT_MAP}), '--precision', '256')
    assert result.exit_code == 0
    document = json.loads(result.stdout)
    assert document['config']['precision_bits'] == 256
    assert document['numeric_format']['precision_bits'] == 256


def test_csv_output_with_sidecar(runner, write_config, tmp_path):
    out = tmp_path / 'degrees.csv'
    path = write_config({'command': 'degrees', 'model': CAT_MAP})
    result = invoke(runner, 'degrees', path, '--format', 'csv', '--output', str(out))
    assert result.exit_code == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ['p', 'degree', 'multiplicity']
    assert frame['p'].tolist() == [0, 1, 2]
    sidecar = json.loads((tmp_path / 'degrees.csv.config.json').read_text())
    assert sidecar['config']['output']['format'] == 'csv'


def test_mixing_zero_frequency_fails(runner, write_config, tmp_path):
    out = tmp_path / 'mixing.json'
    path = write_config({'command': 'mixing', 'model': CAT_MAP,
                         'options': {'m': [0, 0, 0, 0], 'm_prime': [1, 0, 0, 0]}})
    result = invoke(runner, 'mixing', path, '--output', str(out))
    assert result.exit_code == 2
    error = json.loads(out.read_text())['error']
    assert error['code'] == 'ZeroFrequency'

    record = RunRecord.query.one()
    assert record.status == 'failed'
    assert record.error_code == 'ZeroFrequency'


def test_mixing_characters(runner, write_config):
    path = write_config({'command': 'mixing', 'model': CAT_MAP, 'n_max': 20,
                         'options': {'m': [1, 0, 0, 0], 'm_prime': [-2, -1, 0, 0]}})
    result = invoke(runner, 'mixing', path)
    assert result.exit_code == 0
    document = json.loads(result.stdout)
    assert document['result']['characters']['last_coincidence'] == 1
    assert document['result']['grid_agrees'] is True


def test_syntax_error_exits_with_record(runner, write_config, tmp_path):
    out = tmp_path / 'broken.json'
    result = invoke(runner, 'degrees', write_config('{"command": "degrees",'), '--output', str(out))
    assert result.exit_code == 2
    error = json.loads(out.read_text())['error']
    assert error['code'] == 'ParseError'
    assert 'line' in error['details']


def test_command_must_match(runner, write_config):
    result = invoke(runner, 'jordan', write_config({'command': 'degrees', 'model': CAT_MAP}))
    assert result.exit_code == 2
    assert json.loads(result.stdout)['error']['code'] == 'ValidationError'


def test_command_defaults_to_invoked_one(runner, write_config):
    result = invoke(runner, 'chain', write_config({'model': CAT_MAP}))
    assert result.exit_code == 0
    document = json.loads(result.stdout)
    assert document['command'] == 'chain'
    assert document['result']['chain']['applicable'] is True


def test_non_unit_determinant(runner, write_config):
    path = write_config({'command': 'degrees', 'model': {'type': 'torus', 'parameters': {'A': [[2, 0], [0, 1]]}}})
    result = invoke(runner, 'degrees', path)
    assert result.exit_code == 2
    assert json.loads(result.stdout)['error']['code'] == 'NotUnitDeterminant'


def test_missing_config_file_is_a_usage_error(runner, tmp_path):
    result = invoke(runner, 'degrees', str(tmp_path / 'absent.json'))
    assert result.exit_code != 0
    assert not (tmp_path / 'absent.json').exists()


def test_degree_out_of_range_is_a_validation_error(runner, write_config, tmp_path):
    out = tmp_path / 'failed.json'
    path = write_config({'command': 'degrees', 'model': CAT_MAP, 'options': {'p': 3},
                         'output': {'path': str(out)}})
    result = invoke(runner, 'degrees', path)
    assert result.exit_code == 2
    error = json.loads(out.read_text())['error']
    assert error['code'] == 'ValidationError'
    assert error['details']['field'] == 'options.p'


def test_cesaro_on_raw_model_needs_a_class(runner, write_config):
    raw = {'type': 'raw', 'parameters': {'blocks': [[[1]], [[2, 0], [0, '1/2']], [[1]]]}}
    result = invoke(runner, 'cesaro', write_config({'command': 'cesaro', 'model': raw}))
    assert result.exit_code == 2
    error = json.loads(result.stdout)['error']
    assert error['details']['field'] == 'options.S_class'
    assert RunRecord.query.one().status == 'failed'
