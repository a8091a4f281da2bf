from decimal import Decimal
import json

import pytest
import sympy

from kahler_dynamics.errors import ConfigValidationError, ParseError
from kahler_dynamics.utils.exact import format_exact, parse_exact, parse_matrix
from kahler_dynamics.utils.forms import parse_config
from kahler_dynamics.utils.serialize import render_json, to_jsonable

TORUS = {'type': 'torus', 'parameters': {'A': [[2, 1], [1, 1]]}}


@pytest.mark.parametrize('text, expected', [
    (3, sympy.Integer(3)),
    ('1.5', sympy.Rational(3, 2)),
    ('3/2', sympy.Rational(3, 2)),
    ('-i', -sympy.I),
    ('1+2i', 1 + 2 * sympy.I),
    ('0.1+0.2i', sympy.Rational(1, 10) + sympy.Rational(1, 5) * sympy.I),
    (Decimal('0.25'), sympy.Rational(1, 4)),
])
def test_parse_exact(text, expected):
    assert parse_exact(text) == expected


@pytest.mark.parametrize('value', [0.5, True, '1/0', 'pi', None])
def test_parse_exact_rejects(value):
    with pytest.raises(ConfigValidationError):
        parse_exact(value)


def test_format_exact_parses_back():
    for value in (sympy.Rational(-7, 3), sympy.Rational(1, 10) + sympy.Rational(1, 5) * sympy.I, -sympy.I):
        assert parse_exact(format_exact(value)) == value


def test_parse_matrix_needs_rectangular_rows():
    with pytest.raises(ConfigValidationError):
        parse_matrix([[1, 2], [3]])


def test_defaults_are_filled(app):
    config = parse_config(json.dumps({'command': 'degrees', 'model': TORUS}))
    assert config.precision_bits == app.config['PRECISION_BITS']
    assert config.n_max == app.config['N_MAX']
    assert config.tolerances['fit_window'] == (20, 50)
    assert config.output == {'path': None, 'format': 'json'}
    assert config.model['parameters']['A'][0][0] == 2


def test_json_decimals_stay_exact():
    text = '{"command": "jordan", "options": {"matrix": [[1.5, 0], [0, 2]]}}'
    config = parse_config(text)
    assert config.options['matrix'][0][0] == sympy.Rational(3, 2)


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as excinfo:
        parse_config('{"command": "degrees",\n  "model": }')
    assert excinfo.value.line == 2


@pytest.mark.parametrize('payload, field', [
    ({'command': 'degrees', 'model': TORUS, 'bogus': 1}, 'config.bogus'),
    ({'command': 'degrees', 'model': TORUS, 'options': {'s': 1}}, 'options.s'),
    ({'command': 'spin', 'model': TORUS}, 'config.command'),
    ({'command': 'degrees'}, 'model'),
    ({'command': 'degrees', 'model': {'type': 'sphere', 'parameters': {}}}, 'model.type'),
    ({'command': 'degrees', 'model': {'type': 'mazur', 'parameters': {'k': 2}}}, 'model.parameters'),
    ({'command': 'degrees', 'model': TORUS, 'precision_bits': 32}, 'config.precision_bits'),
    ({'command': 'iterate', 'n_max': 10}, 'config.n_max'),
    ({'command': 'mixing', 'model': TORUS, 'grid': {'axis_points': 100}}, 'grid.axis_points'),
    ({'command': 'degrees', 'model': TORUS, 'tolerances': {'fit_window': [50, 20]}}, 'tolerances.fit_window'),
    ({'command': 'degrees', 'model': TORUS, 'output': {'format': 'xml'}}, 'output.format'),
    ({'command': 'degrees', 'model': TORUS, 'options': {'p': -1}}, 'options.p'),
    ({'command': 'jordan', 'options': {'matrix': [[1, 0], [0, 1]], 'plain': 'yes'}}, 'options.plain'),
    ({'command': 'degrees', 'model': TORUS, 'options': {'p': 3}}, 'options.p'),
    ({'command': 'relative', 'model': TORUS, 'options': {'s': 2}}, 'options.s'),
    ({'command': 'relative', 'model': TORUS, 'options': {'s': 0, 'p': 3}}, 'options.p'),
    ({'command': 'relative', 'model': TORUS, 'options': {'s': 1, 'p1': 1, 'p2': 1}}, 'options.p1'),
    ({'command': 'cesaro', 'model': TORUS, 'options': {'s': 3}}, 'options.s'),
    ({'command': 'cesaro', 'model': TORUS, 'options': {'S_class': 'dominant'}}, 'options.S_class'),
    ({'command': 'jordan', 'model': {'type': 'mazur', 'parameters': {'k': 3, 'word': [1]}}, 'options': {'p': 4}},
     'options.p'),
])
def test_validation_names_the_field(payload, field):
    with pytest.raises(ConfigValidationError) as excinfo:
        parse_config(json.dumps(payload))
    assert excinfo.value.field == field
    assert excinfo.value.to_record()['error']['code'] == 'ValidationError'


def test_jordan_and_iterate_need_no_model():
    assert parse_config({'command': 'jordan', 'options': {'matrix': [[2, 1], [0, 2]]}}).model is None
    config = parse_config({'command': 'iterate', 'options': {'G': [[3]], 'Lambda': [[2]], 'nu': Decimal('0.5')}})
    assert config.options['nu'] == 0.5
    assert config.options['G'] == [[3]]


def test_option_parsing():
    config = parse_config({
        'command': 'mixing', 'model': TORUS,
        'options': {'m': [1, 0, 0, 0], 'phi': [{'kind': 'cos', 'frequency': [1, 0, 0, 0], 'amplitude': '1/2'}]},
    })
    assert config.options['m'] == [1, 0, 0, 0]
    assert config.options['phi'][0]['amplitude'] == sympy.Rational(1, 2)
    relative = parse_config({'command': 'relative', 'model': TORUS, 'options': {'T_class': 'dominant', 's': 1}})
    assert relative.options['T_class'] == 'dominant'


def test_resolved_config_parses_back():
    config = parse_config({
        'command': 'relative', 'model': {'type': 'raw', 'parameters': {
            'blocks': [[[1]], [[2, 0], [0, '1/2']], [[1]]], 'cup': {'1,1': [[0, 1, 1, 0]]}}},
        'options': {'T_class': ['1+i', 0], 'lambda_T': '2', 's': 1},
        'tolerances': {'eigen': Decimal('1e-8')},
    })
    resolved = json.loads(render_json(config.to_dict()))
    assert parse_config(resolved) == config
    assert parse_config(resolved).digest() == config.digest()


def test_to_jsonable_renders_exact_and_mp_values():
    from kahler_dynamics.dynamics.numeric import context
    ctx = context(128)
    payload = to_jsonable({'x': sympy.Rational(1, 3), 'y': ctx.mpf(2), 'z': ctx.mpc(1, 1), (1, 1): [1.5]}, 20)
    assert payload['x'] == '1/3'
    assert payload['y'] == '2.0'
    assert payload['z'] == {'re': '1.0', 'im': '1.0'}
    assert payload['1,1'] == [1.5]


def test_bidegrees_within_range_are_accepted():
    config = parse_config({'command': 'relative', 'model': TORUS, 'options': {'s': 0, 'p1': 1, 'p2': 1}})
    assert config.options['p1'] + config.options['p2'] == 2
    assert parse_config({'command': 'jordan', 'options': {'matrix': [[2]], 'p': 7}}).options['p'] == 7
