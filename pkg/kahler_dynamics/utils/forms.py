"""Run configuration: JSON decoding, WTForms validation and the resolved ``RunConfig``."""
from dataclasses import asdict, dataclass, field
from decimal import Decimal
import hashlib
import json

from flask import current_app, has_app_context
from wtforms import Field, FloatField, Form, IntegerField, StringField
from wtforms.validators import AnyOf, DataRequired, NumberRange, ValidationError

from config import config as config_classes
from kahler_dynamics.errors import ConfigValidationError, ParseError
from kahler_dynamics.utils.exact import format_nested, parse_exact, parse_matrix, parse_vector

COMMANDS = ('degrees', 'jordan', 'relative', 'cesaro', 'green', 'iterate', 'mixing', 'chain')
MODEL_TYPES = ('torus', 'mazur', 'raw')
FORMATS = ('json', 'csv')

TOP_LEVEL_KEYS = {'command', 'model', 'precision_bits', 'n_max', 'N_max', 'grid', 'output', 'tolerances', 'options'}
SECTION_KEYS = {
    'model': {'type', 'parameters'},
    'grid': {'axis_points', 'samples', 'angle_tolerance', 'search_limit'},
    'output': {'path', 'format'},
    'tolerances': {'eigen', 'plateau', 'cone', 'tie_bits', 'concavity_bits', 'rate_slack', 'fit_window',
                   'digit_budget'},
}
PARAMETER_KEYS = {
    'torus': {'A'},
    'mazur': {'k', 'word'},
    'raw': {'blocks', 'kahler_class', 'cup', 'pushforward'},
}
OPTION_KEYS = {
    'degrees': {'p', 'n_min', 'inverse'},
    'jordan': {'matrix', 'p', 'n_min', 'cone', 'plain'},
    'relative': {'T_class', 's', 'lambda_T', 'p1', 'p2', 'p', 'n_min'},
    'cesaro': {'S_class', 's'},
    'chain': set(),
    'green': {'nu'},
    'iterate': {'G', 'Lambda', 'u', 'nu', 'power', 'scales'},
    'mixing': {'m', 'm_prime', 'phi', 'psi', 'n_min', 'exponents'},
}
EXACT_VECTOR_OPTIONS = {'T_class', 'S_class'}
EXACT_MATRIX_OPTIONS = {'matrix', 'Lambda'}


# Custom fields

class WindowField(Field):
    """An increasing pair of positive integers."""

    def process_data(self, value):
        self.data = tuple(value) if value is not None else None

    def pre_validate(self, form):
        if self.data is None:
            return
        if len(self.data) != 2 or not all(isinstance(v, int) and not isinstance(v, bool) for v in self.data):
            raise ValidationError('fit window must be two integers')
        if not 1 <= self.data[0] < self.data[1]:
            raise ValidationError('fit window must satisfy 1 <= lo < hi')


class PayloadField(Field):
    """Structured JSON payload, validated by the owning form."""

    def process_data(self, value):
        self.data = value


# Section forms

class ModelForm(Form):
    type = StringField('Model type', validators=[DataRequired(), AnyOf(MODEL_TYPES)])
    parameters = PayloadField('Parameters')

    def validate_parameters(self, field):
        if not isinstance(field.data, dict):
            raise ValidationError('parameters must be an object')
        unknown = set(field.data) - PARAMETER_KEYS.get(self.type.data, set())
        if unknown:
            raise ValidationError(f'unknown parameters {sorted(unknown)}')
        if self.type.data == 'torus' and 'A' not in field.data:
            raise ValidationError('torus models need the matrix A')
        if self.type.data == 'mazur' and not {'k', 'word'} <= set(field.data):
            raise ValidationError('Mazur models need k and word')
        if self.type.data == 'raw' and 'blocks' not in field.data:
            raise ValidationError('raw models need blocks')


class OutputForm(Form):
    path = StringField('Output path')
    format = StringField('Format', validators=[DataRequired(), AnyOf(FORMATS)])


class ToleranceForm(Form):
    eigen = FloatField('Eigen tolerance', validators=[NumberRange(min=0, max=1)])
    plateau = FloatField('Plateau tolerance', validators=[NumberRange(min=0, max=1)])
    cone = FloatField('Cone tolerance', validators=[NumberRange(min=0, max=1)])
    tie_bits = IntegerField('Tie threshold bits', validators=[NumberRange(min=8)])
    concavity_bits = IntegerField('Concavity tolerance bits', validators=[NumberRange(min=8)])
    rate_slack = FloatField('Rate slack', validators=[NumberRange(min=1)])
    fit_window = WindowField('Fit window')
    digit_budget = IntegerField('Digit budget', validators=[NumberRange(min=10)])


class GridForm(Form):
    axis_points = IntegerField('Points per axis')
    samples = IntegerField('Subsequence targets', validators=[NumberRange(min=2)])
    angle_tolerance = FloatField('Angle tolerance', validators=[NumberRange(min=0, max=1)])
    search_limit = IntegerField('Search limit', validators=[NumberRange(min=1)])

    def validate_axis_points(self, field):
        if field.data is None:
            return
        if field.data < 8 or field.data & (field.data - 1):
            raise ValidationError('points per axis must be a power of two, at least 8')


class RunConfigForm(Form):
    command = StringField('Command', validators=[DataRequired(), AnyOf(COMMANDS)])
    precision_bits = IntegerField('Precision', validators=[NumberRange(min=64)])
    n_max = IntegerField('n_max', validators=[NumberRange(min=1)])
    N_max = IntegerField('N_max', validators=[NumberRange(min=1)])

    def validate_n_max(self, field):
        if self.command.data == 'iterate' and field.data is not None and field.data < 20:
            raise ValidationError('iterations need n_max >= 20')


@dataclass
class RunConfig:
    command: str
    model: dict = None
    precision_bits: int = 128
    n_max: int = 200
    N_max: int = 200
    grid: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def to_dict(self):
        """JSON-ready resolved config with exact numbers as strings."""
        data = asdict(self)
        data['tolerances'] = dict(data['tolerances'], fit_window=list(self.tolerances['fit_window']))
        return format_nested(data)

    def digest(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


# Defaults

def config_defaults():
    """Defaults from the active application config, or the default config class."""
    source = current_app.config if has_app_context() else {
        key: getattr(config_classes['default'], key) for key in dir(config_classes['default']) if key.isupper()}
    return {
        'precision_bits': source['PRECISION_BITS'],
        'n_max': source['N_MAX'],
        'N_max': source['CESARO_N_MAX'],
        'grid': {'axis_points': None, 'samples': source['SAMPLE_TARGETS'],
                 'angle_tolerance': source['SAMPLE_ANGLE_TOLERANCE'], 'search_limit': source['SAMPLE_SEARCH_LIMIT']},
        'output': {'path': None, 'format': 'json'},
        'tolerances': {'eigen': source['EIGEN_TOLERANCE'], 'plateau': source['PLATEAU_TOLERANCE'],
                       'cone': source['CONE_TOLERANCE'], 'tie_bits': source['TIE_THRESHOLD_BITS'],
                       'concavity_bits': source['TIE_THRESHOLD_BITS'], 'rate_slack': source['RATE_SLACK'],
                       'fit_window': tuple(source['FIT_WINDOW']), 'digit_budget': source['DIGIT_BUDGET']},
    }


# Parsing

def decode_config(text):
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as e:
        raise ParseError(f'invalid configuration syntax: {e.msg}', line=e.lineno, column=e.colno)


def _reject_unknown(section, allowed, name):
    if not isinstance(section, dict):
        raise ConfigValidationError(f'{name} must be an object', field=name)
    unknown = set(section) - allowed
    if unknown:
        raise ConfigValidationError(f'unknown keys {sorted(unknown)} in {name}', field=f'{name}.{sorted(unknown)[0]}')


def _validate(form, prefix):
    if not form.validate():
        name, messages = sorted(form.errors.items())[0]
        raise ConfigValidationError(f'{prefix}.{name}: {messages[0]}', field=f'{prefix}.{name}')
    return form.data


def _plain_numbers(section):
    """Decimals from the JSON decoder become floats in tolerance-like sections."""
    return {k: float(v) if isinstance(v, Decimal) else v for k, v in section.items()}


def _merge(defaults, section):
    merged = dict(defaults)
    merged.update({k: v for k, v in section.items() if v is not None})
    return merged


def _parse_model(section):
    _reject_unknown(section, SECTION_KEYS['model'], 'model')
    data = _validate(ModelForm(data=section), 'model')
    parameters = data['parameters']
    if data['type'] == 'torus':
        parsed = {'A': parse_matrix(parameters['A'], 'model.parameters.A')}
    elif data['type'] == 'mazur':
        k, word = parameters['k'], parameters['word']
        if not isinstance(k, int) or isinstance(k, bool):
            raise ConfigValidationError('k must be an integer', field='model.parameters.k')
        if not isinstance(word, list) or not all(isinstance(i, int) for i in word):
            raise ConfigValidationError('word must be a list of indices', field='model.parameters.word')
        parsed = {'k': k, 'word': list(word)}
    else:
        parsed = {'blocks': [parse_matrix(b, 'model.parameters.blocks') for b in parameters['blocks']]}
        if parameters.get('kahler_class') is not None:
            parsed['kahler_class'] = [None if v is None else parse_vector(v, 'model.parameters.kahler_class')
                                      for v in parameters['kahler_class']]
        if parameters.get('cup') is not None:
            parsed['cup'] = {_cup_key(key): parse_matrix(matrix, 'model.parameters.cup')
                             for key, matrix in parameters['cup'].items()}
        if parameters.get('pushforward') is not None:
            parsed['pushforward'] = [parse_matrix(b, 'model.parameters.pushforward')
                                     for b in parameters['pushforward']]
    return {'type': data['type'], 'parameters': parsed}


def _cup_key(key):
    try:
        p, q = (int(part) for part in key.split(','))
    except ValueError:
        raise ConfigValidationError(f'cup key {key!r} must look like "p,q"', field='model.parameters.cup')
    return f'{p},{q}'


def _parse_options(command, options):
    _reject_unknown(options, OPTION_KEYS[command], 'options')
    parsed = {}
    for key, value in options.items():
        name = f'options.{key}'
        if key in EXACT_MATRIX_OPTIONS:
            parsed[key] = parse_matrix(value, name)
        elif key in EXACT_VECTOR_OPTIONS:
            # only T_class has a derived default
            parsed[key] = value if key == 'T_class' and value == 'dominant' else parse_vector(value, name)
        elif key == 'lambda_T':
            parsed[key] = parse_exact(value, name)
        elif key == 'G':
            parsed[key] = [[int(v) for v in row] for row in parse_matrix(value, name)]
        elif key in ('nu',):
            parsed[key] = float(value)
        elif key in ('m', 'm_prime', 'cone', 'scales'):
            parsed[key] = _integer_lists(value, name)
        elif key == 'exponents':
            parsed[key] = [float(v) for v in value]
        elif key == 'u':
            if not isinstance(value, list) or not value:
                raise ConfigValidationError('u needs one list of cosine terms per component', field=name)
            parsed[key] = [_parse_terms(component, name) for component in value]
        elif key in ('phi', 'psi'):
            parsed[key] = _parse_terms(value, name)
        elif key in ('plain', 'inverse'):
            if not isinstance(value, bool):
                raise ConfigValidationError(f'{key} must be true or false', field=name)
            parsed[key] = value
        else:
            parsed[key] = value
    for key in ('p', 's', 'p1', 'p2', 'n_min', 'power'):
        if key in parsed and (not isinstance(parsed[key], int) or isinstance(parsed[key], bool) or parsed[key] < 0):
            raise ConfigValidationError(f'{key} must be a nonnegative integer', field=f'options.{key}')
    return parsed


def _parse_terms(terms, name):
    """Trigonometric terms {kind: cos|character, frequency: [ints], amplitude: exact}."""
    if not isinstance(terms, list):
        raise ConfigValidationError('expected a list of terms', field=name)
    parsed = []
    for term in terms:
        _reject_unknown(term, {'kind', 'frequency', 'amplitude'}, name)
        kind = term.get('kind', 'cos')
        if kind not in ('cos', 'character'):
            raise ConfigValidationError(f'unknown term kind {kind!r}', field=name)
        parsed.append({'kind': kind, 'frequency': _integer_lists(term.get('frequency'), name),
                       'amplitude': parse_exact(term.get('amplitude', 1), name)})
    return parsed


def _integer_lists(value, name):
    def convert(v):
        if isinstance(v, list):
            return [convert(x) for x in v]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigValidationError(f'{v!r} is not an integer', field=name)
        return v
    return convert(value)


def model_dimension(model):
    """Complex dimension k of the manifold a parsed model section describes."""
    parameters = model['parameters']
    if model['type'] == 'torus':
        return len(parameters['A'])
    if model['type'] == 'mazur':
        return parameters['k']
    return len(parameters['blocks']) - 1


def _check_degree_options(command, options, k):
    """Bidegree options must address a block of the model."""
    if command == 'jordan' and 'matrix' in options:
        return
    limits = {'p': (0, k), 's': (0, k)}
    if command == 'relative':
        s = options.get('s', 1)
        limits = {'s': (0, k - 1), 'p': (1, k - s), 'p1': (1, k - s - 1), 'p2': (1, k - s - 1)}
    for key, (lo, hi) in limits.items():
        if key in options and not lo <= options[key] <= hi:
            raise ConfigValidationError(f'{key}={options[key]} outside {lo}..{hi} for k={k}',
                                        field=f'options.{key}')
    if command == 'relative' and 'p1' in options and 'p2' in options and options['p1'] + options['p2'] > k - s:
        raise ConfigValidationError(f'p1 + p2 must not exceed {k - s}', field='options.p2')


def parse_config(text, defaults=None):
    """Decode, validate and resolve a run configuration."""
    raw = decode_config(text) if isinstance(text, str) else text
    _reject_unknown(raw, TOP_LEVEL_KEYS, 'config')
    for name, allowed in SECTION_KEYS.items():
        if name != 'model' and name in raw:
            _reject_unknown(raw[name], allowed, name)

    defaults = defaults or config_defaults()
    top = _validate(RunConfigForm(data={
        'command': raw.get('command'),
        'precision_bits': raw.get('precision_bits', defaults['precision_bits']),
        'n_max': raw.get('n_max', defaults['n_max']),
        'N_max': raw.get('N_max', defaults['N_max']),
    }), 'config')
    command = top['command']

    options = _parse_options(command, raw.get('options') or {})
    model = None
    if 'model' in raw:
        model = _parse_model(raw['model'])
        _check_degree_options(command, options, model_dimension(model))
    elif not (command == 'jordan' and 'matrix' in options) and command != 'iterate':
        raise ConfigValidationError(f'command {command} needs a model section', field='model')

    grid = _validate(GridForm(data=_merge(defaults['grid'], _plain_numbers(raw.get('grid', {})))), 'grid')
    output = _validate(OutputForm(data=_merge(defaults['output'], raw.get('output', {}))), 'output')
    tolerances = _validate(ToleranceForm(data=_merge(defaults['tolerances'],
                                                     _plain_numbers(raw.get('tolerances', {})))), 'tolerances')
    return RunConfig(command=command, model=model, precision_bits=top['precision_bits'], n_max=top['n_max'],
                     N_max=top['N_max'], grid=grid, output=output, tolerances=tolerances, options=options)
