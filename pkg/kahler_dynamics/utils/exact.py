"""Exact scalars from configuration text.

Accepted: integers, decimal strings ("1.5"), fraction strings ("3/2"),
Gaussian strings ("1+2i", "-i", "0.1+0.2i") and JSON decimals decoded as
``Decimal``. Floats never reach an exact field.
"""
from decimal import Decimal
import re

import sympy

from kahler_dynamics.errors import ConfigValidationError
from kahler_dynamics.models.matrix import ExactMatrix

_NUMBER = r'(?:\d+/\d+|\d+(?:\.\d+)?|\.\d+)'
_REAL = re.compile(rf'^([+-]?{_NUMBER})$')
_IMAGINARY = re.compile(rf'^([+-]?)({_NUMBER})?i$')
_COMPLEX = re.compile(rf'^([+-]?{_NUMBER})([+-])({_NUMBER})?i$')


def _rational(text, field):
    if '/' in text:
        numerator, denominator = text.split('/')
        if int(denominator) == 0:
            raise ConfigValidationError(f'zero denominator in {text!r}', field=field)
    return sympy.Rational(text)


def parse_exact(value, field=None):
    """Exact sympy rational or Gaussian rational for a configuration entry."""
    if isinstance(value, bool):
        raise ConfigValidationError(f'boolean {value!r} is not a number', field=field)
    if isinstance(value, int):
        return sympy.Integer(value)
    if isinstance(value, Decimal):
        return sympy.Rational(str(value))
    if isinstance(value, float):
        raise ConfigValidationError(f'float {value!r} cannot enter an exact field; quote it as a string', field=field)
    if not isinstance(value, str):
        raise ConfigValidationError(f'{value!r} is not an exact number', field=field)

    text = value.replace(' ', '')
    match = _REAL.match(text)
    if match:
        return _rational(match.group(1), field)
    match = _IMAGINARY.match(text)
    if match:
        sign, magnitude = match.groups()
        imaginary = _rational(magnitude, field) if magnitude else sympy.Integer(1)
        return (-imaginary if sign == '-' else imaginary) * sympy.I
    match = _COMPLEX.match(text)
    if match:
        real, sign, magnitude = match.groups()
        imaginary = _rational(magnitude, field) if magnitude else sympy.Integer(1)
        return _rational(real, field) + (-imaginary if sign == '-' else imaginary) * sympy.I
    raise ConfigValidationError(f'{value!r} is not an exact number', field=field)


def parse_vector(values, field=None):
    if not isinstance(values, list) or not values:
        raise ConfigValidationError('expected a nonempty list of exact numbers', field=field)
    return [parse_exact(v, field) for v in values]


def parse_matrix(rows, field=None):
    """Rows of exact entries; every row must have the same length."""
    if not isinstance(rows, list) or not rows or not all(isinstance(row, list) for row in rows):
        raise ConfigValidationError('expected a nonempty list of rows', field=field)
    if len({len(row) for row in rows}) != 1:
        raise ConfigValidationError('rows have different lengths', field=field)
    return [[parse_exact(v, field) for v in row] for row in rows]


def to_matrix(rows):
    return ExactMatrix.from_rows(rows)


def format_exact(value):
    """String that parse_exact maps back to ``value``."""
    value = sympy.sympify(value)
    real, imaginary = value.as_real_imag()
    if imaginary == 0:
        return str(real)
    sign = '-' if imaginary < 0 else '+'
    magnitude = str(abs(imaginary))
    if real == 0:
        return f'{"-" if sign == "-" else ""}{magnitude}i'
    return f'{real}{sign}{magnitude}i'


def format_nested(value):
    """format_exact applied through lists and dicts."""
    if isinstance(value, list):
        return [format_nested(v) for v in value]
    if isinstance(value, dict):
        return {k: format_nested(v) for k, v in value.items()}
    if isinstance(value, sympy.Basic):
        return format_exact(value)
    return value
