"""Artifact emission: deterministic JSON with decimal strings, and plot-ready CSV tables."""
import dataclasses
from enum import Enum
from fractions import Fraction
import json
import math

import click
import numpy as np
import pandas as pd
import sympy

from kahler_dynamics.dynamics.numeric import decimal_digits
from kahler_dynamics.models.matrix import ExactMatrix
from kahler_dynamics.utils.exact import format_exact


def _is_mp(value):
    return hasattr(value, '_mpf_') or hasattr(value, '_mpc_')


def _mp_text(value, digits):
    return value.context.nstr(value, digits)


def _number(value, digits):
    if hasattr(value, '_mpc_'):
        ctx = value.context
        return {'re': _mp_text(ctx.re(value), digits), 'im': _mp_text(ctx.im(value), digits)}
    return _mp_text(value, digits)


def _float(value):
    if math.isfinite(value):
        return value
    return str(value)


def to_jsonable(value, digits):
    """Recursively convert results into JSON-ready values; high-precision numbers become strings."""
    if value is None or isinstance(value, (bool, str, int)) and not isinstance(value, Enum):
        return value
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        return _float(value)
    if _is_mp(value):
        return _number(value, digits)
    if hasattr(value, 'to_dict'):
        return to_jsonable(value.to_dict(), digits)
    if isinstance(value, ExactMatrix):
        return [[format_exact(e) for e in row] for row in value.rows()]
    if hasattr(value, 'rows') and hasattr(value, 'cols') and hasattr(value, 'tolist'):
        rows = [[_number(value[i, j], digits) for j in range(value.cols)] for i in range(value.rows)]
        return [row[0] for row in rows] if value.cols == 1 else rows
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return {'re': to_jsonable(value.real, digits), 'im': to_jsonable(value.imag, digits)}
        return [to_jsonable(v, digits) for v in value.tolist()] if value.ndim else to_jsonable(value.item(), digits)
    if isinstance(value, np.generic):
        return to_jsonable(value.item(), digits)
    if isinstance(value, complex):
        return {'re': _float(value.real), 'im': _float(value.imag)}
    if isinstance(value, sympy.Basic):
        return format_exact(value) if value.is_number else str(value)
    if isinstance(value, Fraction):
        return f'{value.numerator}/{value.denominator}'
    if dataclasses.is_dataclass(value):
        return {f.name: to_jsonable(getattr(value, f.name), digits)
                for f in dataclasses.fields(value) if f.repr}
    if isinstance(value, dict):
        return {str(k) if not isinstance(k, tuple) else ','.join(map(str, k)): to_jsonable(v, digits)
                for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v, digits) for v in value]
    return str(value)


def numeric_format(precision_bits):
    return {'precision_bits': precision_bits, 'decimal_digits': decimal_digits(precision_bits)}


def render_json(payload):
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + '\n'


def write_json(path, payload):
    text = render_json(payload)
    if path:
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
    else:
        click.echo(text, nl=False)


def write_csv(path, rows, digits):
    """One row per record; nested values are flattened to JSON text."""
    records = []
    for row in rows:
        record = {}
        for key, value in row.items():
            converted = to_jsonable(value, digits)
            record[key] = json.dumps(converted, sort_keys=True) if isinstance(converted, (list, dict)) else converted
        records.append(record)
    frame = pd.DataFrame.from_records(records)
    if path:
        frame.to_csv(path, index=False)
    else:
        click.echo(frame.to_csv(index=False), nl=False)
