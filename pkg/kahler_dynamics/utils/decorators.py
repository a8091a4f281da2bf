from functools import wraps
import logging
import sys

import click

from kahler_dynamics import runner
from kahler_dynamics.errors import ConfigValidationError, DynamicsError
from kahler_dynamics.utils.forms import FORMATS, decode_config, parse_config
from kahler_dynamics.utils.serialize import write_json

logger = logging.getLogger(__name__)


def _apply_overrides(raw, command, output, fmt, precision):
    if not isinstance(raw, dict):
        raise ConfigValidationError('configuration must be an object', field='config')
    if raw.setdefault('command', command) != command:
        raise ConfigValidationError(f'configuration is for {raw["command"]!r}, not {command!r}', field='config.command')
    if output is not None or fmt is not None:
        section = dict(raw.get('output') or {})
        if output is not None:
            section['path'] = output
        if fmt is not None:
            section['format'] = fmt
        raw['output'] = section
    if precision is not None:
        raw['precision_bits'] = precision
    return raw


def _configured_path(raw):
    section = raw.get('output') if isinstance(raw, dict) else None
    path = section.get('path') if isinstance(section, dict) else None
    return path if isinstance(path, str) else None


def config_command(command):
    """Turn a function into a CLI command that loads, validates and runs one configuration.

    The wrapped function receives the resolved ``RunConfig`` and may adjust it
    before it is run. Exit status is 0 on success and 2 on any failure, with the
    error record written where the artifact would have gone.
    """
    def decorator(f):
        @click.option('--precision', type=int, default=None, help='Working precision in bits.')
        @click.option('--format', 'fmt', type=click.Choice(FORMATS), default=None, help='Artifact format.')
        @click.option('--output', type=click.Path(dir_okay=False), default=None, help='Artifact path.')
        @click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), required=True,
                      help='Run configuration (JSON).')
        @wraps(f)
        def decorated_function(config_path, output, fmt, precision):
            raw = None
            try:
                with open(config_path, encoding='utf-8') as handle:
                    raw = decode_config(handle.read())
                run_config = parse_config(_apply_overrides(raw, command, output, fmt, precision))
            except DynamicsError as e:
                logger.error('invalid configuration %s: %s', config_path, e.message)
                write_json(output or _configured_path(raw), e.to_record())
                sys.exit(runner.EXIT_FAILED)
            run_config = f(run_config) or run_config
            sys.exit(runner.run(run_config))
        return decorated_function
    return decorator
