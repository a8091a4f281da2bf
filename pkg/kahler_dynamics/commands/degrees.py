from flask import Blueprint

from kahler_dynamics.utils.decorators import config_command

bp = Blueprint('degrees', __name__, cli_group=None)


@bp.cli.command('degrees')
@config_command('degrees')
def degrees(run_config):
    """Dynamical degrees, multiplicities, log-concavity and entropy."""


@bp.cli.command('relative')
@config_command('relative')
def relative(run_config):
    """Relative dynamical degrees with respect to an eigenclass."""


@bp.cli.command('cesaro')
@config_command('cesaro')
def cesaro(run_config):
    """Cesaro limit of normalized pullbacks of a class."""


@bp.cli.command('chain')
@config_command('chain')
def chain(run_config):
    """Degree chain bounds for f and its inverse."""
