from flask import Blueprint

from kahler_dynamics.utils.decorators import config_command

bp = Blueprint('green', __name__, cli_group=None)


@bp.cli.command('green')
@config_command('green')
def green(run_config):
    """Green class limit on torus models and the recurrence of the pullback sequence."""


@bp.cli.command('iterate')
@config_command('iterate')
def iterate(run_config):
    """Twisted Holder iteration on a grid and the exponent of its limit."""
