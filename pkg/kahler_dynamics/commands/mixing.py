from flask import Blueprint

from kahler_dynamics.utils.decorators import config_command

bp = Blueprint('mixing', __name__, cli_group=None)


@bp.cli.command('mixing')
@config_command('mixing')
def mixing(run_config):
    """Character and grid correlations of the Haar measure on a torus."""
