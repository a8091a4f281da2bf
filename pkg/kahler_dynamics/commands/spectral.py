from flask import Blueprint

from kahler_dynamics.utils.decorators import config_command

bp = Blueprint('spectral', __name__, cli_group=None)


@bp.cli.command('jordan')
@config_command('jordan')
def jordan(run_config):
    """Jordan data, limit operators and power asymptotics of one exact matrix."""
