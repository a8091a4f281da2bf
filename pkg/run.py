import os

from flask.cli import FlaskGroup

from kahler_dynamics import create_app

cli = FlaskGroup(create_app=lambda: create_app(os.getenv('KAHLER_DYN_ENV') or 'default'),
                 add_default_commands=False, load_dotenv=True,
                 help='Dynamics of automorphisms of compact Kahler manifolds, on cohomology.')

if __name__ == '__main__':
    cli()
