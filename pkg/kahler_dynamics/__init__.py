import logging.config

from flask import Flask
from flask_sqlalchemy import SQLAlchemy

from config import config

# Initialize extensions
db = SQLAlchemy()


def configure_logging(level):
    logging.config.dictConfig({
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'generic': {
                'format': '%(levelname)-5.5s [%(name)s] %(message)s'
            }
        },
        'handlers': {
            'console': {
                'class': 'logging.StreamHandler',
                'stream': 'ext://sys.stderr',
                'formatter': 'generic'
            }
        },
        'loggers': {
            'kahler_dynamics': {'level': level, 'handlers': ['console'], 'propagate': False},
            'sqlalchemy': {'level': 'WARNING', 'handlers': ['console'], 'propagate': False}
        },
        'root': {'level': 'WARNING', 'handlers': ['console']}
    })


def create_app(config_name='default'):
    app = Flask(__name__)

    # Load configuration
    app.config.from_object(config[config_name])
    configure_logging(app.config['LOG_LEVEL'])

    # Initialize extensions with app
    db.init_app(app)

    # Register command blueprints (import here to avoid circular imports)
    from kahler_dynamics.commands import spectral, degrees, green, mixing

    app.register_blueprint(spectral.bp)
    app.register_blueprint(degrees.bp)
    app.register_blueprint(green.bp)
    app.register_blueprint(mixing.bp)

    # Create run-log tables
    from kahler_dynamics.models import run  # noqa: F401
    with app.app_context():
        db.create_all()

    return app
