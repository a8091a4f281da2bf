import os

basedir = os.path.abspath(os.path.dirname(__file__))


def _env_int(name, default):
    value = os.environ.get(name)
    return int(value) if value else default


def _env_float(name, default):
    value = os.environ.get(name)
    return float(value) if value else default


class Config:
    # Numerics
    PRECISION_BITS = _env_int('KAHLER_DYN_PRECISION', 128)
    DIGIT_BUDGET = _env_int('KAHLER_DYN_DIGIT_BUDGET', 20000)
    TIE_THRESHOLD_BITS = 64

    # Tolerances (relative unless noted)
    EIGEN_TOLERANCE = _env_float('KAHLER_DYN_EIGEN_TOLERANCE', 1e-9)
    PLATEAU_TOLERANCE = 1e-9
    CONE_TOLERANCE = 1e-12
    RATE_SLACK = 1.25

    # Sequences
    N_MAX = 200
    CESARO_N_MAX = 200
    FIT_WINDOW = (20, 50)

    # Grids
    GRID_POINTS_1D = 2 ** 14
    GRID_POINTS_2D = 2 ** 7
    MIXING_GRID_AXIS = 2 ** 10
    MIXING_POINT_BUDGET = 2 ** 22

    # Subsequence sampling and coincidence search
    SAMPLE_TARGETS = 8
    SAMPLE_ANGLE_TOLERANCE = 1e-3
    SAMPLE_SEARCH_LIMIT = 200000
    ESCAPE_WINDOW = 8

    # Worker pool for per-degree computations
    THREADS = _env_int('KAHLER_DYN_THREADS', os.cpu_count() or 1)

    # Run log
    SQLALCHEMY_DATABASE_URI = os.environ.get('KAHLER_DYN_RUNLOG') or \
        'sqlite:///' + os.path.join(basedir, 'runs.db')
    SQLALCHEMY_TRACK_MODIFICATIONS = False
    SQLALCHEMY_ECHO = False

    LOG_LEVEL = os.environ.get('KAHLER_DYN_LOG_LEVEL') or 'INFO'


class DevelopmentConfig(Config):
    DEBUG = True
    LOG_LEVEL = os.environ.get('KAHLER_DYN_LOG_LEVEL') or 'DEBUG'


class TestingConfig(Config):
    TESTING = True
    SQLALCHEMY_DATABASE_URI = 'sqlite://'
    THREADS = 2
    LOG_LEVEL = 'WARNING'


class ProductionConfig(Config):
    DEBUG = False


config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': ProductionConfig
}
