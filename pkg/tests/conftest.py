import json

import pytest

from kahler_dynamics import create_app, db
from kahler_dynamics.dynamics.cohomology_models import torus_action, torus_automorphism
from kahler_dynamics.models.matrix import ExactMatrix

CAT_MAP = [[2, 1], [1, 1]]
# companion of x^3 + x - 1: a complex pair of modulus > 1 with an irrational angle
CESARO_ONLY = [[0, 0, 1], [1, 0, -1], [0, 1, 0]]


@pytest.fixture
def app():
    app = create_app('testing')
    with app.app_context():
        yield app
        db.session.remove()
        db.drop_all()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def cat_map():
    return torus_automorphism(ExactMatrix.from_rows(CAT_MAP))


@pytest.fixture
def cat_action(cat_map):
    return torus_action(cat_map)


@pytest.fixture
def jordan_block():
    return ExactMatrix.from_rows([[2, 1], [0, 2]])


@pytest.fixture
def write_config(tmp_path):
    def write(payload, name='run.json'):
        path = tmp_path / name
        path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
        return str(path)
    return write
