import math

import numpy as np
import pytest

from kahler_dynamics.dynamics import green_iteration
from kahler_dynamics.dynamics.cohomology_models import torus_automorphism
from kahler_dynamics.errors import (ConfigValidationError, DegenerateFunction, DegenerateFunctionWarning,
                                    HypothesisViolated, NoExpansion)
from kahler_dynamics.models.matrix import ExactMatrix
from kahler_dynamics.models.spectral import ThetaKind

COSINE = [[{'frequency': [1], 'amplitude': 1}]]
WEIERSTRASS_EXPONENT = math.log(2) / math.log(3)


@pytest.fixture(scope='module')
def weierstrass():
    setup = green_iteration.iteration_setup([[3]], ExactMatrix.from_rows([[2]]), COSINE, 0.5, 2 ** 14)
    result = green_iteration.holder_iteration(setup, n_max=60, N_max=200)
    return setup, result


def test_grid_indices():
    indices = green_iteration.grid_indices(4, 2)
    assert indices.shape == (16, 2)
    assert indices[5].tolist() == [1, 1]


def test_holder_power():
    assert green_iteration.holder_power(0.5, 2, [[3]]) == 1
    # log 2 / log 3 < 0.7 for every power of (x -> 3x, 2)
    assert green_iteration.holder_power(0.7, 2, [[3]]) is None


def test_setup_rejects_bad_exponent():
    with pytest.raises(ConfigValidationError):
        green_iteration.iteration_setup([[3]], ExactMatrix.from_rows([[2]]), COSINE, 0, 64)


def test_setup_needs_expanding_lambda():
    with pytest.raises(HypothesisViolated):
        green_iteration.iteration_setup([[3]], ExactMatrix.from_rows([[1]]), COSINE, 0.5, 64)


def test_setup_needs_expanding_map():
    with pytest.raises(HypothesisViolated):
        green_iteration.iteration_setup([[1]], ExactMatrix.from_rows([[2]]), COSINE, 0.5, 64)


def test_setup_replaces_by_power():
    setup = green_iteration.iteration_setup([[2]], ExactMatrix.from_rows([[3]]), COSINE, 0.9, 64, power=2)
    assert setup.power == 2
    assert setup.G.tolist() == [[4]]
    assert abs(setup.spectral_radius - 9) < 1e-12


def test_setup_checks_u_shape():
    with pytest.raises(ConfigValidationError):
        green_iteration.iteration_setup([[3]], ExactMatrix.from_rows([[2, 0], [0, 2]]), COSINE, 0.5, 64)


def test_weierstrass_rates(weierstrass):
    setup, result = weierstrass
    assert result.rate['validated']
    assert result.cesaro_rate['validated']
    assert abs(result.cesaro_rate['log_log_slope'] + 1.0) < 0.15
    assert result.twist_consistent


def test_weierstrass_limit_matches_series(weierstrass):
    setup, result = weierstrass
    assert result.twisted_deviations[-1] < 1e-9
    assert np.abs(result.v_last - result.v).max() < 1e-9


def test_weierstrass_holder_exponent(weierstrass):
    setup, result = weierstrass
    v = green_iteration.grid_function(setup, result.v)
    assert v.shape == (2 ** 14,)
    estimate = green_iteration.holder_exponent_estimate(v, nu=setup.nu, lam=setup.spectral_radius,
                                                        lipschitz=setup.lipschitz)
    assert abs(estimate.exponent - WEIERSTRASS_EXPONENT) < 0.05
    assert estimate.admissible_bound == pytest.approx(0.5)


def test_default_scales():
    assert green_iteration.default_scales(2 ** 14) == list(range(4, 13))
    assert green_iteration.default_scales(64) == [2, 3, 4]


def test_holder_exponent_of_smooth_function():
    x = np.arange(1024) / 1024
    estimate = green_iteration.holder_exponent_estimate(np.cos(2 * np.pi * x))
    assert estimate.exponent > 0.95
    assert not estimate.degenerate


def test_holder_exponent_of_constant():
    with pytest.warns(DegenerateFunctionWarning):
        estimate = green_iteration.holder_exponent_estimate(np.ones(256))
    assert estimate.degenerate
    assert estimate.exponent == 1.0
    with pytest.raises(DegenerateFunction):
        green_iteration.holder_exponent_estimate(np.ones(256), strict=True)


def test_holder_exponent_needs_power_of_two():
    with pytest.raises(ConfigValidationError):
        green_iteration.holder_exponent_estimate(np.zeros(100))


def test_holder_exponent_needs_scales():
    with pytest.raises(HypothesisViolated):
        green_iteration.holder_exponent_estimate(np.arange(64.0), scales=[2, 3])


def test_green_plain_limit(cat_map):
    limit = green_iteration.green_limit_torus(cat_map, N_max=60)
    assert limit.mode == 'PlainLimit'
    assert limit.theta_group.is_trivial
    assert float(limit.eigen_residual) < 1e-9
    assert limit.positive
    assert limit.samples == []


def test_green_cesaro_only():
    T = torus_automorphism(ExactMatrix.from_rows([[0, 0, 1], [1, 0, -1], [0, 1, 0]]))
    limit = green_iteration.green_limit_torus(T, N_max=60, targets=4)
    assert limit.mode == 'CesaroOnly'
    assert limit.theta_group.kind is ThetaKind.POSITIVE_DIMENSIONAL
    assert float(limit.eigen_residual) < 1e-9
    assert limit.positive
    assert len(limit.samples) == 4
    assert limit.separation >= 1e-3


def test_green_needs_expansion():
    T = torus_automorphism(ExactMatrix.from_rows([[1, 1], [0, 1]]))
    with pytest.raises(NoExpansion):
        green_iteration.green_limit_torus(T, N_max=60)


def test_recurrence_for_cat_map(cat_action):
    relation = green_iteration.recurrence_machinery(cat_action)
    # (A^2)^2 = 7 A^2 - 1
    assert relation.m == 2
    assert relation.coefficients == [-1, 7]
    assert relation.matches_degree
    assert relation.charpoly_matches is None
