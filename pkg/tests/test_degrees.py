import math

import numpy as np
import pytest

from kahler_dynamics.dynamics import degrees, numeric
from kahler_dynamics.dynamics.cohomology_models import (mazur_action, mazur_involutions, raw_action, torus_action,
                                                         torus_automorphism)
from kahler_dynamics.errors import ConfigValidationError, CupMissing, ModelInconsistencyWarning, NotEigenclass
from kahler_dynamics.models.cohomology import ModelTag
from kahler_dynamics.models.degrees import RelativeDegreeProfile
from kahler_dynamics.models.matrix import ExactMatrix
from kahler_dynamics.utils.exact import parse_matrix

D1 = ((3 + math.sqrt(5)) / 2) ** 2


def test_cat_map_degrees(cat_action):
    profile = degrees.dynamical_degrees(cat_action, threads=2)
    d0, d1, d2 = (float(d) for d in profile.degrees)
    assert d0 == 1 and d2 == 1
    assert abs(d1 - D1) < 1e-12 * D1
    assert profile.multiplicities == [1, 1, 1]
    assert abs(float(profile.entropy) - 2 * math.log((3 + math.sqrt(5)) / 2)) < 1e-12
    assert profile.plateau == (1, 1)
    assert profile.model_tag is ModelTag.TORUS


def test_cat_map_is_log_concave(cat_action):
    report = degrees.check_concavity(degrees.dynamical_degrees(cat_action))
    assert report.concave
    assert all(margin >= 0 for margin in report.margins)
    assert report.severity is None


def test_raw_concavity_violation_warns():
    profile = degrees.profile_from_values([1, 2, 9])
    with pytest.warns(ModelInconsistencyWarning):
        report = degrees.check_concavity(profile)
    assert not report.concave
    assert report.violations == [1]
    assert report.severity == 'warning'


def test_model_concavity_violation_is_an_error():
    profile = degrees.profile_from_values([1, 2, 9], model_tag=ModelTag.TORUS)
    report = degrees.check_concavity(profile)
    assert report.severity == 'error'


def test_plateau_spans_equal_degrees():
    profile = degrees.profile_from_values([1, 3, 3, 3, 1])
    assert profile.plateau == (1, 3)


def test_degree_sequence_growth(cat_action):
    sequence = degrees.degree_sequence(cat_action, 1, range(1, 31))
    assert sequence.n_values == list(range(1, 31))
    assert abs(sequence.fitted_degree - D1) < 1e-2 * D1
    assert abs(float(sequence.roots[-1]) - D1) < 0.1 * D1
    assert all(0.1 < float(v) < 10 for v in sequence.normalized)


def test_degree_sequence_degree_out_of_range(cat_action):
    with pytest.raises(ConfigValidationError):
        degrees.degree_sequence(cat_action, 3, range(1, 5))


def test_entropy_symmetry(cat_action):
    forward, backward = degrees.entropy_symmetry(cat_action)
    assert abs(float(forward - backward)) < 1e-9


def test_duality_of_pushforward(cat_action):
    profile = degrees.dynamical_degrees(cat_action)
    radii = degrees.duality_check(cat_action, profile)
    for radius, degree in zip(radii, profile.degrees):
        assert abs(float(radius - degree)) < 1e-9


def test_mazur_sublattice_degrees():
    action = mazur_action(mazur_involutions(2), [1, 2, 3])
    profile = degrees.dynamical_degrees(action)
    assert profile.sublattice
    assert float(profile.degrees[1]) > 1
    assert float(profile.entropy) > 0


def test_relative_degrees_dominant_class(cat_action):
    profile = degrees.relative_degrees(cat_action, 'dominant', 1, None)
    assert profile.quotient_dimensions == [1]
    assert abs(float(profile.lambda_T) - D1) < 1e-9
    assert abs(float(profile.top_relation) - 1) < 1e-9
    assert profile.lower_bound_holds


def test_relative_degrees_need_eigenclass(cat_action):
    with pytest.raises(NotEigenclass):
        degrees.relative_degrees(cat_action, [1, 0, 0, 0], 1, 1)


def test_relative_degrees_need_cup():
    action = raw_action([[[1]], [[2, 0], [0, '1/2']], [[1]]])
    with pytest.raises(CupMissing):
        degrees.relative_degrees(action, [1, 0], 1, 2)


def test_relative_degree_sequence_roots(cat_action):
    profile = degrees.relative_degrees(cat_action, 'dominant', 1, None)
    ns, values, roots = degrees.relative_degree_sequence(cat_action, profile.T_class, 1, profile.lambda_T, 1,
                                                         range(1, 11))
    assert ns == list(range(1, 11))
    # f* is the identity on H^{2,2}, so lambda_{1,n}(T) decays like lambda_T^-n
    assert abs(float(roots[-1]) - 1 / D1) < 0.5 / D1


def test_submultiplicativity_flags_violation():
    profile = RelativeDegreeProfile(T_class=[], s=0, lambda_T=1, relative_degrees=[2.0, 5.0],
                                    relative_multiplicities=[1, 1], quotient_dimensions=[1, 1])
    report = degrees.submultiplicativity_check(profile, 1, 1)
    assert report.flagged
    assert report.margin == -1.0


def test_submultiplicativity_holds():
    profile = RelativeDegreeProfile(T_class=[], s=0, lambda_T=1, relative_degrees=[2.0, 3.0],
                                    relative_multiplicities=[1, 1], quotient_dimensions=[1, 1])
    assert degrees.submultiplicativity_check(profile, 1, 1).holds


def test_submultiplicativity_indices_are_checked():
    profile = RelativeDegreeProfile(T_class=[], s=0, lambda_T=1, relative_degrees=[2.0],
                                    relative_multiplicities=[1], quotient_dimensions=[1])
    with pytest.raises(ConfigValidationError):
        degrees.submultiplicativity_check(profile, 1, 1)


def test_cesaro_limit_matches_projector(cat_action):
    report = degrees.cesaro_class_limit(cat_action, cat_action.kahler_class[1], 1, N_max=100)
    assert report.rate['validated']
    assert float(report.kernel_deviation) < 1e-9
    assert float(report.eigen_residual) < 1e-9 * float(report.degree)
    assert float(report.deviations[-1]) < float(report.deviations[0])


def test_cesaro_limit_of_zero_class(cat_action):
    report = degrees.cesaro_class_limit(cat_action, [0, 0, 0, 0], 1, N_max=60)
    assert all(report.limit[i] == 0 for i in range(4))
    assert all(deviation == 0 for deviation in report.deviations)


def test_degree_chain_for_cat_map(cat_action):
    report = degrees.degree_chain_check(cat_action)
    assert report.applicable
    assert report.m == 1
    assert report.chain_holds
    assert abs(float(report.ratios[1]) - D1) < 1e-9 * D1


def test_degree_chain_not_applicable_for_equal_degrees():
    report = degrees.degree_chain_check(None, degrees.profile_from_values([1, 2, 2, 1]))
    assert not report.applicable
    assert report.reason.startswith('NotApplicable')


def test_relative_degrees_over_the_fundamental_class(cat_action):
    # cup with [X] is the identity, so lambda_p(X) = d_p and H^{2,2} stays one dimensional
    profile = degrees.relative_degrees(cat_action, [1], 0, 1)
    assert profile.quotient_dimensions == [4, 1]
    assert abs(float(profile.degree(1)) - D1) < 1e-9 * D1
    assert abs(float(profile.degree(2)) - 1) < 1e-9
    assert degrees.submultiplicativity_check(profile, 1, 1).holds


def _unimodular_tori(count=8, seed=3):
    rng = np.random.RandomState(seed)
    generators = [[[1, 1], [0, 1]], [[1, 0], [1, 1]], [[1, 'i'], [0, 1]], [[0, -1], [1, 0]]]
    tori = []
    while len(tori) < count:
        A = ExactMatrix.identity(2)
        for index in rng.randint(0, len(generators), size=int(rng.randint(3, 7))):
            A = A @ ExactMatrix.from_rows(parse_matrix(generators[index]))
        tori.append(torus_action(torus_automorphism(A)))
    return tori


def test_relative_degrees_on_random_tori():
    for action in _unimodular_tori():
        profile = degrees.relative_degrees(action, [1], 0, 1)
        assert profile.lower_bound_holds
        assert degrees.submultiplicativity_check(profile, 1, 1).holds
        d1 = degrees.dynamical_degrees(action).degrees[1]
        assert abs(profile.degree(1) - d1) < 1e-9 * d1


def test_degree_chain_in_dimension_three():
    # x^3 - 6x^2 + 3x + 1 has three real roots, so d_1 > d_2 > d_3 = 1
    action = torus_action(torus_automorphism(ExactMatrix.from_rows([[0, 0, -1], [1, 0, -3], [0, 1, 6]])))
    profile = degrees.dynamical_degrees(action)
    report = degrees.degree_chain_check(action, profile)
    assert report.applicable
    assert report.m == 1
    assert report.chain_holds
    d = [float(value) for value in profile.degrees]
    assert d[1] > d[2] > d[3] == pytest.approx(1)
    assert float(report.ratios[2]) == pytest.approx(d[1] / d[2])


def test_cesaro_limit_of_a_jordan_block():
    action = raw_action([[[1]], [[2, 1], [0, 2]], [[1]]], kahler_class=[[1], [1, 1], [1]])
    report = degrees.cesaro_class_limit(action, [1, 1], 1, N_max=200)
    assert report.multiplicity == 2
    assert abs(float(report.limit[0].real) - 0.5) < 1e-20
    assert abs(report.limit[1]) < 1e-20
    assert float(report.kernel_deviation) < 1e-9
    zero = degrees.cesaro_class_limit(action, [0, 0], 1, N_max=50)
    assert all(zero.limit[i] == 0 for i in range(2))


def test_cesaro_kernel_gap_with_rotating_dominant_part():
    action = raw_action([[[1]], [[0, -2], [2, 0]], [[1]]])
    report = degrees.cesaro_class_limit(action, [1, 0], 1, N_max=120)
    assert all(abs(report.limit[i]) < 1e-20 for i in range(2))
    assert float(report.kernel_deviation) < 1e-9


def test_kernel_gap_sees_directions_outside_the_kernel():
    ctx = numeric.context(128)
    F = ctx.matrix([[2, 1], [1, 1]])
    d = (3 + ctx.sqrt(5)) / 2
    # e_1 has a nonzero dominant component, so the Cesaro limit moves
    gap = degrees._kernel_gap(ctx, F, ctx.matrix([[1], [0]]), d, 1, 100)
    assert float(gap) > 0.5
    stable = ctx.matrix([[1], [1 - d]])
    assert float(degrees._kernel_gap(ctx, F, stable, d, 1, 100)) < 1e-9


def test_cesaro_without_kahler_class_needs_explicit_class():
    action = raw_action([[[1]], [[2, 0], [0, '1/2']], [[1]]])
    with pytest.raises(ConfigValidationError) as excinfo:
        degrees.cesaro_class_limit(action, action.kahler(1, 'options.S_class'), 1)
    assert excinfo.value.field == 'options.S_class'
    report = degrees.cesaro_class_limit(action, [1, 1], 1, N_max=50)
    assert abs(float(report.limit[0].real) - 1) < 1e-20


@pytest.mark.parametrize('s', [-1, 3])
def test_cesaro_bidegree_out_of_range(cat_action, s):
    with pytest.raises(ConfigValidationError) as excinfo:
        degrees.cesaro_class_limit(cat_action, [1], s)
    assert excinfo.value.field == 'options.s'


def test_relative_degree_sequence_checks_bidegrees(cat_action):
    with pytest.raises(ConfigValidationError):
        degrees.relative_degree_sequence(cat_action, [1, 0, 0, 1], 1, 1, 2, range(1, 3))
