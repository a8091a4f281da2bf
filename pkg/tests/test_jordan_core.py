import math

import numpy as np
import pytest
import sympy

from kahler_dynamics.dynamics import jordan_core, numeric
from kahler_dynamics.errors import ConeNotPreserved, NotInvertible, Overflow, ThetaNotResolved
from kahler_dynamics.models.matrix import ExactMatrix
from kahler_dynamics.models.spectral import ThetaKind

GOLDEN_SQUARED = (3 + math.sqrt(5)) / 2


def test_char_poly_of_jordan_block(jordan_block):
    poly = jordan_core.char_poly(jordan_block)
    assert poly.coefficients == [1, -4, 4]
    assert poly.factors == [([1, -2], 2)]


def test_char_poly_over_gaussian_rationals():
    poly = jordan_core.char_poly(ExactMatrix.from_rows([[sympy.I, 0], [0, -sympy.I]]))
    assert poly.gaussian
    assert sorted(str(f[0][1]) for f in poly.factors) == ['-I', 'I']


def test_eigen_structure_jordan_block(jordan_block):
    J = jordan_core.eigen_structure(jordan_block)
    assert abs(J.spectral_radius - 2) < 1e-30
    assert J.multiplicity == 2
    assert J.nu == 1
    assert J.theta_group.is_trivial
    assert [b.size for b in J.blocks] == [2]


def test_eigen_structure_rotation_has_finite_theta():
    J = jordan_core.eigen_structure(ExactMatrix.from_rows([[0, -2], [2, 0]]))
    assert abs(J.spectral_radius - 2) < 1e-30
    assert J.theta_group.kind is ThetaKind.FINITE_CYCLIC
    assert J.theta_group.order == 4
    assert str(J.theta_group) == 'FiniteCyclic(4)'


def test_eigen_structure_ties_of_distinct_factors():
    # 2 and -2 share the modulus but come from different factors
    J = jordan_core.eigen_structure(ExactMatrix.from_rows([[2, 0], [0, -2]]))
    assert J.nu == 2
    assert J.theta_group.order == 2


def test_eigen_structure_rejects_singular():
    with pytest.raises(NotInvertible):
        jordan_core.eigen_structure(ExactMatrix.from_rows([[1, 2], [2, 4]]))


def test_cat_map_spectral_radius():
    J = jordan_core.eigen_structure(ExactMatrix.from_rows([[2, 1], [1, 1]]))
    assert abs(float(J.spectral_radius) - GOLDEN_SQUARED) < 1e-12
    assert J.multiplicity == 1


def test_power_asymptotics_bounded(jordan_block):
    J = jordan_core.eigen_structure(jordan_block)
    report = jordan_core.power_asymptotics(jordan_block, J, range(20, 201))
    # ||M^n|| / (n 2^n) = 1/2 + 1/n
    assert all(0.4 < float(v) < 0.6 for v in report.normalized_norms)
    assert 0 < report.bounds[0] < report.bounds[1]
    assert report.rate_kind == 'algebraic'


def test_power_asymptotics_digit_budget(jordan_block):
    J = jordan_core.eigen_structure(jordan_block)
    with pytest.raises(Overflow):
        jordan_core.power_asymptotics(jordan_block, J, [200], digit_budget=20)


def test_lambda_infinity_jordan_block(jordan_block):
    J = jordan_core.eigen_structure(jordan_block)
    operators = jordan_core.lambda_infinity(jordan_block, J, n_max=200)
    limit = operators.limit
    assert abs(limit[0, 1] - 0.5) < 1e-30
    assert abs(limit[0, 0]) < 1e-30 and abs(limit[1, 1]) < 1e-30
    assert operators.rate['validated']
    assert operators.averaged_rate['validated']
    assert operators.averaged_rank == operators.strict_dimension == 1


def test_lambda_infinity_residue_limits():
    M = ExactMatrix.from_rows([[0, -2], [2, 0]])
    J = jordan_core.eigen_structure(M)
    operators = jordan_core.lambda_infinity(M, J, n_max=60, plain=True)
    assert sorted(operators.residue_limits) == [0, 1, 2, 3]
    assert operators.strict_dimension == 0
    assert operators.averaged_rank == 0


def test_residue_limits_need_finite_theta():
    M = ExactMatrix.from_rows([[0, 0, 1], [1, 0, -1], [0, 1, 0]])
    J = jordan_core.eigen_structure(M)
    assert J.theta_group.kind is ThetaKind.POSITIVE_DIMENSIONAL
    with pytest.raises(ThetaNotResolved):
        jordan_core.lambda_infinity(M, J, n_max=60, plain=True)


def test_perron_frobenius_positive_matrix():
    M = ExactMatrix.from_rows([[2, 1], [1, 1]])
    report = jordan_core.perron_frobenius_check(M, [[1, 0], [0, 1]])
    assert report.cone_preserved
    assert report.nonnegative
    assert not report.falsified
    assert abs(float(report.eigenvalue) - GOLDEN_SQUARED) < 1e-12
    assert float(report.residual) < 1e-20


def test_perron_frobenius_rejects_escaping_generator():
    M = ExactMatrix.from_rows([[0, -1], [1, 0]])
    with pytest.raises(ConeNotPreserved):
        jordan_core.perron_frobenius_check(M, [[1, 0], [0, 1]])


def test_spectral_projectors_sum_to_identity():
    M = ExactMatrix.from_rows([[2, 1], [1, 1]])
    J = jordan_core.eigen_structure(M)
    projectors = jordan_core.spectral_projectors(M, J, dominant_only=False)
    total = projectors[0].projector + projectors[1].projector
    assert abs(total[0, 0] - 1) < 1e-30
    assert abs(total[0, 1]) < 1e-30


def test_identity_and_zeros_mix_with_listed_matrices():
    M = ExactMatrix.from_rows([[2, 1], [1, 1]])
    assert ExactMatrix.identity(2) @ M == M
    assert ExactMatrix.zeros(2, 2) + M == M
    J = jordan_core.eigen_structure(ExactMatrix.from_rows([[2]]))
    assert abs(J.spectral_radius - 2) < 1e-30


def _random_corpus(count=10, seed=7):
    rng = np.random.RandomState(seed)
    corpus = []
    while len(corpus) < count:
        dim = int(rng.randint(2, 6))
        M = ExactMatrix.from_rows(rng.randint(-3, 4, size=(dim, dim)).tolist())
        if M.det() == 0:
            continue
        J = jordan_core.eigen_structure(M)
        if J.spectral_radius > 1:
            corpus.append((M, J))
    return corpus


# P J P^-1 with J = J_{2,2} + (3), P unimodular
CONJUGATED_JORDAN = [[2, 1, 1], [0, 2, 1], [0, 0, 3]]


def test_random_matrices_have_bounded_normalized_powers():
    for M, J in _random_corpus():
        report = jordan_core.power_asymptotics(M, J, range(20, 201))
        norms = [float(v) for v in report.normalized_norms]
        assert min(norms) > 0
        assert max(norms) < 1e4 * min(norms)


@pytest.mark.parametrize('rows', [[[2, 1], [0, 2]], CONJUGATED_JORDAN, [[0, -2], [2, 0]], [[2, 0, 0], [0, 2, 0], [0, 0, 1]]])
def test_block_sizes_match_numeric_rank(rows):
    M = ExactMatrix.from_rows(rows)
    _check_against_numeric_rank(M)


def test_random_block_sizes_match_numeric_rank():
    for M, _ in _random_corpus():
        _check_against_numeric_rank(M)


def _check_against_numeric_rank(M):
    J = jordan_core.eigen_structure(M, precision=256)
    ctx = J.ctx
    M_num = M.to_numeric(ctx)
    for block in J.blocks:
        factor = J.factors[block.factor_index]
        shifted = M_num - block.eigenvalue * ctx.eye(M.dim)
        power = shifted
        for j in range(1, len(factor.nullity_chain)):
            nullity = M.dim - numeric.numeric_rank(ctx, power, numeric.tiny(ctx, 0.25))
            assert nullity == factor.nullity_chain[j]
            power = power * shifted


@pytest.mark.parametrize('rows, dimension', [
    ([[2, 1], [0, 2]], 1),
    ([[2, 1], [1, 1]], 1),
    ([[0, -2], [2, 0]], 0),
    ([[2, 0], [0, 2]], 2),
    ([[3, 0, 0], [0, -3, 0], [0, 0, 1]], 1),
])
def test_averaged_limit_rank_is_strict_dimension(rows, dimension):
    M = ExactMatrix.from_rows(rows)
    operators = jordan_core.lambda_infinity(M, jordan_core.eigen_structure(M), n_max=60)
    assert operators.strict_dimension == dimension
    assert operators.averaged_rank == dimension


def _normalized_power(M, J, n):
    ctx = J.ctx
    return (M.to_numeric(ctx) / J.spectral_radius) ** n


def test_trivial_theta_limit_is_the_same_along_even_and_odd_n():
    M = ExactMatrix.from_rows([[2, 1], [1, 1]])
    J = jordan_core.eigen_structure(M)
    operators = jordan_core.lambda_infinity(M, J, n_max=60, plain=True)
    assert list(operators.residue_limits) == [0]
    for n in (120, 121):
        assert numeric.max_norm(J.ctx, _normalized_power(M, J, n) - operators.limit) < 1e-9


def test_order_two_theta_has_distinct_parity_limits():
    M = ExactMatrix.from_rows([[2, 0], [0, -2]])
    J = jordan_core.eigen_structure(M)
    operators = jordan_core.lambda_infinity(M, J, n_max=60, plain=True)
    even, odd = operators.residue_limits[0], operators.residue_limits[1]
    assert numeric.max_norm(J.ctx, _normalized_power(M, J, 10) - even) < 1e-20
    assert numeric.max_norm(J.ctx, _normalized_power(M, J, 11) - odd) < 1e-20
    assert numeric.max_norm(J.ctx, even - odd) > 1
