"""Spectral analysis of a single invertible linear map.

Characteristic polynomials, their factorizations and Jordan block sizes are
exact. Eigenvalue moduli and angles are evaluated at a configurable binary
precision, and equalities of moduli that floating point cannot separate are
settled with resultants.
"""
from fractions import Fraction
from functools import lru_cache
import logging
import math

import numpy as np
from scipy import optimize
import sympy
from sympy import Poly, Rational, Symbol

from kahler_dynamics.dynamics import numeric
from kahler_dynamics.errors import (ConeNotPreserved, DimensionMismatch, NotInvertible, Overflow,
                                    ThetaNotResolved)
from kahler_dynamics.models.matrix import ExactMatrix, exact_scalar, to_mp
from kahler_dynamics.models.spectral import (AsymptoticReport, CharPoly, IrreducibleFactor, JordanBlock,
                                             JordanData, LimitOperators, PerronFrobeniusReport,
                                             SpectralProjector, ThetaGroup, ThetaKind)

logger = logging.getLogger(__name__)

_x = Symbol('x')
_y = Symbol('y')


# Characteristic polynomial

def char_poly(M):
    """Exact characteristic polynomial of ``M``, factored into monic irreducibles.

    Rational matrices factor over QQ, Gaussian matrices over QQ(i).
    """
    coefficients = M.charpoly_coefficients()
    degree = len(coefficients) - 1
    expr = sum(c * _x ** (degree - i) for i, c in enumerate(coefficients))
    if M.is_gaussian:
        content, pairs = sympy.factor_list(expr, _x, extension=sympy.I)
    else:
        content, pairs = sympy.factor_list(expr, _x)
    factors = []
    for factor, multiplicity in pairs:
        poly_coeffs = Poly(factor, _x).all_coeffs()
        leading = poly_coeffs[0]
        factors.append(([exact_scalar(sympy.expand(c / leading)) for c in poly_coeffs], multiplicity))
    return CharPoly(coefficients=coefficients, content=content, factors=factors, gaussian=M.is_gaussian)


def _evaluate_polynomial(coefficients, M):
    identity = ExactMatrix.identity(M.dim, M.domain)
    result = ExactMatrix.zeros(M.dim, M.dim, M.domain)
    for c in coefficients:
        result = result @ M + identity.scale(c)
    return result


def _nullity_chain(M, coefficients, multiplicity):
    """Per-root nullities [0, n_1, n_2, ...] of q(M)^j until the generalized eigenspace is exhausted."""
    n = M.dim
    degree = len(coefficients) - 1
    base = _evaluate_polynomial(coefficients, M)
    power = base
    chain = [0]
    while True:
        nullity = n - power.rank()
        if nullity % degree:
            raise ArithmeticError(f'nullity {nullity} not divisible by factor degree {degree}')
        per_root = nullity // degree
        if per_root == chain[-1]:
            break
        chain.append(per_root)
        if per_root == multiplicity:
            break
        power = power @ base
    return chain


def _blocks_from_nullity_chain(chain):
    """Jordan block sizes, largest first: there are 2*d_j - d_(j-1) - d_(j+1) blocks of size j."""
    counts = [2 * chain[j] - chain[j - 1] - chain[j + 1] for j in range(1, len(chain) - 1)]
    counts.append(chain[-1] - chain[-2])
    sizes = []
    for size in range(len(counts), 0, -1):
        sizes.extend([size] * counts[size - 1])
    return sizes


def _real_root_count(coefficients):
    if any(sympy.im(c) != 0 for c in coefficients):
        return 0
    return Poly(coefficients, _x, domain='QQ').count_roots()


def _factor_roots(ctx, coefficients, real_count):
    coeffs = [to_mp(ctx, c) for c in coefficients]
    if len(coeffs) == 2:
        roots = [-coeffs[1] / coeffs[0]]
    else:
        roots = ctx.polyroots(coeffs, maxsteps=400, extraprec=2 * ctx.prec)
    roots = [ctx.mpc(r) for r in roots]
    if real_count:
        nearest = sorted(range(len(roots)), key=lambda i: abs(ctx.im(roots[i])))
        for i in nearest[:real_count]:
            roots[i] = ctx.mpc(ctx.re(roots[i]), 0)
    two_pi = 2 * ctx.pi
    roots.sort(key=lambda z: (-float(abs(z)), float(ctx.arg(z) % two_pi)))
    return roots


# Exact modulus and angle decisions

def _expr(coefficients, var):
    degree = len(coefficients) - 1
    return sum(c * var ** (degree - i) for i, c in enumerate(coefficients))


def _rational_poly(expr, var):
    coeffs = [exact_scalar(c) for c in Poly(sympy.expand(expr), var).all_coeffs()]
    if any(sympy.im(c) != 0 for c in coeffs):
        conjugate = sum(sympy.conjugate(c) * var ** (len(coeffs) - 1 - i) for i, c in enumerate(coeffs))
        return _rational_poly(sympy.expand(expr * conjugate), var)
    return Poly([sympy.re(c) for c in coeffs], var, domain='QQ')


@lru_cache(maxsize=256)
def _modulus_polynomial(coefficients):
    """Rational polynomial whose roots include every alpha_i * conj(alpha_j)."""
    degree = len(coefficients) - 1
    q = _expr(coefficients, _x)
    reversed_conjugate = sum(sympy.conjugate(c) * _y ** (degree - i) * _x ** i
                             for i, c in enumerate(coefficients))
    return _rational_poly(sympy.resultant(q, reversed_conjugate, _x), _y)


@lru_cache(maxsize=256)
def _ratio_polynomial(coefficients):
    """Rational polynomial whose roots include every alpha_i / conj(alpha_j)."""
    conjugate = _expr([sympy.conjugate(c) for c in coefficients], _x)
    scaled = _expr(coefficients, _x * _y)
    return _rational_poly(sympy.resultant(conjugate, sympy.expand(scaled), _x), _y)


def _evaluate_mp(ctx, poly, value):
    result = ctx.zero
    for c in poly.all_coeffs():
        result = result * value + to_mp(ctx, c)
    return result


def _same_modulus(ctx, factors, block_a, block_b):
    """Exact test |alpha|^2 == |beta|^2 via isolation of the squared-modulus polynomials."""
    fa, fb = factors[block_a.factor_index], factors[block_b.factor_index]
    if block_a.factor_index == block_b.factor_index:
        if block_a.root_index == block_b.root_index:
            return True
        real_factor = all(sympy.im(c) == 0 for c in fa.coefficients)
        if real_factor and abs(block_a.eigenvalue - ctx.conj(block_b.eigenvalue)) <= numeric.tiny(ctx):
            return True
    product = (_modulus_polynomial(tuple(fa.coefficients)) *
               _modulus_polynomial(tuple(fb.coefficients))).sqf_part()
    eps = Rational(1, 2 ** (ctx.prec // 2))
    intervals = [(to_mp(ctx, a), to_mp(ctx, b)) for (a, b), _ in product.intervals(eps=eps)]

    def locate(value):
        def distance(interval):
            lo, hi = interval
            if lo <= value <= hi:
                return ctx.zero
            return min(abs(value - lo), abs(value - hi))
        return min(range(len(intervals)), key=lambda i: distance(intervals[i]))

    same = locate(block_a.modulus ** 2) == locate(block_b.modulus ** 2)
    logger.debug('exact modulus comparison of factors %d and %d: %s',
                 block_a.factor_index, block_b.factor_index, same)
    return same


def _root_of_unity_order(ctx, factor, zeta):
    """Order of zeta = alpha/|alpha| if it is a root of unity, else None."""
    rho = zeta ** 2
    _, candidates = _ratio_polynomial(tuple(factor.coefficients)).factor_list()
    minimal = min((poly for poly, _ in candidates), key=lambda poly: abs(_evaluate_mp(ctx, poly, rho)))
    if not minimal.is_cyclotomic:
        return None
    degree = minimal.degree()
    target = minimal.monic().all_coeffs()
    order_rho = None
    for N in range(1, 2 * degree * degree + 3):
        if sympy.totient(N) == degree and Poly(sympy.cyclotomic_poly(N, _y), _y).all_coeffs() == target:
            order_rho = N
            break
    if order_rho is None:
        return None
    if order_rho % 2 == 0:
        return 2 * order_rho
    if abs(zeta ** order_rho - 1) <= numeric.tiny(ctx):
        return order_rho
    return 2 * order_rho


def _resolve_angle(ctx, factor, block):
    two_pi = 2 * ctx.pi
    zeta = block.eigenvalue / block.modulus
    if ctx.im(block.eigenvalue) == 0:
        order = 1 if ctx.re(block.eigenvalue) > 0 else 2
    else:
        order = _root_of_unity_order(ctx, factor, zeta)
    if order is None:
        block.angle = ctx.arg(zeta) % two_pi
        block.angle_fraction = None
        block.root_order = None
        return
    r = int(ctx.nint(ctx.arg(zeta) % two_pi * order / two_pi)) % order
    block.angle_fraction = Fraction(r, order)
    block.angle = two_pi * r / order
    block.root_order = order


def _select_dominant(ctx, factors, blocks, tie_bits):
    top = max(block.modulus for block in blocks)
    band = top * ctx.ldexp(1, -tie_bits)
    candidates = [i for i, block in enumerate(blocks) if top - block.modulus <= band]
    reference = max(candidates, key=lambda i: blocks[i].modulus)
    group = [i for i in candidates
             if i == reference or _same_modulus(ctx, factors, blocks[reference], blocks[i])]
    multiplicity = max(blocks[i].size for i in group)
    dominant = [i for i in group if blocks[i].size == multiplicity]
    return dominant, blocks[reference].modulus, multiplicity


def eigen_structure(M, precision=128, tie_bits=64):
    """Jordan structure, dominant data and the closure group of dominant angles."""
    if M.det() == 0:
        raise NotInvertible('matrix has zero determinant')
    ctx = numeric.context(precision)
    poly = char_poly(M)
    factors = []
    blocks = []
    for factor_index, (coefficients, multiplicity) in enumerate(poly.factors):
        chain = _nullity_chain(M, coefficients, multiplicity)
        sizes = _blocks_from_nullity_chain(chain)
        real_count = _real_root_count(coefficients)
        factors.append(IrreducibleFactor(coefficients, multiplicity, sizes, chain, real_count))
        for root_index, root in enumerate(_factor_roots(ctx, coefficients, real_count)):
            for size in sizes:
                blocks.append(JordanBlock(root, size, factor_index, root_index, abs(root)))

    dominant, radius, multiplicity = _select_dominant(ctx, factors, blocks, tie_bits)

    resolved = {}
    for i in dominant:
        block = blocks[i]
        key = (block.factor_index, block.root_index)
        if key not in resolved:
            _resolve_angle(ctx, factors[block.factor_index], block)
            resolved[key] = block
        else:
            source = resolved[key]
            block.angle, block.angle_fraction, block.root_order = \
                source.angle, source.angle_fraction, source.root_order
    for i, block in enumerate(blocks):
        if block.angle is None:
            block.angle = ctx.arg(block.eigenvalue) % (2 * ctx.pi)

    theta_group = ThetaGroup.from_orders([blocks[i].root_order for i in dominant])
    data = JordanData(dim=M.dim, precision=precision, spectral_radius=radius, multiplicity=multiplicity,
                      blocks=blocks, dominant_indices=dominant, theta_group=theta_group,
                      factors=factors, ctx=ctx)
    logger.debug('eigen structure: %r', data)
    return data


def numeric_jordan_data(matrix, ctx, cluster_bits=None):
    """Jordan data of a high-precision matrix from numeric rank chains.

    Eigenvalues are clustered at 2^-(prec/4) relative distance; angles are
    flagged as roots of unity only when numerically zero.
    """
    n = matrix.rows
    cluster_bits = cluster_bits or ctx.prec // 4
    eigenvalues = ctx.eig(matrix, left=False, right=False)
    # 1x1 input still returns (E, ER, EL)
    if isinstance(eigenvalues, tuple):
        eigenvalues = eigenvalues[0]
    clusters = []
    for value in eigenvalues:
        for cluster in clusters:
            centre = ctx.fsum(cluster) / len(cluster)
            if abs(value - centre) <= ctx.ldexp(1, -cluster_bits) * max(ctx.one, abs(centre)):
                cluster.append(value)
                break
        else:
            clusters.append([value])
    rank_tolerance = ctx.ldexp(1, -cluster_bits)
    blocks = []
    for index, cluster in enumerate(clusters):
        mu = ctx.fsum(cluster) / len(cluster)
        shifted = matrix - mu * ctx.eye(n)
        power = shifted
        chain = [0]
        while chain[-1] < len(cluster):
            nullity = n - numeric.numeric_rank(ctx, power, rank_tolerance)
            if nullity <= chain[-1]:
                break
            chain.append(min(nullity, len(cluster)))
            power = power * shifted
        if chain[-1] < len(cluster):
            chain.append(len(cluster))
        for size in _blocks_from_nullity_chain(chain):
            blocks.append(JordanBlock(ctx.mpc(mu), size, index, 0, abs(mu)))
    top = max(block.modulus for block in blocks)
    band = top * ctx.ldexp(1, -cluster_bits)
    group = [i for i, block in enumerate(blocks) if top - block.modulus <= band]
    multiplicity = max(blocks[i].size for i in group)
    dominant = [i for i in group if blocks[i].size == multiplicity]
    two_pi = 2 * ctx.pi
    for block in blocks:
        angle = ctx.arg(block.eigenvalue) % two_pi
        if min(angle, two_pi - angle) <= band:
            block.angle, block.angle_fraction, block.root_order = ctx.zero, Fraction(0), 1
        else:
            block.angle = angle
    theta_group = ThetaGroup.from_orders([blocks[i].root_order for i in dominant])
    return JordanData(dim=n, precision=ctx.prec, spectral_radius=top, multiplicity=multiplicity,
                      blocks=blocks, dominant_indices=dominant, theta_group=theta_group, ctx=ctx)


# Projectors and limit operators

def _projector(ctx, M_num, mu, index, algebraic_multiplicity):
    n = M_num.rows
    shifted = M_num - mu * ctx.eye(n)
    power = shifted ** index
    V = numeric.null_space(ctx, power, algebraic_multiplicity)
    U = numeric.null_space(ctx, power.H, algebraic_multiplicity)
    P = V * ctx.inverse(U.H * V) * U.H
    return P, shifted * P


def spectral_projectors(M, J, dominant_only=True):
    """Projectors onto the generalized eigenspaces of the (dominant) eigenvalues."""
    ctx = J.ctx
    M_num = M.to_numeric(ctx)
    chosen = J.dominant_blocks if dominant_only else J.blocks
    seen = set()
    projectors = []
    for block in chosen:
        key = (block.factor_index, block.root_index)
        if key in seen:
            continue
        seen.add(key)
        if J.factors:
            factor = J.factors[block.factor_index]
            index, multiplicity = factor.block_sizes[0], factor.multiplicity
        else:
            sizes = [b.size for b in J.blocks if (b.factor_index, b.root_index) == key]
            index, multiplicity = max(sizes), sum(sizes)
        P, N = _projector(ctx, M_num, block.eigenvalue, index, multiplicity)
        projectors.append(SpectralProjector(block.eigenvalue, block, P, N, multiplicity))
    return projectors


def _limit_terms(ctx, J, projectors):
    """Per dominant eigenvalue mu: mu^-(m-1) N^(m-1) P / (m-1)!."""
    m = J.multiplicity
    terms = []
    for proj in projectors:
        term = proj.projector if m == 1 else proj.nilpotent ** (m - 1)
        scale = proj.eigenvalue ** (-(m - 1)) / ctx.factorial(m - 1)
        terms.append((proj, term * scale))
    return terms


def _twist(ctx, n, projectors):
    size = projectors[0].projector.rows
    twist = ctx.eye(size)
    for proj in projectors:
        twist += (ctx.expj(-n * proj.block.angle) - 1) * proj.projector
    return twist


def limit_operators(M, J):
    """(Lambda_infinity, pi o Lambda_infinity, projectors, terms) without rate measurements."""
    ctx = J.ctx
    projectors = spectral_projectors(M, J)
    terms = _limit_terms(ctx, J, projectors)
    n = M.dim
    limit = ctx.zeros(n, n)
    averaged = ctx.zeros(n, n)
    for proj, term in terms:
        limit += term
        if proj.block.angle_fraction == 0:
            averaged += term
    return limit, averaged, projectors, terms


def _residue_limits(ctx, J, terms):
    group = J.theta_group
    if group.kind is ThetaKind.POSITIVE_DIMENSIONAL:
        raise ThetaNotResolved('Theta is positive dimensional: plain limits depend on the subsequence')
    order = group.order or 1
    limits = {}
    for r in range(order):
        n = terms[0][1].rows
        total = ctx.zeros(n, n)
        for proj, term in terms:
            total += ctx.expj(r * proj.block.angle) * term
        limits[r] = total
    return limits


def lambda_infinity(M, J, n_max=200, fit_window=(20, 50), slack=1.25, plain=False):
    """Limit of the twisted normalized powers and of their Cesaro means, with measured rates."""
    ctx = J.ctx
    lam, m = J.spectral_radius, J.multiplicity
    if lam <= 1:
        logger.warning('spectral radius %s <= 1: averaged error rates are not meaningful', ctx.nstr(lam, 15))
    limit, averaged, projectors, terms = limit_operators(M, J)

    n = M.dim
    step = M.to_numeric(ctx) / lam
    scaled_power = ctx.eye(n)
    running = ctx.zeros(n, n)
    ns, twisted_dev, averaged_dev = [], [], []
    for k in range(1, n_max + 1):
        scaled_power = scaled_power * step
        normalized = scaled_power / ctx.mpf(k) ** (m - 1)
        running += normalized
        ns.append(k)
        twisted_dev.append(numeric.max_norm(ctx, _twist(ctx, k, projectors) * normalized - limit))
        averaged_dev.append(numeric.max_norm(ctx, running / k - averaged))

    floor = float(numeric.tiny(ctx, 0.75)) * max(1.0, float(numeric.max_norm(ctx, limit)))
    rate = numeric.rate_constant(ns, twisted_dev, fit_window, numeric.one_over_n, slack, floor)
    rate['log_log_slope'] = numeric.log_log_slope(ns[fit_window[0] - 1:], twisted_dev[fit_window[0] - 1:], floor)
    averaged_rate = numeric.rate_constant(ns, averaged_dev, fit_window, numeric.log_n_over_n, slack, floor)
    averaged_rate['log_log_slope'] = numeric.log_log_slope(ns[fit_window[0] - 1:],
                                                          averaged_dev[fit_window[0] - 1:], floor)

    strict_dimension = sum(1 for block in J.dominant_blocks if block.angle_fraction == 0)
    averaged_rank = numeric.numeric_rank(ctx, averaged, numeric.tiny(ctx, 0.25)) if strict_dimension else 0
    residues = _residue_limits(ctx, J, terms) if plain else None
    logger.info('Lambda_infinity computed: C=%.4g (validated %s), C\'=%.4g (validated %s)',
                rate['constant'], rate['validated'], averaged_rate['constant'], averaged_rate['validated'])
    return LimitOperators(limit=limit, averaged_limit=averaged, averaged_rank=averaged_rank,
                          strict_dimension=strict_dimension, rate=rate, averaged_rate=averaged_rate,
                          twisted_deviations=twisted_dev, averaged_deviations=averaged_dev,
                          residue_limits=residues)


def power_asymptotics(M, J, n_range, digit_budget=20000):
    """Normalized norms ||M^n|| / (n^(m-1) lambda^n) from exact powers."""
    ctx = J.ctx
    ns = sorted(set(int(n) for n in n_range))
    if not ns:
        raise ValueError('n_range is empty')
    lam, m = J.spectral_radius, J.multiplicity
    limit, _, projectors, _ = limit_operators(M, J)

    power = ExactMatrix.identity(M.dim, M.domain)
    current = 0
    normalized_norms, deviations = [], []
    for n in ns:
        power = power @ M.power(n - current)
        current = n
        digits = power.max_digits()
        if digits > digit_budget:
            raise Overflow(f'M^{n} has {digits}-digit entries, budget is {digit_budget}', n=n)
        scale = ctx.mpf(n) ** (m - 1) * lam ** n
        normalized = power.to_numeric(ctx) / scale
        normalized_norms.append(numeric.max_norm(ctx, normalized))
        deviations.append(numeric.max_norm(ctx, _twist(ctx, n, projectors) * normalized - limit))

    floor = float(numeric.tiny(ctx, 0.75)) * max(1.0, float(numeric.max_norm(ctx, limit)))
    kind, slope, ratio = numeric.classify_decay(ns, deviations, floor)
    tail = normalized_norms[len(normalized_norms) // 2:]
    bounds = (min(tail) / ctx.mpf('1.1'), max(tail) * ctx.mpf('1.1'))
    return AsymptoticReport(n_values=ns, normalized_norms=normalized_norms, fitted_rate=slope,
                            rate_kind=kind, geometric_ratio=ratio if kind == 'geometric' else None,
                            deviations=deviations, bounds=bounds)


# Cone preservation

def _cone_coordinates(G, vector, tolerance):
    """Nonnegative least-squares coordinates of ``vector`` over the columns of G (float64)."""
    coords, residual = optimize.nnls(G, vector)
    return coords, residual


def perron_frobenius_check(M, cone_generators, J=None, precision=128, tolerance=1e-12):
    """Check that a cone-preserving map has a dominant real eigenvalue with an eigenvector in the cone."""
    n = M.dim
    generators = [[exact_scalar(v) for v in g] for g in cone_generators]
    if any(len(g) != n for g in generators):
        raise DimensionMismatch(f'cone generators must have length {n}')
    G = ExactMatrix.from_rows([[g[i] for g in generators] for i in range(n)])
    if G.rank() < n:
        raise DimensionMismatch('cone generators do not span the space')
    simplicial = len(generators) == n
    images = M @ G

    if simplicial:
        coordinates = G.inverse() @ images
        preserved = all(sympy.im(c) == 0 and c >= 0 for row in coordinates.rows() for c in row)
    else:
        G_float = np.array([[complex(e).real for e in row] for row in G.rows()])
        image_rows = images.rows()
        preserved = not images.is_gaussian
        for j in range(len(generators)):
            target = np.array([complex(row[j]).real for row in image_rows])
            _, residual = _cone_coordinates(G_float, target, tolerance)
            if residual > tolerance * max(1.0, np.abs(target).max()):
                preserved = False
    if not preserved:
        raise ConeNotPreserved('the map sends a cone generator outside the cone')

    J = J or eigen_structure(M, precision)
    ctx = J.ctx
    lam = J.spectral_radius
    if not any(block.angle_fraction == 0 for block in J.dominant_blocks):
        logger.warning('cone preserved but no dominant eigenvalue is real positive')
        return PerronFrobeniusReport(cone_preserved=True, eigenvalue=lam, eigenvector=None,
                                     generator_coordinates=[], nonnegative=False, residual=None,
                                     falsified=True, reason='NoDominantRealEigenvalue')

    _, averaged, _, _ = limit_operators(M, J)
    interior = ctx.matrix([[ctx.fsum(to_mp(ctx, g[i]) for g in generators)] for i in range(n)])
    vector = averaged * interior
    pivot = next(i for i in reversed(range(n)) if abs(vector[i]) > numeric.tiny(ctx))
    vector = (vector / vector[pivot]).apply(ctx.re)

    if simplicial:
        coords = ctx.inverse(G.to_numeric(ctx)) * vector
        coordinates = [ctx.re(coords[i]) for i in range(n)]
        nonnegative = all(c >= -tolerance for c in coordinates)
    else:
        G_float = np.array([[complex(e).real for e in row] for row in G.rows()])
        coords, residual = _cone_coordinates(G_float, np.array([float(vector[i]) for i in range(n)]), tolerance)
        coordinates = [ctx.mpf(float(c)) for c in coords]
        nonnegative = residual <= tolerance * max(1.0, float(numeric.vector_max_norm(ctx, vector)))

    residual = numeric.vector_max_norm(ctx, M.to_numeric(ctx) * vector - lam * vector) / \
        numeric.vector_max_norm(ctx, vector)
    return PerronFrobeniusReport(cone_preserved=True, eigenvalue=lam, eigenvector=vector,
                                 generator_coordinates=coordinates, nonnegative=nonnegative,
                                 residual=residual)
