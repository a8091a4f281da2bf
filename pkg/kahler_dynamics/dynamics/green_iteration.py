"""Green-type iterations: Holder limits of twisted averages, torus Green classes and recurrences.

Grid dynamics are exact: g(x) = Gx mod 1 with an integer matrix G maps the
grid (Z/N)^d to itself, so every error in a rate report comes from truncating
the sequences.
"""
import logging
import math
import warnings

import numpy as np

from kahler_dynamics.dynamics import numeric
from kahler_dynamics.dynamics.cohomology_models import coefficient_matrix, torus_action
from kahler_dynamics.dynamics.jordan_core import char_poly, eigen_structure, lambda_infinity, limit_operators
from kahler_dynamics.errors import (ConfigValidationError, DegenerateFunction, DegenerateFunctionWarning,
                                    HypothesisViolated, NoExpansion)
from kahler_dynamics.models.iteration import (GreenLimit, HolderEstimate, IterationResult, IterationSetup,
                                              RecurrenceRelation)
from kahler_dynamics.models.matrix import ExactMatrix
from kahler_dynamics.models.spectral import ThetaKind

logger = logging.getLogger(__name__)

NEGLIGIBLE = 2.0 ** -60


# Setup

def grid_indices(axis_points, dimension):
    """Integer coordinates of every grid point, in C order (points x dimension)."""
    axes = np.meshgrid(*[np.arange(axis_points, dtype=np.int64)] * dimension, indexing='ij')
    return np.stack([axis.ravel() for axis in axes], axis=1)


def trigonometric_function(terms, indices, axis_points):
    """Sample u(x) = sum a cos(2 pi <xi, x>) per component of E.

    ``terms`` has one list per component, each entry ``{'amplitude', 'frequency'}``.
    """
    x = indices / axis_points
    values = np.zeros((len(indices), len(terms)))
    for c, component in enumerate(terms):
        for term in component:
            frequency = np.asarray(term['frequency'], dtype=float)
            values[:, c] += float(term.get('amplitude', 1)) * np.cos(2 * np.pi * (x @ frequency))
    return values


def _integer_matrix(G):
    if isinstance(G, ExactMatrix):
        rows = G.rows()
        if G.is_gaussian or any(e.q != 1 for row in rows for e in row):
            raise ConfigValidationError('the self-map of K must be an integer matrix', field='options.G')
        return np.array([[int(e) for e in row] for row in rows], dtype=np.int64)
    return np.asarray(G, dtype=np.int64)


def holder_power(nu, lam, G, max_power=64):
    """Smallest n with nu < n log(lambda) / log ||G^n||, or None when no n <= max_power works."""
    G = np.asarray(G, dtype=object)
    power = np.identity(G.shape[0], dtype=object)
    for n in range(1, max_power + 1):
        power = power.dot(G)
        lipschitz = max(sum(abs(int(e)) for e in row) for row in power)
        if lipschitz <= 1 or nu < n * math.log(lam) / math.log(lipschitz):
            return n
    return None


def iteration_setup(G, Lambda, u, nu, axis_points, power=None, precision=128):
    """Validate the hypotheses on (g, Lambda) and sample u on the grid.

    ``u`` is either an array of samples (points x dim E, C order) or a list of
    cosine terms per component. With ``power`` unset, g and Lambda are replaced
    by their smallest power for which nu stays below log(lambda)/log(M).
    """
    G = _integer_matrix(G)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ConfigValidationError('G must be a square integer matrix', field='options.G')
    if not 0 < nu <= 1:
        raise ConfigValidationError(f'Holder exponent nu={nu} outside (0, 1]', field='options.nu')
    J = eigen_structure(Lambda, precision)
    lam = float(J.spectral_radius)
    lipschitz = float(np.abs(G).sum(axis=1).max())
    if lam <= 1:
        raise HypothesisViolated(f'spectral radius of Lambda is {lam}, it must exceed 1')
    if lipschitz <= 1:
        raise HypothesisViolated(f'Lipschitz constant of g is {lipschitz}, it must exceed 1')

    if power is None:
        power = holder_power(nu, lam, G) or 1
    if power > 1:
        G = np.linalg.matrix_power(G, power)
        Lambda = Lambda.power(power)
        J = eigen_structure(Lambda, precision)
        logger.info('replaced (g, Lambda) by their %d-th power', power)

    indices = grid_indices(axis_points, G.shape[0])
    values = np.asarray(u) if isinstance(u, np.ndarray) else trigonometric_function(u, indices, axis_points)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape != (len(indices), Lambda.dim):
        raise ConfigValidationError(f'u must have shape {(len(indices), Lambda.dim)}, got {values.shape}',
                                    field='options.u')
    return IterationSetup(G=G, axis_points=axis_points, u=values, nu=nu, Lambda=Lambda, jordan=J, power=power,
                          indices=indices)


# Iteration

def _flat(setup, indices):
    return np.ravel_multi_index(tuple(indices.T), setup.shape)


def _orbit_values(setup, count):
    """Yield u o g^i on the grid for i = 0..count-1."""
    indices = setup.indices
    for _ in range(count):
        yield setup.u[_flat(setup, indices)]
        indices = (indices @ setup.G.T) % setup.axis_points


def _operator_arrays(setup):
    ctx = setup.jordan.ctx
    Lambda = setup.Lambda.to_numeric(ctx)
    limit, averaged, projectors, _ = limit_operators(setup.Lambda, setup.jordan)
    return (numeric.to_complex_array(ctx, Lambda), numeric.to_complex_array(ctx, limit),
            numeric.to_complex_array(ctx, averaged),
            [(numeric.to_complex_array(ctx, p.projector), float(p.block.angle)) for p in projectors])


def _twist(n, projectors, size):
    twist = np.identity(size, dtype=np.complex128)
    for P, angle in projectors:
        twist += (np.exp(-1j * n * angle) - 1) * P
    return twist


def _series_limits(setup, limit, averaged):
    """v = sum_i L Lambda^-i (u o g^i) and w with pi o Lambda_infinity, truncated at negligible terms."""
    lam = setup.spectral_radius
    terms = int(math.ceil(-math.log(NEGLIGIBLE) / math.log(lam))) + 1
    inverse = np.linalg.inv(numeric.to_complex_array(setup.jordan.ctx,
                                                     setup.Lambda.to_numeric(setup.jordan.ctx)))
    L, Lw = limit, averaged
    v = np.zeros(setup.u.shape, dtype=np.complex128)
    w = np.zeros(setup.u.shape, dtype=np.complex128)
    for values in _orbit_values(setup, terms):
        v += values @ L.T
        w += values @ Lw.T
        L, Lw = L @ inverse, Lw @ inverse
    return v, w, terms


def _real_if_close(array):
    return array.real if np.abs(array.imag).max(initial=0.0) <= 1e-12 * max(1.0, np.abs(array).max(initial=0.0)) \
        else array


def holder_iteration(setup, n_max=200, N_max=200, fit_window=(20, 50), slack=1.25):
    """v_n = sum_{j=1..n} Lambda^j u o g^(n-j) / (n^(m-1) lambda^n) and its Cesaro means w_N.

    The scaled recurrence s_(n+1) = (Lambda / lambda)(s_n + u o g^n / lambda^n)
    gives v_n = s_n / n^(m-1) without forming large powers.
    """
    if n_max < fit_window[1] or N_max < fit_window[1]:
        raise ConfigValidationError(f'n_max and N_max must reach the fit window {fit_window}',
                                    field='options.n_max')
    lam, m = setup.spectral_radius, setup.jordan.multiplicity
    Lambda, limit, averaged, projectors = _operator_arrays(setup)
    v, w, terms = _series_limits(setup, limit, averaged)
    step = Lambda / lam
    size = Lambda.shape[0]

    s = np.zeros(setup.u.shape, dtype=np.complex128)
    running = np.zeros(setup.u.shape, dtype=np.complex128)
    twisted_dev, cesaro_dev = [], []
    scale = 1.0
    v_n = s
    for n, values in enumerate(_orbit_values(setup, max(n_max, N_max)), start=1):
        s = (s + values / scale) @ step.T
        scale *= lam
        v_n = s / n ** (m - 1)
        if n <= n_max:
            twisted = v_n @ _twist(n, projectors, size).T
            twisted_dev.append(float(np.abs(twisted - v).max(initial=0.0)))
        if n <= N_max:
            running += v_n
            cesaro_dev.append(float(np.abs(running / n - w).max(initial=0.0)))

    magnitude = max(1.0, float(np.abs(v).max(initial=0.0)))
    floor = 1e-12 * magnitude
    ns, Ns = list(range(1, n_max + 1)), list(range(1, N_max + 1))
    rate = numeric.rate_constant(ns, twisted_dev, fit_window, numeric.one_over_n, slack, floor)
    rate['log_log_slope'] = numeric.log_log_slope(ns[fit_window[0] - 1:], twisted_dev[fit_window[0] - 1:], floor)
    rate['improves_with_n'] = twisted_dev[-1] <= twisted_dev[n_max // 2 - 1] + floor
    cesaro_rate = numeric.rate_constant(Ns, cesaro_dev, fit_window, numeric.log_n_over_n, slack, floor)
    cesaro_rate['log_log_slope'] = numeric.log_log_slope(Ns[fit_window[0] - 1:], cesaro_dev[fit_window[0] - 1:],
                                                         floor)

    angles = [angle for _, angle in projectors]
    if all(abs(angle) <= 1e-12 for angle in angles):
        consistent = bool(np.abs(w - v).max(initial=0.0) <= 1e-9 * magnitude)
    elif all(abs(angle) > 1e-12 for angle in angles):
        consistent = bool(np.abs(w).max(initial=0.0) <= 1e-9 * magnitude)
    else:
        consistent = None
    logger.info('Holder iteration: C=%.4g validated %s, C\'=%.4g validated %s, %d series terms',
                rate['constant'], rate['validated'], cesaro_rate['constant'], cesaro_rate['validated'], terms)
    return IterationResult(n_values=ns, N_values=Ns, twisted_deviations=twisted_dev, cesaro_deviations=cesaro_dev,
                           v=_real_if_close(v), w=_real_if_close(w), v_last=_real_if_close(v_n),
                           w_last=_real_if_close(running / N_max), rate=rate, cesaro_rate=cesaro_rate,
                           twist_consistent=consistent, series_terms=terms)


# Holder exponents

def default_scales(axis_points):
    """Dyadic exponents j with h = 2^-j, keeping at least 4 grid cells per separation."""
    top = int(math.log2(axis_points)) - 2
    return list(range(4 if top >= 8 else 2, top + 1))


def holder_exponent_estimate(v, scales=None, nu=None, lam=None, lipschitz=None, strict=False, dimension=None):
    """Regression slope of log sup_{|x-y|=h} |v(x) - v(y)| against log h on dyadic h.

    ``v`` is sampled on a uniform grid with a power-of-two number of points per
    axis; with ``dimension`` smaller than v.ndim the trailing axis holds the
    components of vector-valued v.
    """
    v = np.asarray(v)
    axis_points = v.shape[0]
    grid_axes = range(dimension or v.ndim)
    if axis_points & (axis_points - 1):
        raise ConfigValidationError(f'grid size {axis_points} is not a power of two', field='grid.axis_points')
    scales = list(scales) if scales is not None else default_scales(axis_points)
    if len(scales) < 3:
        raise HypothesisViolated(f'only {len(scales)} dyadic scales available on a grid of {axis_points} points')

    h_values, sups, pairs = [], [], 0
    for j in scales:
        shift = axis_points >> j
        sup = max(float(np.abs(np.roll(v, -shift, axis=a) - v).max(initial=0.0)) for a in grid_axes)
        h_values.append(2.0 ** -j)
        sups.append(sup)
        pairs += v.size * len(grid_axes)
    logger.debug('Holder scales %s: sup differences %s', h_values, sups)

    bound = None
    if nu is not None and lam is not None and lipschitz is not None:
        bound = min(nu, math.log(lam) / math.log(lipschitz)) if lipschitz > 1 else nu
    magnitude = max(1.0, float(np.abs(v).max(initial=0.0)))
    if max(sups) <= 1e-12 * magnitude:
        if strict:
            raise DegenerateFunction('the sampled function is constant')
        warnings.warn('the sampled function is constant: exponent set to 1', DegenerateFunctionWarning,
                      stacklevel=2)
        return HolderEstimate(exponent=1.0, constant=0.0, pairs_used=pairs, admissible_bound=bound,
                              scales=h_values, sup_differences=sups, degenerate=True)
    slope, intercept = np.polyfit(np.log(h_values), np.log(np.maximum(sups, 1e-300)), 1)
    exponent = min(float(slope), 1.0)
    return HolderEstimate(exponent=exponent, constant=float(np.exp(intercept)), pairs_used=pairs,
                          admissible_bound=bound, scales=h_values, sup_differences=sups)


def grid_function(setup, values):
    """Reshape per-point values to the grid, keeping a trailing component axis when dim E > 1."""
    values = np.asarray(values)
    if values.shape[1] == 1:
        return values[:, 0].reshape(setup.shape)
    return values.reshape(setup.shape + (values.shape[1],))


# Torus Green classes

def _sample_subsequences(ctx, J, block, omega, terms, targets, tolerance, search_limit):
    """Subsequential limits along n whose twisted angle returns close to equispaced targets."""
    reference = next(b for b in J.dominant_blocks if b.angle_fraction is None)
    angle = float(reference.angle)
    step = block.to_numeric(ctx) / J.spectral_radius
    samples = []
    for t in range(targets):
        target = 2 * math.pi * t / targets
        hit = None
        for n in range(1, search_limit + 1):
            gap = (n * angle - target) % (2 * math.pi)
            if min(gap, 2 * math.pi - gap) <= tolerance:
                hit = n
                break
        if hit is None:
            logger.warning('no return within %d steps for target %.4f', search_limit, target)
            continue
        predicted = ctx.matrix(block.dim, 1)
        for proj, term in terms:
            predicted += ctx.expj(hit * proj.block.angle) * (term * omega)
        actual = (step ** hit) * omega / ctx.mpf(hit) ** (J.multiplicity - 1)
        samples.append({'n': hit, 'target': target, 'vector': predicted,
                        'deviation': numeric.vector_max_norm(ctx, actual - predicted)})
    return samples


def _residue_samples(ctx, limits, omega):
    return [{'n': r, 'target': None, 'vector': limit * omega, 'deviation': None}
            for r, limit in sorted(limits.items())]


def _separation(ctx, samples):
    vectors = [sample['vector'] for sample in samples]
    distances = [float(numeric.vector_max_norm(ctx, a - b))
                 for i, a in enumerate(vectors) for b in vectors[i + 1:]]
    return min(distances) if distances else None


def green_limit_torus(T, N_max=200, precision=128, fit_window=(20, 50), slack=1.25, targets=8,
                      angle_tolerance=1e-3, search_limit=200000, tolerance=1e-9):
    """Limit of (f^n)^*[omega] / d_1^n on a torus, or its Cesaro limit and sampled subsequential limits."""
    action = torus_action(T)
    block, omega_exact = action.blocks[1], action.kahler(1, 'model')
    J = eigen_structure(block, precision)
    ctx = J.ctx
    if J.spectral_radius <= 1 + numeric.tiny(ctx, 0.25):
        raise NoExpansion('d_1 = 1: the automorphism has no expansion on H^{1,1}')
    plain = J.theta_group.is_trivial
    operators = lambda_infinity(block, J, n_max=N_max, fit_window=fit_window, slack=slack,
                                plain=J.theta_group.kind is ThetaKind.FINITE_CYCLIC)
    omega = omega_exact.to_numeric(ctx)
    limit = operators.limit * omega
    averaged = operators.averaged_limit * omega
    target = limit if plain else averaged

    F = block.to_numeric(ctx)
    norm = max(ctx.one, numeric.vector_max_norm(ctx, target))
    residual = numeric.vector_max_norm(ctx, F * target - J.spectral_radius * target) / norm
    hermitian = np.array(numeric.to_complex_array(ctx, ctx.matrix(coefficient_matrix(target, T.k))))
    eigenvalues = [float(e) for e in np.linalg.eigvalsh((hermitian + hermitian.conj().T) / 2)]
    positive = all(e >= -tolerance * float(norm) for e in eigenvalues)

    samples, separation = [], None
    if plain:
        mode, rate = 'PlainLimit', operators.rate
    else:
        mode, rate = 'CesaroOnly', operators.averaged_rate
        if J.theta_group.kind is ThetaKind.FINITE_CYCLIC:
            samples = _residue_samples(ctx, operators.residue_limits, omega)
        else:
            _, _, _, terms = limit_operators(block, J)
            samples = _sample_subsequences(ctx, J, block, omega, terms, targets, angle_tolerance, search_limit)
        separation = _separation(ctx, samples)
    logger.info('torus Green class: %s, d_1=%s, Theta=%s', mode, ctx.nstr(J.spectral_radius, 15), J.theta_group)
    return GreenLimit(mode=mode, degree=J.spectral_radius, theta_group=J.theta_group, limit_class=target,
                      averaged_class=averaged, eigen_residual=residual, coefficient_eigenvalues=eigenvalues,
                      positive=positive, rate=rate, samples=samples, separation=separation)


# Recurrence relations

def _solve_exact(K, b):
    """Coordinates of b in the column span of K (full column rank), exactly."""
    Kh = K.conjugate_transpose()
    return (Kh @ K).inverse() @ (Kh @ b)


def recurrence_machinery(action, nu=1, precision=128):
    """Minimal relation (f^m)^*omega = sum_j a_j (f^j)^*omega and its companion matrix."""
    F, omega = action.blocks[1], action.kahler(1, 'model')
    krylov = [omega]
    K = omega
    while True:
        candidate = F @ krylov[-1]
        extended = K.hstack(candidate)
        if extended.rank() == len(krylov):
            break
        krylov.append(candidate)
        K = extended
    m = len(krylov)
    coefficients = _solve_exact(K, candidate).column_values()
    rows = [[0] * m for _ in range(m)]
    for i in range(1, m):
        rows[i][i - 1] = 1
    for i, a in enumerate(coefficients):
        rows[i][m - 1] = a
    companion = ExactMatrix.from_rows(rows, domain=K.domain)

    J = eigen_structure(companion, precision)
    degree = eigen_structure(F, precision).spectral_radius
    matches = abs(J.spectral_radius - J.ctx.convert(degree)) <= numeric.tiny(J.ctx, 0.25) * degree
    charpoly_matches = None
    if m == F.dim:
        charpoly_matches = char_poly(companion).coefficients == char_poly(F).coefficients
    logger.info('recurrence of length %d, companion spectral radius %s', m, J.ctx.nstr(J.spectral_radius, 15))
    return RecurrenceRelation(m=m, coefficients=coefficients, companion=companion, spectral_radius=J.spectral_radius,
                              degree=degree, matches_degree=bool(matches), nu=nu,
                              charpoly_matches=charpoly_matches)

