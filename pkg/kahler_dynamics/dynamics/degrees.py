"""Dynamical degrees, relative degrees, concavity checks and class-level Cesaro limits."""
from concurrent.futures import ThreadPoolExecutor
import logging
import warnings

import numpy as np

from kahler_dynamics.dynamics import numeric
from kahler_dynamics.dynamics.cohomology_models import inverse_action
from kahler_dynamics.dynamics.jordan_core import eigen_structure, limit_operators, numeric_jordan_data
from kahler_dynamics.errors import (ConfigValidationError, CupMissing, ModelInconsistencyWarning, NotEigenclass,
                                    Overflow)
from kahler_dynamics.models.cohomology import ModelTag
from kahler_dynamics.models.degrees import (CesaroReport, ConcavityReport, DegreeChainReport, DegreeProfile,
                                            DegreeSequence, RelativeDegreeProfile, SubmultiplicativityReport)
from kahler_dynamics.models.matrix import ExactMatrix, exact_scalar, to_mp

logger = logging.getLogger(__name__)


def _as_mp(ctx, value):
    if hasattr(value, '_mpf_') or hasattr(value, '_mpc_') or isinstance(value, (float, complex)):
        return ctx.convert(value)
    return to_mp(ctx, exact_scalar(value))


def _numeric_column(ctx, values):
    if isinstance(values, ExactMatrix):
        return values.to_numeric(ctx)
    if hasattr(values, 'rows') and hasattr(values, 'cols'):
        return ctx.matrix([[ctx.convert(values[i, 0])] for i in range(values.rows)])
    return ctx.matrix([[_as_mp(ctx, v)] for v in values])


def _exact_orbit(block, vector, ns, digit_budget):
    """Yield (n, block^n vector) exactly for increasing n."""
    current = 0
    for n in ns:
        for _ in range(n - current):
            vector = block @ vector
        current = n
        digits = vector.max_digits()
        if digits > digit_budget:
            raise Overflow(f'orbit vector at n={n} has {digits}-digit entries, budget is {digit_budget}', n=n)
        yield n, vector


def plateau_indices(degrees, tolerance):
    """(m, m') bounding the maximal degrees among p = 1..k-1 (all p when k < 2)."""
    k = len(degrees) - 1
    interior = range(1, k) if k >= 2 else range(0, k + 1)
    top = max(degrees[p] for p in interior)
    plateau = [p for p in interior if abs(degrees[p] - top) <= tolerance * top]
    return min(plateau), max(plateau)


def degree_sequence(action, p, n_range, J=None, precision=128, digit_budget=20000):
    """d_{p,n} = ||(f^n)^* omega^p|| with its normalized sequence and n-th roots."""
    if not 0 <= p <= action.k:
        raise ConfigValidationError(f'degree p={p} outside 0..{action.k}', field='options.p')
    block, omega = action.blocks[p], action.kahler(p)
    J = J or eigen_structure(block, precision)
    ctx = J.ctx
    d, l = J.spectral_radius, J.multiplicity
    ns = sorted(set(int(n) for n in n_range if int(n) >= 1))
    norms, normalized, roots = [], [], []
    for n, vector in _exact_orbit(block, omega, ns, digit_budget):
        norm = numeric.vector_max_norm(ctx, vector.to_numeric(ctx))
        norms.append(norm)
        normalized.append(norm / (ctx.mpf(n) ** (l - 1) * d ** n))
        roots.append(ctx.root(norm, n) if norm > 0 else ctx.zero)

    fitted = None
    usable = [(n, norm) for n, norm in zip(ns, norms) if norm > 0]
    if len(usable) >= 3:
        x = np.array([n for n, _ in usable], dtype=float)
        y = np.array([float(ctx.log(norm)) - (l - 1) * np.log(n) for n, norm in usable])
        fitted = float(np.exp(np.polyfit(x, y, 1)[0]))
    return DegreeSequence(p=p, n_values=ns, norms=norms, normalized=normalized, roots=roots, fitted_degree=fitted)


def dynamical_degrees(action, precision=128, tie_bits=64, plateau_tolerance=1e-9, threads=1):
    """d_p and l_p for every p, with entropy and plateau; blocks are analysed in a worker pool."""
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        jordan = list(pool.map(lambda block: eigen_structure(block, precision, tie_bits), action.blocks))
    ctx = numeric.context(precision)
    degrees = [ctx.convert(J.spectral_radius) for J in jordan]
    multiplicities = [J.multiplicity for J in jordan]
    entropy = max(ctx.log(d) for d in degrees)
    profile = DegreeProfile(degrees=degrees, multiplicities=multiplicities, entropy=max(entropy, ctx.zero),
                            plateau=plateau_indices(degrees, plateau_tolerance), model_tag=action.model_tag,
                            sublattice=action.sublattice, precision=precision, jordan=jordan)
    logger.info('dynamical degrees %s, entropy %s', [ctx.nstr(d, 12) for d in degrees], ctx.nstr(profile.entropy, 12))
    return profile


def profile_from_values(degrees, model_tag=ModelTag.RAW, multiplicities=None, precision=128,
                        plateau_tolerance=1e-9):
    """Degree profile from externally supplied degrees."""
    ctx = numeric.context(precision)
    values = [ctx.mpf(d) for d in degrees]
    return DegreeProfile(degrees=values, multiplicities=multiplicities or [1] * len(values),
                         entropy=max(ctx.zero, max(ctx.log(d) for d in values)),
                         plateau=plateau_indices(values, plateau_tolerance), model_tag=model_tag,
                         precision=precision)


def check_concavity(profile, tolerance_bits=64):
    """Log-concavity d_p^2 >= d_{p-1} d_{p+1}; severity depends on the model family."""
    d = profile.degrees
    k = len(d) - 1
    rel = 2.0 ** -tolerance_bits
    margins = [d[p] ** 2 - d[p - 1] * d[p + 1] for p in range(1, k)]
    ratios = [d[p - 1] / d[p] for p in range(1, k + 1)]
    violations = [p for p, margin in zip(range(1, k), margins) if margin < -rel * d[p] ** 2]
    severity = None
    if violations:
        if profile.model_tag is ModelTag.RAW:
            severity = 'warning'
            warnings.warn(f'degrees {violations} violate log-concavity: the raw model is inconsistent',
                          ModelInconsistencyWarning, stacklevel=2)
        else:
            severity = 'error'
            logger.error('log-concavity fails at p=%s for a %s model', violations, profile.model_tag.value)
    return ConcavityReport(concave=not violations, margins=margins, ratios=ratios, violations=violations,
                           severity=severity)


def _cup_with_class(ctx, Y, T, d_p):
    """Numeric matrix of alpha -> T ∪ alpha given the multiplication matrix Y (T on the left)."""
    rows = Y.rows
    C = ctx.matrix(rows, d_p)
    for c in range(rows):
        for j in range(d_p):
            C[c, j] = ctx.fsum(Y[c, a * d_p + j] * T[a] for a in range(T.rows))
    return C


def _check_eigenclass(ctx, action, T, s, lam_T, tolerance):
    F = action.blocks[s].to_numeric(ctx)
    residual = numeric.vector_max_norm(ctx, F * T - lam_T * T)
    scale = lam_T * numeric.vector_max_norm(ctx, T)
    if scale == 0 or residual > tolerance * scale:
        raise NotEigenclass(f'f*[T] != lambda_T [T] (residual {ctx.nstr(residual, 6)})')
    return residual / scale


def dominant_eigenclass(action, s, precision=128):
    """(pi o Lambda_infinity omega^s, d_s): the invariant class obtained from the Kahler class."""
    block = action.blocks[s]
    J = eigen_structure(block, precision)
    _, averaged, _, _ = limit_operators(block, J)
    vector = (averaged * action.kahler(s, 'options.T_class').to_numeric(J.ctx)).apply(J.ctx.re)
    return vector, J.spectral_radius


def relative_degrees(action, T_class, s, lambda_T, precision=128, tolerance=1e-9):
    """lambda_p(T) for p = 1..k-s from the action induced on H^{p,p} / N^{p,p}(T)."""
    if not action.has_cup:
        raise CupMissing('relative degrees need the cup product structure')
    k = action.k
    if not 0 <= s < k:
        raise ConfigValidationError(f'bidegree s={s} outside 0..{k - 1}', field='options.s')
    ctx = numeric.context(precision)
    if isinstance(T_class, str) and T_class == 'dominant':
        T_class, lambda_T = dominant_eigenclass(action, s, precision)
    T = _numeric_column(ctx, T_class)
    if T.rows != action.blocks[s].dim:
        raise ConfigValidationError(f'[T] must have length {action.blocks[s].dim}', field='options.T_class')
    lam_T = _as_mp(ctx, lambda_T)
    residual = _check_eigenclass(ctx, action, T, s, lam_T, tolerance)

    degrees, multiplicities, dimensions = [], [], []
    for p in range(1, k - s + 1):
        Y = action.cup_matrix(s, p)
        if Y is None:
            raise CupMissing(f'cup product H^{s},{s} x H^{p},{p} is not available')
        C = _cup_with_class(ctx, Y.to_numeric(ctx), T, action.blocks[p].dim)
        Q = numeric.range_basis(ctx, C, numeric.tiny(ctx, 0.25))
        dimensions.append(Q.cols)
        if Q.cols == 0:
            degrees.append(ctx.zero)
            multiplicities.append(0)
            continue
        induced = Q.H * (action.blocks[p + s].to_numeric(ctx) / lam_T) * Q
        J = numeric_jordan_data(induced, ctx)
        degrees.append(J.spectral_radius)
        multiplicities.append(J.multiplicity)

    lower = degrees[0] ** (k - s) >= (1 - tolerance) / lam_T
    profile = RelativeDegreeProfile(T_class=[T[i] for i in range(T.rows)], s=s, lambda_T=lam_T,
                                    relative_degrees=degrees, relative_multiplicities=multiplicities,
                                    quotient_dimensions=dimensions, eigen_residual=residual,
                                    lower_bound_holds=lower, top_relation=lam_T * degrees[-1])
    logger.info('relative degrees for s=%d: %s', s, [ctx.nstr(d, 12) for d in degrees])
    return profile


def submultiplicativity_check(rel, p1, p2, tolerance=1e-9):
    """Margin lambda_{p1} lambda_{p2} - lambda_{p1+p2}; negative beyond tolerance flags an error."""
    count = len(rel.relative_degrees)
    if p1 < 1 or p2 < 1 or p1 + p2 > count:
        raise ConfigValidationError(f'need p1, p2 >= 1 with p1 + p2 <= {count}', field='options.p1')
    product = rel.degree(p1) * rel.degree(p2)
    margin = product - rel.degree(p1 + p2)
    flagged = margin < -tolerance * max(1, product)
    if flagged:
        logger.error('submultiplicativity fails for (%d, %d): margin %s', p1, p2, margin)
    return SubmultiplicativityReport(p1=p1, p2=p2, margin=margin, holds=not flagged, flagged=flagged)


def relative_degree_sequence(action, T_class, s, lambda_T, p, n_range, precision=128):
    """lambda_{p,n}(T) = lambda_T^-n ||(f^n)^*([T] ∪ [omega^p])|| and its n-th roots."""
    if not (0 <= s < action.k and 1 <= p <= action.k - s):
        raise ConfigValidationError(f'need 0 <= s < {action.k} and 1 <= p <= k - s', field='options.p')
    if not action.has_cup:
        raise CupMissing('relative degree sequences need the cup product structure')
    ctx = numeric.context(precision)
    T = _numeric_column(ctx, T_class)
    lam_T = _as_mp(ctx, lambda_T)
    Y = action.cup_matrix(s, p)
    if Y is None:
        raise CupMissing(f'cup product H^{s},{s} x H^{p},{p} is not available')
    vector = _cup_with_class(ctx, Y.to_numeric(ctx), T, action.blocks[p].dim) * \
        action.kahler(p).to_numeric(ctx)
    F = action.blocks[p + s].to_numeric(ctx)
    ns = sorted(set(int(n) for n in n_range if int(n) >= 1))
    values, roots, current = [], [], 0
    for n in ns:
        for _ in range(n - current):
            vector = F * vector
        current = n
        value = numeric.vector_max_norm(ctx, vector) / lam_T ** n
        values.append(value)
        roots.append(ctx.root(value, n) if value > 0 else ctx.zero)
    return ns, values, roots


def _kernel_gap(ctx, F, kernel, d, l, N_max, period=1):
    """Gap between the Cesaro limits from S and from S + v, v spanning ker(pi o Lambda_inf).

    N (S'_N - S_N) is the partial sum P_N of f^n v / (n^(l-1) d^n). Over the second half
    of the run P_N is fitted by c n + b log n + a + e_1/n + e_2/n^2 + e_3/n^3, sampling at
    multiples of the Theta order, and c is the gap. Positive-dimensional Theta leaves an
    O(1/N) oscillation in c.
    """
    start = N_max // 2
    if kernel.cols == 0 or start == 0:
        return ctx.zero
    if (N_max - start) // period < 12:
        period = 1
    vector = ctx.matrix(F.rows, 1)
    for j in range(kernel.cols):
        vector += numeric.column(ctx, kernel, j)
    partial = ctx.matrix(F.rows, 1)
    ns, sums = [], []
    for n in range(1, N_max + 1):
        vector = F * vector
        partial += vector / (ctx.mpf(n) ** (l - 1) * d ** n)
        if n >= start and n % period == 0:
            ns.append(n)
            sums.append([complex(partial[i]) for i in range(F.rows)])
    if len(ns) < 7:
        return numeric.vector_max_norm(ctx, partial) / N_max
    x = np.asarray(ns, dtype=float)
    scaled = N_max / x
    basis = np.column_stack([x / N_max, np.log(x), np.ones_like(x), scaled, scaled ** 2, scaled ** 3])
    coefficients, *_ = np.linalg.lstsq(basis, np.asarray(sums), rcond=None)
    return ctx.mpf(float(np.abs(coefficients[0]).max() / N_max))


def cesaro_class_limit(action, S_class, s, N_max=200, precision=128, fit_window=(20, 50), slack=1.25,
                       tolerance=1e-9, digit_budget=20000):
    """Limit of S_N = (1/N) sum_n (f^n)^*S / (n^(l_s-1) d_s^n) and its spectral-projector oracle."""
    if not 0 <= s <= action.k:
        raise ConfigValidationError(f'bidegree s={s} outside 0..{action.k}', field='options.s')
    block = action.blocks[s]
    S = S_class if isinstance(S_class, ExactMatrix) else ExactMatrix.column(S_class)
    if S.shape != (block.dim, 1):
        raise ConfigValidationError(f'S_class must have length {block.dim}', field='options.S_class')
    J = eigen_structure(block, precision)
    ctx = J.ctx
    d, l = J.spectral_radius, J.multiplicity
    _, averaged, _, _ = limit_operators(block, J)

    S_num = S.to_numeric(ctx)
    limit = averaged * S_num
    running = ctx.matrix(block.dim, 1)
    ns, deviations = [], []
    for n, vector in _exact_orbit(block, S, range(1, N_max + 1), digit_budget):
        running += vector.to_numeric(ctx) / (ctx.mpf(n) ** (l - 1) * d ** n)
        ns.append(n)
        deviations.append(numeric.vector_max_norm(ctx, running / n - limit))

    scale = max(ctx.one, numeric.vector_max_norm(ctx, S_num))
    floor = float(numeric.tiny(ctx, 0.75) * scale)
    rate = numeric.rate_constant(ns, deviations, fit_window, numeric.log_n_over_n, slack, floor)

    kernel_dim = block.dim - numeric.numeric_rank(ctx, averaged, numeric.tiny(ctx, 0.25))
    kernel = numeric.null_space(ctx, averaged, kernel_dim)
    kernel_deviation = _kernel_gap(ctx, block.to_numeric(ctx), kernel, d, l, N_max,
                                   J.theta_group.order or 1)

    eigen_residual = numeric.vector_max_norm(ctx, block.to_numeric(ctx) * limit - d * limit)
    logger.info('Cesaro limit in degree %d: |limit|=%s, kernel deviation %s', s,
                ctx.nstr(numeric.vector_max_norm(ctx, limit), 10), ctx.nstr(kernel_deviation, 5))
    return CesaroReport(s=s, limit=limit, n_values=ns, deviations=deviations, rate=rate,
                        kernel_deviation=kernel_deviation, eigen_residual=eigen_residual, degree=d,
                        multiplicity=l)


def degree_chain_check(action, profile=None, tolerance=1e-9, precision=128):
    """Inequalities d_m / d_{k-s+m} > 1 behind the relative-degree induction, for s = m..k-1."""
    profile = profile or dynamical_degrees(action, precision)
    d = profile.degrees
    k = len(d) - 1
    tail = d[1:]
    for i in range(len(tail)):
        for j in range(i + 1, len(tail)):
            if abs(tail[i] - tail[j]) <= tolerance * max(tail[i], tail[j]):
                return DegreeChainReport(applicable=False,
                                         reason=f'NotApplicable: d_{i + 1} and d_{j + 1} coincide')
    m = max(range(1, k + 1), key=lambda p: d[p])
    increasing = all(d[p - 1] < d[p] for p in range(1, m + 1))
    decreasing = all(d[p] > d[p + 1] for p in range(m, k))
    ratios, bounds = {}, {}
    for s in range(m, k):
        ratio = d[m] / d[k - s + m]
        ratios[s] = ratio
        bounds[s] = ratio ** (1.0 / (k - s))
    holds = increasing and decreasing and all(r > 1 for r in ratios.values())
    return DegreeChainReport(applicable=True, m=m, ratios=ratios, inverse_lower_bounds=bounds,
                             chain_holds=holds)


def entropy_symmetry(action, precision=128, threads=1):
    """(entropy of f, entropy of f^-1)."""
    forward = dynamical_degrees(action, precision, threads=threads)
    backward = dynamical_degrees(inverse_action(action), precision, threads=threads)
    return forward.entropy, backward.entropy


def duality_check(action, profile, precision=128):
    """Spectral radius of f_* on H^{k-p,k-p} for every p, to compare with d_p."""
    if not action.pushforward_blocks:
        return None
    k = action.k
    return [eigen_structure(action.pushforward_blocks[k - p], precision).spectral_radius for p in range(k + 1)]
