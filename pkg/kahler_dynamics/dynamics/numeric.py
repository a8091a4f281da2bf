"""High-precision numeric helpers shared by the dynamics modules.

Every computation owns its own ``MPContext`` so that concurrent calls at
different precisions never share mpmath state.
"""
import logging
import math

import numpy as np
from mpmath.ctx_mp import MPContext
from mpmath.libmp import prec_to_dps

logger = logging.getLogger(__name__)


def context(bits):
    ctx = MPContext()
    ctx.prec = int(bits)
    return ctx


def decimal_digits(bits):
    return prec_to_dps(int(bits))


def tiny(ctx, fraction=0.5):
    """A noise floor well below the working precision."""
    return ctx.ldexp(1, -int(ctx.prec * fraction))


def identity(ctx, n):
    return ctx.eye(n)


def max_norm(ctx, matrix):
    """Operator norm induced by the max-norm: largest absolute row sum."""
    best = ctx.zero
    for i in range(matrix.rows):
        total = ctx.fsum(abs(matrix[i, j]) for j in range(matrix.cols))
        if total > best:
            best = total
    return best


def vector_max_norm(ctx, vector):
    if vector.rows == 0:
        return ctx.zero
    return max(abs(vector[i, j]) for i in range(vector.rows) for j in range(vector.cols))


def is_real(ctx, matrix, tolerance=None):
    tolerance = tolerance if tolerance is not None else tiny(ctx)
    return all(abs(ctx.im(matrix[i, j])) <= tolerance
               for i in range(matrix.rows) for j in range(matrix.cols))


def singular_decomposition(ctx, matrix):
    """Return (U, singular values descending, V rows) with A = U diag(S) V."""
    U, S, V = ctx.svd_c(matrix.apply(ctx.mpc), full_matrices=True)
    values = [S[i] for i in range(S.rows)]
    order = sorted(range(len(values)), key=lambda i: -values[i])
    U_sorted = ctx.matrix(U.rows, U.cols)
    V_sorted = ctx.matrix(V.rows, V.cols)
    for new, old in enumerate(order):
        for r in range(U.rows):
            U_sorted[r, new] = U[r, old]
        for c in range(V.cols):
            V_sorted[new, c] = V[old, c]
    # singular values beyond min(rows, cols) are implicitly zero
    for new in range(len(order), U.cols):
        for r in range(U.rows):
            U_sorted[r, new] = U[r, new]
    for new in range(len(order), V.rows):
        for c in range(V.cols):
            V_sorted[new, c] = V[new, c]
    return U_sorted, [values[i] for i in order], V_sorted


def null_space(ctx, matrix, dimension):
    """Orthonormal basis (as columns) of the ``dimension`` smallest right singular directions."""
    n = matrix.cols
    basis = ctx.matrix(n, dimension)
    if dimension == 0:
        return basis
    _, _, V = singular_decomposition(ctx, matrix)
    for k in range(dimension):
        row = n - dimension + k
        for i in range(n):
            basis[i, k] = ctx.conj(V[row, i])
    return basis


def numeric_rank(ctx, matrix, tolerance):
    _, values, _ = singular_decomposition(ctx, matrix)
    if not values:
        return 0
    scale = max(values[0], ctx.one)
    return sum(1 for value in values if value > tolerance * scale)


def range_basis(ctx, matrix, tolerance):
    """Orthonormal basis (as columns) of the column space."""
    U, values, _ = singular_decomposition(ctx, matrix)
    scale = max(values[0], ctx.one) if values else ctx.one
    rank = sum(1 for value in values if value > tolerance * scale)
    basis = ctx.matrix(matrix.rows, rank)
    for k in range(rank):
        for i in range(matrix.rows):
            basis[i, k] = U[i, k]
    return basis


def column(ctx, matrix, j):
    out = ctx.matrix(matrix.rows, 1)
    for i in range(matrix.rows):
        out[i, 0] = matrix[i, j]
    return out


def to_complex_array(ctx, matrix):
    return np.array([[complex(matrix[i, j]) for j in range(matrix.cols)]
                     for i in range(matrix.rows)], dtype=np.complex128)


def rate_constant(ns, deviations, fit_window, scale, slack=1.25, floor=0.0):
    """Fit C = slack * max dev_n / scale(n) on the fit window, validate beyond it.

    ``scale`` is the decay profile (1/n or log(n)/n). Deviations at or below
    ``floor`` are treated as converged to working precision.
    """
    lo, hi = fit_window
    fit = [float(dev) / scale(n) for n, dev in zip(ns, deviations) if lo <= n <= hi]
    if not fit:
        raise ValueError(f'no sequence indices inside fit window {fit_window}')
    constant = slack * max(fit)
    failures = [n for n, dev in zip(ns, deviations)
                if n > hi and float(dev) > constant * scale(n) + floor]
    return {
        'constant': constant,
        'fit_window': [lo, hi],
        'validated_through': max(ns),
        'validated': not failures,
        'failures': failures,
    }


def one_over_n(n):
    return 1.0 / n


def log_n_over_n(n):
    return math.log(n) / n


def log_log_slope(ns, deviations, floor=0.0):
    """Least-squares slope of log(dev) against log(n), ignoring converged entries."""
    points = [(math.log(n), math.log(float(dev))) for n, dev in zip(ns, deviations)
              if float(dev) > floor and n > 0]
    if len(points) < 3:
        return None
    x, y = np.array(points).T
    return float(np.polyfit(x, y, 1)[0])


def classify_decay(ns, deviations, floor=0.0):
    """Return ('exact' | 'geometric' | 'algebraic', log-log slope, geometric ratio)."""
    points = [(n, float(dev)) for n, dev in zip(ns, deviations) if float(dev) > floor]
    if len(points) < 3:
        return 'exact', None, None
    n_arr = np.array([n for n, _ in points], dtype=float)
    log_dev = np.log(np.array([dev for _, dev in points]))
    loglog = np.polyfit(np.log(n_arr), log_dev, 1, full=True)
    semilog = np.polyfit(n_arr, log_dev, 1, full=True)
    loglog_residual = float(loglog[1][0]) if len(loglog[1]) else 0.0
    semilog_residual = float(semilog[1][0]) if len(semilog[1]) else 0.0
    slope = float(loglog[0][0])
    ratio = float(np.exp(semilog[0][0]))
    kind = 'geometric' if semilog_residual < loglog_residual and ratio < 1 else 'algebraic'
    return kind, slope, ratio
