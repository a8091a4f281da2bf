"""Mixing of Haar measure under torus automorphisms, by exact character coincidences and grid sums.

A torus C^k / Z[i]^k is the real torus R^2k / Z^2k in the coordinates
(Re z, Im z); f(z) = Az acts there by R = [[P, -Q], [Q, P]] for A = P + iQ,
and e_m o f = e_(R^T m) on characters.
"""
import logging
import math
import warnings

import numpy as np
import sympy

from kahler_dynamics.dynamics.cohomology_models import torus_automorphism
from kahler_dynamics.errors import AliasWarning, ConfigValidationError, ZeroFrequency
from kahler_dynamics.models.correlation import CoincidenceSearch, CorrelationReport, ErgodicReport, TrigPolynomial

logger = logging.getLogger(__name__)


def real_lattice_matrix(T):
    """Integer 2k x 2k matrix R of f on R^2k / Z^2k."""
    k = T.k
    R = np.zeros((2 * k, 2 * k), dtype=object)
    for i, row in enumerate(T.A.rows()):
        for j, value in enumerate(row):
            re_part, im_part = (int(part) for part in sympy.expand(value).as_real_imag())
            R[i, j] = R[k + i, k + j] = re_part
            R[i, k + j] = -im_part
            R[k + i, j] = im_part
    return R


def frequency_matrix(T):
    """B = R^T: the action of f on character frequencies."""
    return real_lattice_matrix(T).T


def is_hyperbolic(T, tolerance=1e-9):
    R = real_lattice_matrix(T).astype(float)
    return bool(np.all(np.abs(np.abs(np.linalg.eigvals(R)) - 1) > tolerance))


def _check_frequency(m, dimension, name):
    m = tuple(int(v) for v in m)
    if len(m) != dimension:
        raise ConfigValidationError(f'{name} must have {dimension} integer entries', field=f'options.{name}')
    if not any(m):
        raise ZeroFrequency(f'{name} is the zero frequency: the character is constant')
    return m


def _max_abs(vector):
    return max(abs(int(v)) for v in vector)


def _expansion_certificate(B, conditioning=1e-8):
    """(eigenvalues, V^-1, sigma_min(V)) of a diagonalizable B, or None.

    With B = V diag(w) V^-1 and y = V^-1 m, ||B^n m||_2 >= sigma_min(V) max_{|w_i|>1} |y_i| |w_i|^n,
    a lower bound that increases with n.
    """
    w, V = np.linalg.eig(np.array(B, dtype=float))
    sigma = np.linalg.svd(V, compute_uv=False).min()
    if sigma < conditioning:
        return None
    return w, np.linalg.inv(V), sigma


def coincidence_search(B, m, m_prime, n_max, escape_window=8, hyperbolic=True):
    """Every n <= n_max with B^n m = -m', exactly.

    For hyperbolic B the search stops at the first n where the expansion bound
    on ||B^n m||_2 exceeds ||m'||_2: no coincidence can happen from there on.
    When B is too far from diagonalizable for that bound, it falls back to
    stopping after ``escape_window`` consecutive steps of growth past ||m'||,
    and the search is reported as not certified.
    """
    target = tuple(-int(v) for v in m_prime)
    bound = _max_abs(m_prime)
    vector = np.array(m, dtype=object)
    certificate = _expansion_certificate(B) if hyperbolic else None
    if certificate is not None:
        w, V_inv, sigma = certificate
        y = np.abs(V_inv @ np.array(m, dtype=float))
        unstable = np.abs(w) > 1
        target_norm = math.sqrt(sum(int(v) ** 2 for v in m_prime))
    coincidences, escaped_at, streak, previous = [], None, 0, _max_abs(vector)
    for n in range(1, n_max + 1):
        vector = B.dot(vector)
        if tuple(int(v) for v in vector) == target:
            coincidences.append(n)
        if certificate is not None:
            lower = sigma * float(np.max(y[unstable] * np.abs(w[unstable]) ** n, initial=0.0))
            if lower > target_norm * (1 + 1e-6) + 1e-9:
                escaped_at = n
                break
            continue
        size = _max_abs(vector)
        streak = streak + 1 if size > bound and size > previous else 0
        previous = size
        if hyperbolic and streak >= escape_window:
            escaped_at = n - escape_window + 1
            break
    logger.debug('coincidences of %s against %s: %s (escaped at %s)', m, m_prime, coincidences, escaped_at)
    return CoincidenceSearch(frequency=tuple(m), target=tuple(m_prime), coincidences=coincidences,
                             escaped_at=escaped_at, hyperbolic=hyperbolic, certified=certificate is not None)


def haar_character_correlation(T, m, m_prime, n_range, escape_window=8):
    """C_n = 1 when (R^T)^n m = -m', else 0."""
    B = frequency_matrix(T)
    m = _check_frequency(m, 2 * T.k, 'm')
    m_prime = _check_frequency(m_prime, 2 * T.k, 'm_prime')
    ns = sorted(set(int(n) for n in n_range))
    full = coincidence_search(B, m, m_prime, max(ns), hyperbolic=False)
    hits = set(full.coincidences)
    values = [1 if n in hits else 0 for n in ns]
    last = coincidence_search(B, m, m_prime, max(ns), escape_window, is_hyperbolic(T)).last_coincidence
    decay = all(value == 0 for n, value in zip(ns, values) if last is None or n > last)
    return CorrelationReport(pairs=[(f'e{list(m)}', f'e{list(m_prime)}')], n_values=ns, values=values,
                             decay_flag=decay, mode='exact', last_coincidence=last, norm_bound=1.0)


def mixing_grid_size(k, axis_cap=2 ** 10, point_budget=2 ** 22):
    """Largest power of two <= axis_cap with size^(2k) <= point_budget."""
    size = axis_cap
    while size > 1 and size ** (2 * k) > point_budget:
        size //= 2
    return size


def _power_norms(B, count):
    """||B^n||_inf for n = 0..count."""
    power = np.identity(B.shape[0], dtype=object)
    norms = [1]
    for _ in range(count):
        power = B.dot(power)
        norms.append(max(sum(abs(int(e)) for e in row) for row in power))
    return norms


def _exact_correlation(B, phi, psi, n, modulus=None):
    """sum a_m b_m' over nonzero frequencies with B^n m + m' = 0 (mod modulus)."""
    power = np.identity(B.shape[0], dtype=object)
    for _ in range(n):
        power = B.dot(power)
    total = sympy.Integer(0)
    targets = {}
    for frequency, coefficient in psi.nonconstant().items():
        key = tuple(-v % modulus if modulus else -v for v in frequency)
        targets[key] = targets.get(key, 0) + coefficient
    for frequency, coefficient in phi.nonconstant().items():
        image = power.dot(np.array(frequency, dtype=object))
        key = tuple(int(v) % modulus if modulus else int(v) for v in image)
        if key in targets:
            total += coefficient * targets[key]
    return total


def _l2_norm(polynomial):
    return math.sqrt(sum(abs(complex(c)) ** 2 for c in polynomial.nonconstant().values()))


def _grid_orbit(R, axis_points, dimension):
    axes = np.meshgrid(*[np.arange(axis_points, dtype=np.int64)] * dimension, indexing='ij')
    indices = np.stack([axis.ravel() for axis in axes], axis=1)
    step = np.array(R, dtype=np.int64)
    while True:
        indices = (indices @ step.T) % axis_points
        yield indices


def grid_correlation(T, phi, psi, n_range, axis_points=None, tolerance=1e-9, n0=None):
    """C_n = <(phi o f^n) psi>_grid - <phi><psi>.

    Both input kinds give the average over the same grid of axis_points^2k
    points. For trigonometric polynomials that average is taken exactly: on
    the grid a product of characters e_(B^n m) e_m' averages to 1 when
    B^n m + m' = 0 mod axis_points and to 0 otherwise, so no sample is
    drawn. n is truncated where f^n would alias frequencies past the Nyquist
    limit. Sampled arrays are pulled back along the grid orbit of f and
    averaged in float64.
    """
    dimension = 2 * T.k
    axis_points = axis_points or mixing_grid_size(T.k)
    ns = sorted(set(int(n) for n in n_range))
    B = frequency_matrix(T)

    if isinstance(phi, TrigPolynomial) and isinstance(psi, TrigPolynomial):
        if phi.dimension != dimension or psi.dimension != dimension:
            raise ConfigValidationError(f'test functions must live on the {dimension}-torus', field='options.phi')
        norms = _power_norms(B, max(ns))
        safe = [n for n in ns if phi.max_frequency * norms[n] + psi.max_frequency < axis_points / 2]
        alias_limit = safe[-1] if safe else None
        if len(safe) < len(ns):
            warnings.warn(f'f^n aliases frequencies beyond n={alias_limit} on a grid of {axis_points} points; '
                          'n_range truncated', AliasWarning, stacklevel=2)
            ns = safe
        values = [_exact_correlation(B, phi, psi, n, modulus=axis_points) for n in ns]
        last = _last_coincidence(T, phi, psi, max(ns) if ns else 0)
        decay = all(value == 0 for n, value in zip(ns, values) if last is None or n > last)
        return CorrelationReport(pairs=[(phi.label, psi.label)], n_values=ns, values=values, decay_flag=decay,
                                 mode='grid', last_coincidence=last, alias_limit=alias_limit,
                                 norm_bound=_l2_norm(phi) * _l2_norm(psi), axis_points=axis_points)

    phi, psi = np.asarray(phi), np.asarray(psi)
    if phi.shape != (axis_points,) * dimension or psi.shape != phi.shape:
        raise ConfigValidationError(f'sampled test functions must have shape {(axis_points,) * dimension}',
                                    field='options.phi')
    R = real_lattice_matrix(T)
    flat_phi, flat_psi = phi.ravel(), psi.ravel()
    baseline = flat_phi.mean() * flat_psi.mean()
    values, orbit = [], _grid_orbit(R, axis_points, dimension)
    current, indices = 0, None
    for n in ns:
        while current < n:
            indices = next(orbit)
            current += 1
        image = np.ravel_multi_index(tuple(indices.T), phi.shape)
        value = (flat_phi[image] * flat_psi).mean() - baseline
        values.append(float(value.real) if abs(value.imag) <= tolerance else complex(value))
    n0 = n0 if n0 is not None else ns[len(ns) // 2]
    decay = all(abs(value) <= tolerance for n, value in zip(ns, values) if n > n0)
    bound = float(np.sqrt(np.mean(np.abs(flat_phi) ** 2) * np.mean(np.abs(flat_psi) ** 2)))
    return CorrelationReport(pairs=[('phi', 'psi')], n_values=ns, values=values, decay_flag=decay, mode='grid',
                             norm_bound=bound, axis_points=axis_points)


def _last_coincidence(T, phi, psi, n_max, escape_window=8):
    B, hyperbolic = frequency_matrix(T), is_hyperbolic(T)
    last = None
    for m in phi.nonconstant():
        for m_prime in psi.nonconstant():
            search = coincidence_search(B, m, m_prime, n_max, escape_window, hyperbolic)
            if search.last_coincidence is not None:
                last = max(last or 0, search.last_coincidence)
    return last


def exact_correlations(T, phi, psi, n_range):
    """Haar correlations of two trigonometric polynomials, with no grid involved."""
    B = frequency_matrix(T)
    ns = sorted(set(int(n) for n in n_range))
    values = [_exact_correlation(B, phi, psi, n) for n in ns]
    last = _last_coincidence(T, phi, psi, max(ns))
    decay = all(value == 0 for n, value in zip(ns, values) if last is None or n > last)
    return CorrelationReport(pairs=[(phi.label, psi.label)], n_values=ns, values=values, decay_flag=decay,
                             mode='exact', last_coincidence=last, norm_bound=_l2_norm(phi) * _l2_norm(psi))


def correlation_symmetry(T, phi, psi, n_range):
    """C_n(phi, psi) for f against C_n(psi, phi) for f^-1."""
    inverse = torus_automorphism(T.A.inverse())
    forward = exact_correlations(T, phi, psi, n_range)
    backward = exact_correlations(inverse, psi, phi, n_range)
    return forward.values == backward.values


def ergodic_average_check(T, phi, n_range, test=None):
    """A_N = (1/N) sum_{j=1..N} <(phi o f^j) psi> for zero-mean phi, exactly.

    ``test`` defaults to the complex conjugate of phi.
    """
    if phi.mean != 0:
        raise ConfigValidationError('phi must have zero mean', field='options.phi')
    if test is None:
        test = TrigPolynomial(phi.dimension, {tuple(-v for v in f): sympy.conjugate(c)
                                              for f, c in phi.terms.items()}, f'conj {phi.label}')
    B = frequency_matrix(T)
    Ns = sorted(set(int(n) for n in n_range))
    total, current, averages, partials = sympy.Integer(0), 0, [], []
    for N in Ns:
        for j in range(current + 1, N + 1):
            total += _exact_correlation(B, phi, test, j)
        current = N
        averages.append(total / N)
        partials.append(total)
    constant = max((abs(a) * N for a, N in zip(averages, Ns)), default=sympy.Integer(0))
    # N A_N is eventually constant once the finitely many coincidences are used up
    converges = not partials or partials[-1] == partials[len(partials) // 2]
    return ErgodicReport(N_values=Ns, averages=averages, constant=constant, converges=converges)


def hausdorff_dimension_bound(exponents, k, m):
    """alpha_1 + ... + alpha_(k-m): mu gives no mass to sets of smaller Hausdorff dimension."""
    if len(exponents) < k - m:
        raise ConfigValidationError(f'need {k - m} Holder exponents, got {len(exponents)}', field='options.exponents')
    return sum(sorted(exponents)[:k - m]) if k > m else 0.0
