"""Dispatch a resolved ``RunConfig`` to the dynamics modules and write its artifacts."""
import logging
import warnings

from flask import current_app, has_app_context

from kahler_dynamics import db
from kahler_dynamics.dynamics import degrees, equilibrium, green_iteration, jordan_core
from kahler_dynamics.dynamics.cohomology_models import (inverse_action, mazur_action, mazur_involutions, raw_action,
                                                        torus_action, torus_automorphism)
from kahler_dynamics.errors import ConfigValidationError, DynamicsError
from kahler_dynamics.models.cohomology import ModelTag
from kahler_dynamics.models.correlation import TrigPolynomial
from kahler_dynamics.models.matrix import ExactMatrix
from kahler_dynamics.models.run import RunRecord
from kahler_dynamics.utils.serialize import numeric_format, to_jsonable, write_csv, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 2


def _setting(name, default):
    return current_app.config.get(name, default) if has_app_context() else default


# Models

def torus_model(config):
    if not config.model or config.model['type'] != 'torus':
        raise ConfigValidationError(f'command {config.command} needs a torus model', field='model.type')
    return torus_automorphism(ExactMatrix.from_rows(config.model['parameters']['A']))


def build_action(config):
    model = config.model
    if model is None:
        raise ConfigValidationError(f'command {config.command} needs a model section', field='model')
    parameters = model['parameters']
    if model['type'] == 'torus':
        return torus_action(torus_model(config))
    if model['type'] == 'mazur':
        return mazur_action(mazur_involutions(parameters['k']), parameters['word'])
    cup = {tuple(int(v) for v in key.split(',')): matrix for key, matrix in (parameters.get('cup') or {}).items()}
    return raw_action(parameters['blocks'], parameters.get('kahler_class'), cup or None,
                      parameters.get('pushforward'))


def _n_range(config):
    return range(config.options.get('n_min', 1), config.n_max + 1)


# Handlers: each returns (payload, csv rows)

def run_degrees(config):
    action = build_action(config)
    tol = config.tolerances
    profile = degrees.dynamical_degrees(action, config.precision_bits, tol['tie_bits'], tol['plateau'],
                                        threads=_setting('THREADS', 1))
    payload = {
        'k': action.k,
        'model': action.model_tag,
        'sublattice': action.sublattice,
        'degrees': profile.degrees,
        'multiplicities': profile.multiplicities,
        'entropy': profile.entropy,
        'plateau': list(profile.plateau),
        'concavity': degrees.check_concavity(profile, tol['concavity_bits']),
        'pushforward_radii': degrees.duality_check(action, profile, config.precision_bits),
    }
    if 'p' in config.options:
        payload['sequence'] = degrees.degree_sequence(action, config.options['p'], _n_range(config),
                                                      J=profile.jordan[config.options['p']] if config.options['p'] <= action.k else None,
                                                      digit_budget=tol['digit_budget'])
    if config.options.get('inverse'):
        _, backward = degrees.entropy_symmetry(action, config.precision_bits, _setting('THREADS', 1))
        payload['inverse_entropy'] = backward
    rows = [{'p': p, 'degree': d, 'multiplicity': l}
            for p, (d, l) in enumerate(zip(profile.degrees, profile.multiplicities))]
    return payload, rows


def _jordan_payload(J):
    return {
        'dim': J.dim,
        'spectral_radius': J.spectral_radius,
        'multiplicity': J.multiplicity,
        'nu': J.nu,
        'theta': J.theta,
        'theta_group': J.theta_group,
        'dominant_indices': J.dominant_indices,
        'blocks': [{'eigenvalue': b.eigenvalue, 'size': b.size, 'modulus': b.modulus, 'angle': b.angle,
                    'angle_fraction': b.angle_fraction} for b in J.blocks],
        'factors': [{'coefficients': f.coefficients, 'multiplicity': f.multiplicity,
                     'block_sizes': f.block_sizes} for f in J.factors],
    }


def run_jordan(config):
    options = config.options
    if 'matrix' in options:
        M = ExactMatrix.from_rows(options['matrix'])
    else:
        M = build_action(config).blocks[options.get('p', 1)]
    tol = config.tolerances
    J = jordan_core.eigen_structure(M, config.precision_bits, tol['tie_bits'])
    operators = jordan_core.lambda_infinity(M, J, n_max=config.n_max, fit_window=tol['fit_window'],
                                            slack=tol['rate_slack'], plain=options.get('plain', False))
    asymptotics = jordan_core.power_asymptotics(M, J, _n_range(config), tol['digit_budget'])
    payload = {'jordan': _jordan_payload(J), 'lambda_infinity': operators, 'asymptotics': asymptotics}
    if 'cone' in options:
        payload['perron_frobenius'] = jordan_core.perron_frobenius_check(M, options['cone'], J,
                                                                         config.precision_bits, tol['cone'])
    rows = [{'n': n, 'normalized_norm': norm, 'deviation': dev}
            for n, norm, dev in zip(asymptotics.n_values, asymptotics.normalized_norms, asymptotics.deviations)]
    return payload, rows


def run_relative(config):
    action = build_action(config)
    options = config.options
    s = options.get('s', 1)
    profile = degrees.relative_degrees(action, options.get('T_class', 'dominant'), s, options.get('lambda_T'),
                                       config.precision_bits, config.tolerances['eigen'])
    payload = {'relative': profile}
    if 'p1' in options and 'p2' in options:
        payload['submultiplicativity'] = degrees.submultiplicativity_check(profile, options['p1'], options['p2'],
                                                                           config.tolerances['eigen'])
    if 'p' in options:
        ns, values, roots = degrees.relative_degree_sequence(action, profile.T_class, s, profile.lambda_T,
                                                             options['p'], _n_range(config), config.precision_bits)
        payload['sequence'] = {'p': options['p'], 'n_values': ns, 'values': values, 'roots': roots}
    rows = [{'p': p, 'relative_degree': value, 'multiplicity': l, 'quotient_dimension': q}
            for p, (value, l, q) in enumerate(zip(profile.relative_degrees, profile.relative_multiplicities,
                                                  profile.quotient_dimensions), start=1)]
    return payload, rows


def run_cesaro(config):
    action = build_action(config)
    s = config.options.get('s', 1)
    S_class = config.options.get('S_class') or action.kahler(s, 'options.S_class')
    tol = config.tolerances
    report = degrees.cesaro_class_limit(action, S_class, s, config.N_max, config.precision_bits, tol['fit_window'],
                                        tol['rate_slack'], tol['eigen'], tol['digit_budget'])
    rows = [{'N': N, 'deviation': dev} for N, dev in zip(report.n_values, report.deviations)]
    return {'cesaro': report}, rows


def run_chain(config):
    action = build_action(config)
    report = degrees.degree_chain_check(action, tolerance=config.tolerances['eigen'],
                                        precision=config.precision_bits)
    inverse = degrees.degree_chain_check(inverse_action(action), tolerance=config.tolerances['eigen'],
                                         precision=config.precision_bits)
    rows = [{'s': s, 'ratio': ratio, 'inverse_lower_bound': report.inverse_lower_bounds[s]}
            for s, ratio in sorted(report.ratios.items())]
    return {'chain': report, 'inverse_chain': inverse}, rows


def run_green(config):
    action = build_action(config)
    tol, grid = config.tolerances, config.grid
    payload = {'recurrence': green_iteration.recurrence_machinery(action, config.options.get('nu', 1),
                                                                   config.precision_bits)}
    rows = [{'j': j, 'coefficient': a} for j, a in enumerate(payload['recurrence'].coefficients)]
    if action.model_tag is ModelTag.TORUS:
        limit = green_iteration.green_limit_torus(torus_model(config), config.N_max, config.precision_bits,
                                                  tol['fit_window'], tol['rate_slack'], grid['samples'],
                                                  grid['angle_tolerance'], grid['search_limit'], tol['eigen'])
        payload['green'] = limit
        if limit.samples:
            rows = [{'n': sample['n'], 'target': sample['target'], 'deviation': sample['deviation']}
                    for sample in limit.samples]
    return payload, rows


def run_iterate(config):
    options = config.options
    for key in ('G', 'Lambda', 'u'):
        if key not in options:
            raise ConfigValidationError(f'iterations need options.{key}', field=f'options.{key}')
    dimension = len(options['G'])
    axis_points = config.grid['axis_points'] or \
        _setting('GRID_POINTS_1D' if dimension == 1 else 'GRID_POINTS_2D', 2 ** 14 if dimension == 1 else 2 ** 7)
    setup = green_iteration.iteration_setup(options['G'], ExactMatrix.from_rows(options['Lambda']), options['u'],
                                            options.get('nu', 1.0), axis_points, options.get('power'),
                                            config.precision_bits)
    tol = config.tolerances
    result = green_iteration.holder_iteration(setup, config.n_max, config.N_max, tol['fit_window'], tol['rate_slack'])
    estimate = green_iteration.holder_exponent_estimate(
        green_iteration.grid_function(setup, result.v), options.get('scales'), setup.nu, setup.spectral_radius,
        setup.lipschitz, dimension=setup.dimension)
    payload = {
        'setup': {'dimension': setup.dimension, 'axis_points': axis_points, 'power': setup.power,
                  'lambda': setup.spectral_radius, 'lipschitz': setup.lipschitz, 'nu': setup.nu,
                  'multiplicity': setup.jordan.multiplicity},
        'rate': result.rate,
        'cesaro_rate': result.cesaro_rate,
        'twisted_deviations': result.twisted_deviations,
        'cesaro_deviations': result.cesaro_deviations,
        'twist_consistent': result.twist_consistent,
        'series_terms': result.series_terms,
        'holder': estimate,
        'holder_within_bound': estimate.within_bound,
    }
    rows = []
    for point, v_value, w_value in zip(setup.indices, result.v, result.w):
        row = {f'x{a}': int(point[a]) / axis_points for a in range(setup.dimension)}
        row.update({f'v{c}': v_value[c] for c in range(len(v_value))})
        row.update({f'w{c}': w_value[c] for c in range(len(w_value))})
        rows.append(row)
    return payload, rows


def _polynomial(terms, dimension, label):
    polynomial = TrigPolynomial(dimension, label=label)
    for term in terms:
        if len(term['frequency']) != dimension:
            raise ConfigValidationError(f'{label} frequencies need {dimension} entries', field=f'options.{label}')
        part = TrigPolynomial.cosine(term['frequency'], term['amplitude']) if term['kind'] == 'cos' \
            else TrigPolynomial.character(term['frequency'], term['amplitude'])
        polynomial = polynomial + part
    polynomial.label = label
    return polynomial


def run_mixing(config):
    T = torus_model(config)
    options = config.options
    ns = list(_n_range(config))
    axis_points = config.grid['axis_points'] or equilibrium.mixing_grid_size(
        T.k, _setting('MIXING_GRID_AXIS', 2 ** 10), _setting('MIXING_POINT_BUDGET', 2 ** 22))
    payload = {'hyperbolic': equilibrium.is_hyperbolic(T), 'axis_points': axis_points}
    report = None
    if 'm' in options or 'm_prime' in options:
        report = equilibrium.haar_character_correlation(T, options.get('m', []), options.get('m_prime', []), ns)
        grid = equilibrium.grid_correlation(T, TrigPolynomial.character(options['m']),
                                            TrigPolynomial.character(options['m_prime']), ns, axis_points)
        payload['characters'] = report
        payload['grid'] = grid
        payload['grid_agrees'] = grid.values == report.values[:len(grid.values)]
    if 'phi' in options:
        phi = _polynomial(options['phi'], 2 * T.k, 'phi')
        psi = _polynomial(options.get('psi', options['phi']), 2 * T.k, 'psi')
        report = equilibrium.exact_correlations(T, phi, psi, ns)
        grid = equilibrium.grid_correlation(T, phi, psi, ns, axis_points)
        payload['correlations'] = report
        payload['grid'] = grid
        payload['grid_agrees'] = grid.values == report.values[:len(grid.values)]
        payload['symmetric'] = equilibrium.correlation_symmetry(T, phi, psi, ns)
        if phi.mean == 0:
            payload['ergodic'] = equilibrium.ergodic_average_check(T, phi, ns)
    if 'exponents' in options:
        profile = degrees.dynamical_degrees(torus_action(T), config.precision_bits)
        payload['dimension_bound'] = equilibrium.hausdorff_dimension_bound(options['exponents'], T.k,
                                                                           profile.plateau[0])
    if report is None and 'dimension_bound' not in payload:
        raise ConfigValidationError('mixing needs m and m_prime, phi, or exponents', field='options')
    rows = [{'n': n, 'correlation': value} for n, value in zip(report.n_values, report.values)] if report else []
    return payload, rows


HANDLERS = {
    'degrees': run_degrees,
    'jordan': run_jordan,
    'relative': run_relative,
    'cesaro': run_cesaro,
    'chain': run_chain,
    'green': run_green,
    'iterate': run_iterate,
    'mixing': run_mixing,
}


# Entry point

def _start_record(config):
    if not has_app_context():
        return None
    record = RunRecord(command=config.command, config_digest=config.digest(), output_path=config.output['path'],
                       format=config.output['format'])
    db.session.add(record)
    db.session.commit()
    return record


def _finish_record(record, error_code=None):
    if record is None:
        return
    record.finish(error_code)
    db.session.commit()


def execute(config):
    """Run the handler and return the artifact payload and CSV rows, raising DynamicsError on failure."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always')
        payload, rows = HANDLERS[config.command](config)
    for warning in caught:
        logger.warning('%s: %s', warning.category.__name__, warning.message)
    digits = numeric_format(config.precision_bits)['decimal_digits']
    document = {
        'command': config.command,
        'config': config.to_dict(),
        'numeric_format': numeric_format(config.precision_bits),
        'result': to_jsonable(payload, digits),
        'warnings': [{'category': w.category.__name__, 'message': str(w.message)} for w in caught],
    }
    return document, rows


def run(config):
    """Execute one configured command; exit status 0 on success, 2 with an error record otherwise."""
    record = _start_record(config)
    path, fmt = config.output['path'], config.output['format']
    try:
        document, rows = execute(config)
    except DynamicsError as e:
        logger.error('%s failed: %s (%s)', config.command, e.message, e.code)
        write_json(path, e.to_record())
        _finish_record(record, e.code)
        return EXIT_FAILED
    if fmt == 'csv':
        write_csv(path, rows, document['numeric_format']['decimal_digits'])
        if path:
            write_json(f'{path}.config.json', {key: document[key] for key in ('command', 'config', 'numeric_format')})
    else:
        write_json(path, document)
    _finish_record(record)
    logger.info('%s finished, artifact %s', config.command, path or '<stdout>')
    return EXIT_OK
