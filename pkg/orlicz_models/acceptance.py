"""
The verify-all suite. Every check reproduces one numeric statement about the model classes and returns
ReportEntry records whose anchor names that statement.
"""
import logging
import math

import numpy as np

from .app import config
from .arcs import ArcVerdict, cumulant, exp_connected, mix_connected
from .closure import closure_step
from .counterexamples import (DIRECTIONS, co419_density, co419_q, divergenza_density, divergenza_kl_series,
                              divergenza_kl_truncated, divergenza_moment, divergenza_moment_verdict)
from .divergence import finitediv_equivalence, kl_divergence, random_variables
from .filtration import AGREEMENT_TOLERANCE, co419_agreement_check, restrict, stability_scan, sup_distance
from .forms import affine_form
from .measure_core import Density, Piece, RandomVariable, combine, constant_variable, integrate, lebesgue
from .orlicz import NormVerdict, luxemburg_norm, unit_ball_residual
from .orlicz_utilities import OrliczModelsError, Verdict
from .report import Report, ReportEntry, load_report
from .young import builtin, delta2_bound_check, fenchel_young_check

SEED = 20240601
SERIES_TERMS = 10000
SERIES_AGREEMENT = 1e-4
MOMENT_DEPTH = 20
BETAS = (0.5, 1.0, 2.0, 5.0)
NORM_TRIALS = 200
CUMULANT_TRIALS = 100
CLOSURE_NS = (10, 100, 1000)
CO419_GRID = (0.1, 0.25, 0.4, 0.5 - 2.0 ** -10, 0.5, 0.5 + 2.0 ** -10, 0.75, 0.9)


def beta_density(beta):
    return Density([Piece.beta_power(0.0, 1.0, beta, beta - 1.0)], name=f'beta(beta={beta:g})')


def pair_grid_densities():
    """ The built-in densities the pair grid is drawn from """
    return {
        'uniform': lebesgue(),
        'beta0.5': beta_density(0.5),
        'beta2': beta_density(2.0),
        'beta3': beta_density(3.0),
        'beta5': beta_density(5.0),
        'poly': Density([Piece.polynomial(0.0, 1.0, [0.8, 0.4])], name='(4+2x)/5'),
        'piecewise': Density([Piece.constant(0.0, 0.5, 1.5), Piece.constant(0.5, 1.0, 0.5)], name='steps'),
    }


def pair_grid():
    """ Ordered (p, q) pairs: four bases against every other built-in density, plus the uniform density against
    the divergenza and co419 counterexamples and against co419_q """
    densities = pair_grid_densities()
    bases = ('uniform', 'beta2', 'poly', 'piecewise')
    pairs = [(densities[a], densities[b]) for a in bases for b in densities if a != b]
    pairs.append((densities['uniform'], divergenza_density()))
    pairs.append((densities['uniform'], co419_density()))
    pairs.append((densities['uniform'], co419_q(0.25, 2.0)))
    return pairs


def _holds(flag):
    return 'Holds' if flag else 'Violated'


def _failed(check_id, anchor, error):
    """ Entry for a check that raised instead of reaching a verdict """
    logging.warning(msg=f'acceptance: {check_id} raised {type(error).__name__}: {error}')
    return ReportEntry(check_id, {}, 'Error', None, anchor, False, f'{type(error).__name__}: {error}')


#####################
# divergenza
#####################

def check_divergenza_moments():
    """ E[q^(1+eps)] is infinite for eps = 2^-j, j = 0..20, both from the piece rule n eps >= 1 and from the
    integration engine """
    rows, passed = [], True
    for j in range(MOMENT_DEPTH + 1):
        eps = 2.0 ** -j
        analytic = divergenza_moment_verdict(eps)
        engine = divergenza_moment(1.0 + eps)
        passed = passed and analytic.verdict == Verdict.DIVERGENT and engine.is_divergent
        rows.append(f'2^-{j}: piece {analytic.first_divergent_piece} engine {engine.verdict.value}')
    return [ReportEntry('divergenza.moments', {'epsilon': f'2^-j, j=0..{MOMENT_DEPTH}'},
                        'Divergent' if passed else 'Mismatch', None,
                        'divergenza: no moment of order 1+eps is finite', passed,
                        '; '.join(rows[:2] + rows[-1:]))]


def check_divergenza_kl():
    """ Both divergences between divergenza and the uniform density are finite, and the closed-form series
    agrees with engine integration of the same first N pieces """
    q, p = divergenza_density(), lebesgue()
    entries = []
    for direction in DIRECTIONS:
        series = divergenza_kl_series(direction, SERIES_TERMS)
        truncated = divergenza_kl_truncated(direction, SERIES_TERMS)
        full = kl_divergence(q, p) if direction == 'q||p' else kl_divergence(p, q)
        gap = abs(series.partial_sum - truncated.value) if truncated.is_finite else math.inf
        detail = f'series {series.partial_sum:.10g}, truncated gap {gap:.3g}, engine {full.verdict.value}'
        entries.append(ReportEntry(f'divergenza.kl[{direction}]', {'N': SERIES_TERMS, 'direction': direction},
                                   full.verdict.value, series.value_interval,
                                   'divergenza: both divergences to the uniform density are finite',
                                   full.is_finite and gap <= SERIES_AGREEMENT, detail))
    return entries


def check_divergenza_not_connected():
    report = exp_connected(lebesgue(), divergenza_density(), MOMENT_DEPTH, jensen=False)
    return [ReportEntry('divergenza.exp_connected', {'p': 'uniform', 'q': 'divergenza'}, report.verdict.value,
                        report.witness_interval, 'divergenza: finite divergence without an open exponential arc',
                        report.verdict == ArcVerdict.NOT_CONNECTED, report.evidence[-1].detail)]


#####################
# Beta family
#####################

def check_beta_family():
    uniform = lebesgue()
    entries = []
    for beta in BETAS:
        report = exp_connected(uniform, beta_density(beta), MOMENT_DEPTH, jensen=False)
        entries.append(ReportEntry(f'beta.exp_connected[{beta:g}]', {'p': 'uniform', 'beta': beta},
                                   report.verdict.value, report.witness_interval,
                                   'beta densities lie in the exponential model of the uniform density',
                                   report.verdict == ArcVerdict.CONNECTED))

    b1, b2 = 1.0, 2.0
    p, q = beta_density(b1), beta_density(b2)
    arc = exp_connected(p, q, MOMENT_DEPTH, jensen=False)
    expected = -b1 / (b2 - b1)
    lower = arc.witness_interval[0] if arc.witness_interval else math.nan
    entries.append(ReportEntry('beta.witness_endpoint', {'beta1': b1, 'beta2': b2}, arc.verdict.value,
                               arc.witness_interval, 'beta pair: the exponential arc reaches down to '
                               '-beta1/(beta2-beta1)', arc.verdict == ArcVerdict.CONNECTED and
                               abs(lower - expected) <= 1e-6, f'expected lower endpoint {expected:g}'))
    mixture = mix_connected(p, q)
    entries.append(ReportEntry('beta.mix_connected', {'beta1': b1, 'beta2': b2}, mixture.verdict.value,
                               mixture.witness_interval, 'beta pair: q/p is not bounded away from zero',
                               mixture.verdict == ArcVerdict.NOT_CONNECTED, mixture.evidence[0].detail))
    return entries


#####################
# Luxemburg norm
#####################

def _affine(u, v, wu, wv):
    name = f'{wu:g}*{u.name}+{wv:g}*{v.name}'
    return combine([u, v], lambda forms, a, b: affine_form(forms, (wu, wv), a, b), name)


def check_luxemburg_axioms():
    """ Homogeneity and the triangle inequality within three times the bisection tolerance, the norm of
    constants, and the unit-ball identity for a continuous variable """
    tol = config['NORM_TOLERANCE']
    p, phi = lebesgue(), builtin('Phi1')
    rng = np.random.default_rng(SEED)
    variables = random_variables(NORM_TRIALS, seed=SEED, polynomials=False)
    norms = [luxemburg_norm(u, p, phi).value for u in variables]
    worst_h, worst_t = 0.0, 0.0
    for i, (u, norm) in enumerate(zip(variables, norms)):
        lam = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 4.0))
        scaled = luxemburg_norm(u.scaled(lam), p, phi).value
        worst_h = max(worst_h, abs(scaled - abs(lam) * norm) / (abs(lam) * norm))
        j = (i + 1) % len(variables)
        total = luxemburg_norm(_affine(u, variables[j], 1.0, 1.0), p, phi).value
        worst_t = max(worst_t, (total - norm - norms[j]) / (norm + norms[j]))
    inputs = {'trials': NORM_TRIALS, 'seed': SEED}
    entries = [
        ReportEntry('luxemburg.homogeneity', inputs, _holds(worst_h <= 3 * tol), None,
                    'Luxemburg norm is absolutely homogeneous', worst_h <= 3 * tol,
                    f'max relative deviation {worst_h:.3g}'),
        ReportEntry('luxemburg.triangle', inputs, _holds(worst_t <= 3 * tol), None,
                    'Luxemburg norm satisfies the triangle inequality', worst_t <= 3 * tol,
                    f'max relative excess {worst_t:.3g}'),
    ]

    constants = (1.0, -2.5, 7.0)
    worst_c = max(abs(luxemburg_norm(constant_variable(c), p, phi, tol=1e-13).value - abs(c) / math.acosh(2.0))
                  for c in constants)
    entries.append(ReportEntry('luxemburg.constant', {'c': list(constants)}, _holds(worst_c <= 1e-9), None,
                               'the Phi1 norm of a constant c is |c|/arccosh(2)', worst_c <= 1e-9,
                               f'max deviation {worst_c:.3g}'))

    u = RandomVariable([Piece.polynomial(0.0, 1.0, [0.0, 1.0])], name='x')
    norm = luxemburg_norm(u, p, phi)
    residual = abs(unit_ball_residual(u, p, phi, norm)) if norm.verdict == NormVerdict.FINITE else math.inf
    entries.append(ReportEntry('luxemburg.unit_ball', {'u': 'x', 'p': 'uniform'}, _holds(residual <= 1e-6),
                               norm.bracket, 'the norm of u lies on the boundary of the unit ball',
                               residual <= 1e-6, f'|E[Phi1(u/||u||)] - 1| = {residual:.3g}'))
    return entries


#####################
# Young functions
#####################

def check_young_inequalities():
    """ Fenchel-Young on a 100 x 100 grid for both built-in pairs, and Psi2(beta y) <= max(beta^2, 1) Psi2(y) """
    xs, ys = np.linspace(-10.0, 10.0, 100), np.linspace(-20.0, 20.0, 100)
    entries = []
    for phi_name, psi_name in (('Phi1', 'Psi1'), ('Phi2', 'Psi2')):
        violation = fenchel_young_check(builtin(phi_name), builtin(psi_name), xs, ys)
        entries.append(ReportEntry(f'young.fenchel[{phi_name}]', {'grid': '100x100'}, _holds(violation <= 1e-10),
                                   None, f'|xy| <= {phi_name}(x) + {psi_name}(y)', violation <= 1e-10,
                                   f'max violation {violation:.3g}'))

    grid = np.linspace(0.0, 100.0, 10001)[1:]
    for beta in (0.5, 1.0, 3.0):
        ratio = delta2_bound_check(beta, grid)
        entries.append(ReportEntry(f'young.delta2[{beta:g}]', {'beta': beta, 'y': '(0, 100]'},
                                   _holds(ratio <= 1 + 1e-12), (0.0, ratio),
                                   'Psi2(beta y) <= max(beta^2, 1) Psi2(y)', ratio <= 1 + 1e-12,
                                   f'max ratio {ratio:.12g}'))
    return entries


#####################
# Cumulant functional
#####################

def centered_variables(count, p, seed=SEED):
    """ Non-constant random variables with E_p[u] = 0 """
    out = []
    for u in random_variables(4 * count, seed=seed, polynomials=False):
        if len({piece.form.coefficient for piece in u.pieces}) < 2:
            continue
        out.append(u.shifted(-integrate(u, p).value, f'{u.name}-mean'))
        if len(out) == count:
            break
    return out


def check_cumulant():
    p = lebesgue()
    entries = []
    k_zero = cumulant(p, constant_variable(0.0))
    entries.append(ReportEntry('cumulant.zero', {'u': '0'}, f'{k_zero.value!r}', None, 'K_p(0) = 0',
                               k_zero.is_finite and k_zero.value == 0.0))

    variables = centered_variables(CUMULANT_TRIALS, p)
    values = [cumulant(p, u) for u in variables]
    smallest = min(v.value for v in values if v.is_finite) if values else math.nan
    positive = len(values) == CUMULANT_TRIALS and all(v.is_finite and v.value > 0 for v in values)
    entries.append(ReportEntry('cumulant.positive', {'trials': CUMULANT_TRIALS, 'seed': SEED}, _holds(positive),
                               None, 'K_p(u) > 0 for nonzero centered u', positive, f'smallest K {smallest:.6g}'))

    rng = np.random.default_rng(SEED + 1)
    worst = -math.inf
    for i, u in enumerate(variables):
        j = (i + 1) % len(variables)
        lam = float(rng.uniform())
        mixed = cumulant(p, _affine(u, variables[j], lam, 1.0 - lam))
        worst = max(worst, mixed.value - lam * values[i].value - (1.0 - lam) * values[j].value)
    entries.append(ReportEntry('cumulant.convexity', {'trials': len(variables), 'seed': SEED + 1},
                               _holds(worst <= 1e-8), None, 'K_p is convex', worst <= 1e-8,
                               f'max excess {worst:.3g}'))

    u = RandomVariable([Piece.polynomial(0.0, 1.0, [-0.5, 1.0])], name='x-1/2')
    k = cumulant(p, u)
    expected = math.log(2.0 * math.sinh(0.5))
    error = abs(k.value - expected) if k.is_finite else math.inf
    entries.append(ReportEntry('cumulant.closed_form', {'u': 'x-1/2', 'p': 'uniform'}, f'{k.value!r}',
                               (k.value - k.error_bound, k.value + k.error_bound) if k.is_finite else None,
                               'K_1(x - 1/2) = log(2 sinh(1/2))', error <= 1e-9, f'error {error:.3g}'))
    return entries


#####################
# Pair grid
#####################

def check_pair_grid():
    """ Three-way agreement of the finite-divergence conditions, and open mixture arcs implying open exponential
    arcs, over the pair grid """
    pairs = pair_grid()
    disagreements, violations = [], []
    for p, q in pairs:
        try:
            finitediv_equivalence(q, p)
        except OrliczModelsError as e:
            disagreements.append(f'{q.name}||{p.name}: {e}')
        mixture = mix_connected(p, q).verdict
        if mixture == ArcVerdict.CONNECTED:
            exponential = exp_connected(p, q, MOMENT_DEPTH, jensen=False).verdict
            if exponential != ArcVerdict.CONNECTED:
                violations.append(f'{p.name}, {q.name}: exp {exponential.value}')
    return [
        ReportEntry('pairs.finitediv', {'pairs': len(pairs)}, _holds(not disagreements), None,
                    'finite divergence <=> q/p in L^Psi1(p) <=> log(q/p) in L^1(q)', not disagreements,
                    f'{len(disagreements)} disagreements' + (f': {disagreements[0]}' if disagreements else '')),
        ReportEntry('pairs.mixture_implies_exponential', {'pairs': len(pairs)}, _holds(not violations), None,
                    'an open mixture arc implies an open exponential arc', not violations,
                    f'{len(violations)} violations' + (f': {violations[0]}' if violations else '')),
    ]


#####################
# Filtration
#####################

def check_tower():
    p = beta_density(2.0)
    ts = [k / 10.0 for k in range(1, 11)]
    restricted = {t: restrict(p, t).restricted for t in ts}
    worst = 0.0
    for t1 in ts:
        for t2 in ts:
            nested = restrict(restricted[t2], t1).restricted
            worst = max(worst, sup_distance(restricted[min(t1, t2)], nested))
    entries = [ReportEntry('filtration.tower', {'p': p.name, 'grid': '10x10'}, _holds(worst <= 1e-10), None,
                           'restricting p_t2 to F_t1 gives p_min(t1,t2)', worst <= 1e-10,
                           f'max distance {worst:.3g}')]
    return entries


def check_co419():
    """ The co419 restriction threshold at t = 1/2, and agreement of co419 with co419_q up to t0 """
    entries = []
    scan = stability_scan(co419_density(), CO419_GRID, MOMENT_DEPTH)
    expected = [ArcVerdict.CONNECTED if t < 0.5 else ArcVerdict.NOT_CONNECTED for t in scan.ts]
    passed = list(scan.verdicts) == expected
    detail = ', '.join(f'{t:g}:{v.value}' for t, v in zip(scan.ts, scan.verdicts))
    threshold = scan.threshold if scan.threshold is not None else math.inf
    entries.append(ReportEntry('filtration.co419_scan', {'grid': list(scan.ts)},
                               'Threshold' if passed else 'Mismatch', (threshold, threshold),
                               'co419 restrictions leave the exponential model of the uniform density at t = 1/2',
                               passed, detail))

    agreement = co419_agreement_check(0.25, 2.0, depth=MOMENT_DEPTH)
    distance = max(r.distance for r in agreement.rows)
    entries.append(ReportEntry('filtration.co419_agreement', {'t0': 0.25, 'beta': 2.0}, _holds(agreement.holds),
                               None, 'densities with equal restrictions up to t0 can differ in model membership',
                               agreement.holds, f'max distance {distance:.3g} (tolerance {AGREEMENT_TOLERANCE:g}), '
                               f'co419_q connected {agreement.q_connected}, co419 connected '
                               f'{agreement.p_connected}'))
    return entries


#####################
# Closure
#####################

def closure_target():
    """ 2 on [0, 1/2), zero on [1/2, 1] """
    return Density([Piece.constant(0.0, 0.5, 2.0), Piece.constant(0.5, 1.0, 0.0)], name='2*1[0,1/2)',
                   strictly_positive=False)


def check_closure():
    p, q = lebesgue(), closure_target()
    entries = []
    for n in CLOSURE_NS:
        it = closure_step(p, q, n)
        expected = 1.0 + 1.0 / (2 * n)
        ok = (abs(it.c_n - expected) <= 1e-9 and it.l1_error is not None and it.l1_error <= 2.0 / n and
              it.mixture_verdict == ArcVerdict.CONNECTED)
        entries.append(ReportEntry(f'closure.step[{n}]', {'n': n, 'target': q.name, 'a_n': '1/n'},
                                   it.mixture_verdict.value, (it.c_n, it.c_n),
                                   'mixture-connected approximants converge to the simple target in L^1', ok,
                                   f'c_n {it.c_n:.12g} (expected {expected:.12g}), L1 {it.l1_error}'))
    return entries


#####################
# Suite
#####################

CHECKS = (
    ('divergenza.moments', check_divergenza_moments),
    ('divergenza.kl', check_divergenza_kl),
    ('divergenza.exp_connected', check_divergenza_not_connected),
    ('beta', check_beta_family),
    ('luxemburg', check_luxemburg_axioms),
    ('young', check_young_inequalities),
    ('cumulant', check_cumulant),
    ('pairs', check_pair_grid),
    ('filtration.tower', check_tower),
    ('co419', check_co419),
    ('closure', check_closure),
)


COUNTEREXAMPLE_CHECKS = {
    'divergenza': ('divergenza.moments', 'divergenza.kl', 'divergenza.exp_connected'),
    'co419': ('co419',),
}


def run_check(check_id, fn):
    """ Runs one check, turning a raised library error into a failed entry """
    try:
        return list(fn())
    except (OrliczModelsError, ValueError) as e:
        return [_failed(check_id, f'{check_id} check', e)]


def check_report_round_trip(entries, command='verify-all'):
    """ The JSON report parses and re-emits to identical bytes """
    first = Report.build(command, entries).to_json()
    second = load_report(first).to_json()
    return ReportEntry('report.round_trip', {'entries': len(entries)}, _holds(first == second), None, 'plumbing',
                       first == second)


def verify_all(only=None, command='verify-all'):
    """ Runs the acceptance suite

    Parameters
    ----------
    only: optional iterable of check ids (the first element of CHECKS rows) to run
    command: command name recorded in the report

    Returns
    -------
    Report
    """
    entries = []
    for check_id, fn in CHECKS:
        if only is not None and check_id not in only:
            continue
        logging.info(f'acceptance: running {check_id}')
        entries.extend(run_check(check_id, fn))
    entries.append(check_report_round_trip(entries, command))
    return Report.build(command, entries)
