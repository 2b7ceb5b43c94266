"""
Command-line front-end: every subcommand builds a Report and prints it as text, or as JSON with --json.

Exit status is 0 when every entry passes, 1 when a check fails and 2 on usage errors.
"""
import argparse
import logging
import math
import sys
from typing import List, Optional

from .acceptance import COUNTEREXAMPLE_CHECKS, verify_all
from .app import config, configure_logging
from .arcs import ArcVerdict, cumulant, exp_connected, mix_connected, represent, theorem_main_crosscheck
from .closure import closure_sequence
from .counterexamples import DIRECTIONS, divergenza_kl_series
from .density_spec import parse_density, parse_grid, parse_target, parse_variable
from .divergence import divergence_report
from .filtration import restrict, stability_scan
from .orlicz import NormVerdict, luxemburg_norm, membership
from .orlicz_utilities import DensitySpecError, OrliczModelsError, Verdict
from .report import Report, ReportEntry, use_color
from .young import BUILTIN_NAMES, builtin

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


def _grammar(parser):
    """ argparse type converter around a density_spec parser; grammar errors become usage errors """
    def convert(text):
        try:
            return parser(text)
        except DensitySpecError as e:
            raise argparse.ArgumentTypeError(str(e)) from None
    convert.__name__ = parser.__name__.replace('parse_', '')
    return convert


def _unit_time(text):
    try:
        t = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected a number in [0, 1], got {text!r}') from None
    if not 0 <= t <= 1:
        raise argparse.ArgumentTypeError(f't = {t} is outside [0, 1]')
    return t


def _positive_int(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected a positive integer, got {text!r}') from None
    if n < 1:
        raise argparse.ArgumentTypeError(f'expected a positive integer, got {n}')
    return n


DENSITY = _grammar(parse_density)
TARGET = _grammar(parse_target)
VARIABLE = _grammar(parse_variable)
GRID = _grammar(parse_grid)


#####################
# Subcommands
#####################

def _evidence_detail(report):
    return '; '.join(f'{e.condition}: {e.outcome}' + (f' ({e.detail})' if e.detail else '') for e in report.evidence)


def _arc_entry(check_id, report, p, q, anchor):
    decided = report.verdict != ArcVerdict.INCONCLUSIVE
    consistent = all(e.outcome != 'Violated' for e in report.evidence)
    return ReportEntry(check_id, {'p': p.name, 'q': q.name}, report.verdict.value, report.witness_interval, anchor,
                       decided and consistent, _evidence_detail(report))


def cmd_norm(args):
    phi = builtin(args.phi)
    norm = luxemburg_norm(args.u, args.p, phi, args.tol)
    inputs = {'u': args.u.name, 'p': args.p.name, 'phi': phi.name}
    entries = [ReportEntry('norm.luxemburg', inputs, norm.verdict.value, norm.bracket,
                           'Luxemburg norm inf{k > 0 : E_p[Phi(u/k)] <= 1}', True,
                           f'norm {norm.value:.12g} after {norm.iterations} evaluations')]
    if norm.verdict == NormVerdict.FINITE:
        member = membership(args.u, args.p, phi, args.depth)
        detail = f'alpha {member.alpha:g}' if member.alpha is not None else ''
        entries.append(ReportEntry('norm.membership', inputs, member.verdict.value, None,
                                   'u in L^Phi(p): E_p[Phi(alpha u)] finite for some alpha > 0',
                                   member.verdict == Verdict.FINITE, detail))
    return entries


def cmd_arc(args):
    p, q = args.p, args.q
    if args.arc_command == 'exp-check':
        report = exp_connected(p, q, args.depth, jensen=not args.no_jensen)
        return [_arc_entry('arc.exponential', report, p, q, 'open exponential arc through p and q')]
    if args.arc_command == 'mix-check':
        report = mix_connected(p, q)
        return [_arc_entry('arc.mixture', report, p, q, 'open mixture arc through p and q')]
    table = theorem_main_crosscheck(p, q, args.depth)
    entries = [ReportEntry(f'arc.crosscheck[{i}]', {'p': p.name, 'q': q.name}, e.outcome, None, e.condition,
                           e.outcome not in ('Inconclusive', 'Violated'), e.detail)
               for i, e in enumerate(table.evidence)]
    entries.append(ReportEntry('arc.crosscheck', {'p': p.name, 'q': q.name}, table.verdict.value, None,
                               'equivalent characterizations of the maximal exponential model agree',
                               table.verdict != ArcVerdict.INCONCLUSIVE))
    return entries


def cmd_model(args):
    p = args.p
    if args.u is not None:
        k = cumulant(p, args.u)
        interval = (k.value - k.error_bound, k.value + k.error_bound) if k.is_finite else None
        verdict = k.verdict.value if not k.is_divergent else 'Infinite'
        return [ReportEntry('model.cumulant', {'p': p.name, 'u': args.u.name}, verdict, interval,
                            'cumulant functional K_p(u) = log E_p[e^u]', k.verdict != Verdict.INCONCLUSIVE,
                            f'K = {k.value!r}' if k.is_finite else '')]
    rep = represent(p, args.q)
    residual_ok = math.isfinite(rep.residual) and rep.residual <= 1e-8
    centered = abs(rep.centering) <= config['CENTERING_TOLERANCE']
    divergence = f', D(p||q) = {rep.divergence:.12g}' if rep.divergence is not None else ''
    return [ReportEntry('model.represent', {'p': p.name, 'q': args.q.name}, 'Connected',
                        (rep.k_value, rep.k_value), 'q = exp(u - K_p(u)) p with E_p[u] = 0', residual_ok and centered,
                        f'K_p(u) = {rep.k_value:.12g}, residual {rep.residual:.3g}, '
                        f'E_p[u] = {rep.centering:.3g}{divergence}')]


def cmd_divergence(args):
    p, q = args.p, args.q
    exp_verdict = exp_connected(p, q, args.depth, jensen=False).verdict
    report = divergence_report(q, p, exp_verdict)
    inputs = {'p': p.name, 'q': q.name}
    entries = []
    for check_id, label, value in (('divergence.forward', 'D(q||p)', report.forward),
                                   ('divergence.reverse', 'D(p||q)', report.reverse)):
        interval = (value.value - value.error_bound, value.value + value.error_bound) if value.is_finite else None
        detail = f'{label} = {value.value:.12g} ({value.provenance.value})' if value.is_finite else ''
        entries.append(ReportEntry(check_id, inputs, value.verdict.value, interval, f'{label} = E[log of the ratio]',
                                   value.verdict != Verdict.INCONCLUSIVE, detail))
    checks = report.lemma_checks
    entries.append(ReportEntry('divergence.equivalence', inputs, _holds(checks.agree), None,
                               'D(q||p) < inf <=> q/p in L^Psi1(p) <=> log(q/p) in L^1(q)', checks.agree,
                               ', '.join(f'{k}: {v.value}' for k, v in checks._asdict().items())))
    entries.append(ReportEntry('divergence.gibbs', inputs, _holds(report.gibbs_ok), None,
                               'divergences are nonnegative', report.gibbs_ok))
    if report.corollary_consistent is not None:
        entries.append(ReportEntry('divergence.exponential_model', inputs, _holds(report.corollary_consistent),
                                   None, 'q in the exponential model of p makes both divergences finite',
                                   report.corollary_consistent))
    return entries


def cmd_counterexample(args):
    if args.counterexample_command == 'series':
        series = divergenza_kl_series(args.direction, args.terms)
        return [ReportEntry('counterexample.series', {'direction': args.direction, 'N': args.terms}, 'Finite',
                            series.value_interval, 'closed-form divergence series of divergenza with tail bound',
                            True, f'partial sum {series.partial_sum:.12g}, tail <= {series.tail_bound:.3g}')]
    return list(verify_all(COUNTEREXAMPLE_CHECKS[args.name], 'counterexample verify').entries)


def cmd_restrict(args):
    result = restrict(args.p, args.t)
    level = (1.0 - result.F_t) / (1.0 - result.t) if result.t < 1 else None
    detail = f'p_t = p on [0, {result.t:g}]' + (f', {level:.12g} on ({result.t:g}, 1]' if level is not None else '')
    return [ReportEntry('restrict', {'p': args.p.name, 't': args.t}, 'Restricted', (result.F_t, result.F_t),
                        'F(t) = int_0^t p and the conditional density given F_t', True, detail)]


def cmd_stability_scan(args):
    scan = stability_scan(args.p, args.grid, args.depth)
    entries = []
    for t, verdict, eps in zip(scan.ts, scan.verdicts, scan.epsilons):
        detail = f'eps {eps:g}' if eps is not None else ''
        entries.append(ReportEntry(f'stability[{t:g}]', {'p': args.p.name, 't': t}, verdict.value, None,
                                   'p_t in the exponential model of the uniform density',
                                   verdict != ArcVerdict.INCONCLUSIVE, detail))
    threshold = scan.threshold if scan.threshold is not None else math.inf
    entries.append(ReportEntry('stability.monotone', {'p': args.p.name}, _holds(scan.monotone),
                               (threshold, threshold), 'once p_t leaves the model it does not return',
                               scan.monotone))
    return entries


def cmd_closure(args):
    sequence = closure_sequence(args.p, args.target, args.n_max, level=args.level)
    entries = []
    for it in sequence.iterates:
        detail = f'c_n {it.c_n:.12g}, L1 {it.l1_error!r}'
        entries.append(ReportEntry(f'closure.q[{it.n}]', {'p': args.p.name, 'target': sequence.target.name,
                                                         'n': it.n}, it.mixture_verdict.value, it.proof_bounds,
                                   'q_n is mixture-connected to p', it.mixture_verdict == ArcVerdict.CONNECTED,
                                   detail))
    decreasing = sequence.eventually_decreasing()
    entries.append(ReportEntry('closure.l1', {'target': sequence.target.name, 'n_max': args.n_max},
                               'Decreasing' if decreasing else 'NotMonotone', None,
                               'q_n converges to the target in L^1', all(e is not None for e in sequence.l1_errors),
                               ', '.join(f'{e:.6g}' for e in sequence.l1_errors if e is not None)))
    return entries


def cmd_verify_all(args):
    return list(verify_all(args.only or None).entries)


def _holds(flag):
    return 'Holds' if flag else 'Violated'


#####################
# Parser
#####################

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--json', action='store_true', help='Emit the report as JSON.')
    common.add_argument('--log-level', choices=LOG_LEVELS, default=None, dest='log_level',
                        help='Logging level on stderr (default from orlicz_models.conf).')
    depth = argparse.ArgumentParser(add_help=False)
    depth.add_argument('--depth', type=int, default=config['EPSILON_SCAN_DEPTH'],
                       help='Scan depth j of eps = 2^-j (default: %(default)s).')
    pq = argparse.ArgumentParser(add_help=False)
    pq.add_argument('--p', type=DENSITY, required=True, help='Base density specification.')
    pq.add_argument('--q', type=DENSITY, required=True, help='Second density specification.')

    parser = argparse.ArgumentParser(prog='orlicz_models',
                                     description='Exponential and mixture models of densities on [0, 1].')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    norm = sub.add_parser('norm', parents=[common], help='Luxemburg norm and L^Phi membership of a variable.')
    norm.add_argument('--u', type=VARIABLE, required=True, help='Random variable specification.')
    norm.add_argument('--p', type=DENSITY, default=parse_density('uniform'), help='Density (default: uniform).')
    norm.add_argument('--phi', choices=BUILTIN_NAMES, default='Phi1', help='Young function (default: Phi1).')
    norm.add_argument('--tol', type=float, default=None, help='Relative bisection tolerance.')
    norm.add_argument('--depth', type=int, default=config['ALPHA_SCAN_DEPTH'],
                      help='Scan depth j of alpha = 2^-j (default: %(default)s).')
    norm.set_defaults(handler=cmd_norm)

    arc = sub.add_parser('arc', help='Open exponential and mixture arcs.')
    arc_sub = arc.add_subparsers(dest='arc_command', metavar='check')
    arc_sub.required = True
    exp_check = arc_sub.add_parser('exp-check', parents=[common, depth, pq], help='Open exponential arc.')
    exp_check.add_argument('--no-jensen', action='store_true', dest='no_jensen',
                           help='Skip the Jensen evidence Z(theta) <= 1.')
    arc_sub.add_parser('mix-check', parents=[common, pq], help='Open mixture arc.')
    arc_sub.add_parser('crosscheck', parents=[common, depth, pq],
                       help='Equivalent characterizations of the maximal exponential model.')
    arc.set_defaults(handler=cmd_arc)

    model = sub.add_parser('model', parents=[common], help='Cumulant functional or model representation.')
    model.add_argument('--p', type=DENSITY, required=True, help='Base density specification.')
    target = model.add_mutually_exclusive_group(required=True)
    target.add_argument('--q', type=DENSITY, help='Represent q = exp(u - K_p(u)) p.')
    target.add_argument('--u', type=VARIABLE, help='Evaluate K_p(u) for a centered variable u.')
    model.set_defaults(handler=cmd_model)

    divergence = sub.add_parser('divergence', parents=[common, depth, pq], help='Kullback-Leibler divergences.')
    divergence.set_defaults(handler=cmd_divergence)

    counterexample = sub.add_parser('counterexample', help='Explicit counterexample densities.')
    ce_sub = counterexample.add_subparsers(dest='counterexample_command', metavar='action')
    ce_sub.required = True
    verify = ce_sub.add_parser('verify', parents=[common], help='Verify the claims about a counterexample.')
    verify.add_argument('name', choices=sorted(COUNTEREXAMPLE_CHECKS))
    series = ce_sub.add_parser('series', parents=[common], help='Closed-form divergence series of divergenza.')
    series.add_argument('--direction', choices=DIRECTIONS, default=DIRECTIONS[0])
    series.add_argument('--terms', type=_positive_int, default=10000, help='Number of terms N.')
    counterexample.set_defaults(handler=cmd_counterexample)

    restriction = sub.add_parser('restrict', parents=[common], help='Restriction p_t to the filtration F_t.')
    restriction.add_argument('--p', type=DENSITY, required=True, help='Density specification.')
    restriction.add_argument('--t', type=_unit_time, required=True, help='Time t in [0, 1].')
    restriction.set_defaults(handler=cmd_restrict)

    scan = sub.add_parser('stability-scan', parents=[common, depth], help='exp_connected(1, p_t) along a t grid.')
    scan.add_argument('--p', type=DENSITY, required=True, help='Density specification.')
    scan.add_argument('--grid', type=GRID, required=True, help="t grid, 'a:b:step' or a comma list.")
    scan.set_defaults(handler=cmd_stability_scan)

    closure = sub.add_parser('closure', help='Mixture approximation of a simple density.')
    closure_sub = closure.add_subparsers(dest='closure_command', metavar='action')
    closure_sub.required = True
    approx = closure_sub.add_parser('approx', parents=[common], help='The approximants q_1, ..., q_n.')
    approx.add_argument('--p', type=DENSITY, default=parse_density('uniform'), help='Base density (default: uniform).')
    approx.add_argument('--target', type=TARGET, required=True, help='Target density; quantized unless simple.')
    approx.add_argument('--n-max', type=_positive_int, default=10, dest='n_max', help='Last index n.')
    approx.add_argument('--level', type=float, default=None, help='Quantization mesh for targets that are not simple.')
    closure.set_defaults(handler=cmd_closure)

    verify_all_parser = sub.add_parser('verify-all', parents=[common], help='Run the full acceptance suite.')
    verify_all_parser.add_argument('--only', action='append', default=[], help='Restrict to a check id (repeatable).')
    verify_all_parser.set_defaults(handler=cmd_verify_all)
    return parser


def parse_args(argv: Optional[List[str]] = None):
    return build_parser().parse_args(argv)


def run(args):
    """ Runs a parsed command

    Returns
    -------
    Report. A library error raised by the command becomes a single failed entry.
    """
    command = ' '.join(c for c in (args.command, getattr(args, 'arc_command', None),
                                   getattr(args, 'counterexample_command', None),
                                   getattr(args, 'closure_command', None)) if c)
    try:
        entries = args.handler(args)
    except (OrliczModelsError, ValueError) as e:
        logging.error(msg=f'cli: {command} failed with {type(e).__name__}: {e}')
        entries = [ReportEntry(command.replace(' ', '.'), {}, 'Error', None, command, False,
                               f'{type(e).__name__}: {e}')]
    return Report.build(command, entries)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    configure_logging(args.log_level)
    report = run(args)
    if args.json:
        print(report.to_json())
    else:
        print(report.to_text(use_color(sys.stdout)))
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
