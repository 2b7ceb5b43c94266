"""
Exponential and mixture arcs between densities, the cumulant functional K_p and the maximal exponential model.

p and q are connected by an open exponential arc when Z(theta) = E_p[(q/p)^theta] is finite on an open interval
containing [0, 1], and by an open mixture arc when (1 - lambda) p + lambda q stays a density for lambda in an open
interval containing [0, 1], which happens exactly when q/p is bounded above and away from zero.
"""
import logging
import math
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .app import config
from .divergence import kl_divergence, log_ratio
from .forms import multiply_forms, power_form
from .measure_core import Density, combine, integrate, mix, paired_segments, pointwise_ratio
from .orlicz import NormVerdict, membership, truncated_logratio_norm
from .orlicz_utilities import (IntegralValue, Mode, NotCenteredError, PreconditionError, Verdict,
                               VerdictDisagreementError, json_interval)
from .transforms import ExpTransform, PowerTransform
from .young import builtin

JENSEN_THETAS = (0.25, 0.5, 0.75)
# tail pieces scanned for numeric ratio bounds
TAIL_SCAN_PIECES = 64


class ArcVerdict(Enum):
    CONNECTED = 'Connected'
    NOT_CONNECTED = 'NotConnected'
    INCONCLUSIVE = 'Inconclusive'


class ArcKind(Enum):
    EXPONENTIAL = 'Exponential'
    MIXTURE = 'Mixture'


class Evidence(NamedTuple):
    """ One checked condition: outcome is an ArcVerdict value or 'Holds' / 'Violated' for side checks """
    condition: str
    outcome: str
    mode: Mode
    detail: str = ''

    def to_dict(self):
        return {'condition': self.condition, 'outcome': self.outcome, 'mode': self.mode.value,
                'detail': self.detail}


class RatioBounds(NamedTuple):
    """ Essential bounds c1 <= q/p <= c2; analytic when both come from exact local classes and critical points """
    lower: float
    upper: float
    analytic: bool


class ExponentInterval(NamedTuple):
    """ Open theta interval on which the finite pieces keep Z(theta) finite.

    exact: no series tail and every endpoint class known, so the interval is exactly {theta : Z(theta) < inf}
    tail_excludes: 'above' when a tail limit proves Z(theta) = inf for every theta > 1, 'below' for theta < 0
    """
    lo: float
    hi: float
    exact: bool
    tail_excludes: Optional[str]


class ArcReport(NamedTuple):
    kind: ArcKind
    verdict: ArcVerdict
    witness_interval: Optional[tuple]
    evidence: tuple
    ratio_bounds: Optional[RatioBounds] = None

    def to_dict(self):
        out = {'kind': self.kind.value, 'verdict': self.verdict.value,
               'witness_interval': json_interval(self.witness_interval),
               'evidence': [e.to_dict() for e in self.evidence]}
        if self.ratio_bounds is not None:
            out['ratio_bounds'] = json_interval(self.ratio_bounds[:2])
        return out


class ModelRepresentation(NamedTuple):
    """ q = exp(u - K_p(u)) p with E_p[u] = 0 """
    u: object
    k_value: float
    residual: float
    centering: float
    divergence: Optional[float]


class CrosscheckTable(NamedTuple):
    p_name: str
    q_name: str
    verdict: ArcVerdict
    evidence: tuple

    def to_dict(self):
        return {'p': self.p_name, 'q': self.q_name, 'verdict': self.verdict.value,
                'evidence': [e.to_dict() for e in self.evidence]}


def _require_positive(*densities):
    for d in densities:
        if not d.strictly_positive:
            raise PreconditionError(f'arcs.py - {d.name} is not strictly positive')


#####################
# Exponential arc
#####################

def exp_arc_normalizer(p, q, theta, spec=None):
    """ Z(theta) = E_p[(q/p)^theta], the normalizer of p^(1-theta) q^theta

    Parameters
    ----------
    p: Density - strictly positive
    q: Density - strictly positive
    theta: float

    Returns
    -------
    IntegralValue
    """
    _require_positive(p, q)
    if theta == 0 or theta == 1 or q is p:
        return IntegralValue.finite(1.0)
    return integrate(pointwise_ratio(q, p), p, spec, PowerTransform(theta))


def exp_arc_density(p, q, theta, spec=None):
    """ The normalized density p^(1-theta) q^theta / Z(theta)

    Raises
    ------
    PreconditionError when Z(theta) is not finite
    """
    if theta == 0:
        return p
    if theta == 1:
        return q
    z = exp_arc_normalizer(p, q, theta, spec)
    if not z.is_finite:
        raise PreconditionError(f'arcs.py::exp_arc_density() - Z({theta:g}) is {z.verdict.value} for '
                                f'{p.name}, {q.name}')

    def geometric(forms, a, b):
        fp, fq = forms
        return multiply_forms(power_form(fp, 1.0 - theta), power_form(fq, theta), a, b).scaled(1.0 / z.value)

    density = combine([p, q], geometric, f'{p.name}^{1 - theta:g}*{q.name}^{theta:g}', cls=Density)
    return density.validate() if density.tail is None else density


def _linear_region(c0, c1, l0, l1):
    """ Open set of theta where the order c0 + theta c1 (log order l0 + theta l1) is integrable """
    if c1 > 0:
        return (-1.0 - c0) / c1, math.inf
    if c1 < 0:
        return -math.inf, (-1.0 - c0) / c1
    if c0 > -1:
        return -math.inf, math.inf
    if c0 < -1:
        return None
    if l1 > 0:
        return -math.inf, (-1.0 - l0) / l1
    if l1 < 0:
        return (-1.0 - l0) / l1, math.inf
    return (-math.inf, math.inf) if l0 < -1 else None


def _closed_limit_region(c0, c1):
    """ Closed set of theta where the limit order c0 + theta c1 stays >= -1 """
    if c1 > 0:
        return (-1.0 - c0) / c1, math.inf
    if c1 < 0:
        return -math.inf, (-1.0 - c0) / c1
    return (-math.inf, math.inf) if c0 >= -1 else None


def _orders(lp, lq):
    return lp.order, lq.order - lp.order, lp.log_order, lq.log_order - lp.log_order


def exponential_interval(p, q):
    """ Theta interval from the endpoint orders of p and q: p^(1-theta) q^theta has order
    o_p + theta (o_q - o_p) at each endpoint, which must exceed -1

    Returns
    -------
    ExponentInterval
    """
    segments, paired = paired_segments([p, q])
    lo, hi, exact = -math.inf, math.inf, paired is None
    for s in segments:
        fp, fq = s.forms
        for x, side in ((s.a, 1), (s.b, -1)):
            lp, lq = fp.local(x, side), fq.local(x, side)
            if lp is None or lq is None or lp.essential or lq.essential or lp.is_zero or lq.is_zero:
                exact = False
                continue
            region = _linear_region(*_orders(lp, lq))
            if region is None:
                return ExponentInterval(math.inf, -math.inf, True, None)
            lo, hi = max(lo, region[0]), min(hi, region[1])

    excludes = None
    if paired is not None:
        for s in paired.limit_segments:
            lp, lq = s.forms[0].local(0.0, 1), s.forms[1].local(0.0, 1)
            if lp is None or lq is None or lp.essential or lq.essential:
                continue
            region = _closed_limit_region(lp.order, lq.order - lp.order)
            if region is None:
                continue
            if region[1] <= 1:
                excludes = 'above'
            elif region[0] >= 0:
                excludes = 'below'
    return ExponentInterval(lo, hi, exact, excludes)


def _jensen_evidence(p, q, spec):
    out = []
    for theta in JENSEN_THETAS:
        z = exp_arc_normalizer(p, q, theta, spec)
        if not z.is_finite:
            outcome = 'Inconclusive'
        else:
            outcome = 'Holds' if z.value <= 1.0 + z.error_bound + 1e-9 else 'Violated'
        detail = f'Z({theta:g}) = {z.value:.10g}' if z.value is not None else f'Z({theta:g}) {z.verdict.value}'
        out.append(Evidence(f'jensen Z({theta:g}) <= 1', outcome, Mode.NUMERIC, detail))
        if outcome == 'Violated':
            logging.warning(msg=f'arcs: Jensen bound violated for {p.name}, {q.name}: {detail}')
    return out


def _moment_scan(p, q, depth, spec):
    """ First eps = 2^-j with both Z(1+eps) and Z(-eps) finite

    Returns
    -------
    (eps or None, all_divergent) where all_divergent means every tested eps had a Divergent moment
    """
    all_divergent = True
    for j in range(depth + 1):
        eps = 2.0 ** -j
        upper = exp_arc_normalizer(p, q, 1.0 + eps, spec)
        if upper.is_divergent:
            continue
        lower = exp_arc_normalizer(p, q, -eps, spec)
        if lower.is_divergent:
            continue
        all_divergent = False
        if upper.is_finite and lower.is_finite:
            return eps, False
    return None, all_divergent


def exp_connected(p, q, depth=None, spec=None, jensen=True):
    """ Decides whether p and q are connected by an open exponential arc

    Finite pieces are decided exactly from endpoint orders. Series tails either exclude theta > 1 (or < 0)
    through their limit class, or leave the decision to a moment scan over eps = 2^-j, j = 0..depth.

    Returns
    -------
    ArcReport of kind Exponential
    """
    _require_positive(p, q)
    depth = config['EPSILON_SCAN_DEPTH'] if depth is None else depth
    evidence = []
    if q is p:
        evidence.append(Evidence('open exponential arc', ArcVerdict.CONNECTED.value, Mode.ANALYTIC, 'q = p'))
        return ArcReport(ArcKind.EXPONENTIAL, ArcVerdict.CONNECTED, (-math.inf, math.inf), tuple(evidence))

    interval = exponential_interval(p, q)
    if jensen:
        evidence.extend(_jensen_evidence(p, q, spec))
    verdict, witness = ArcVerdict.INCONCLUSIVE, None
    if interval.hi <= 1 or interval.lo >= 0:
        verdict = ArcVerdict.NOT_CONNECTED
        evidence.append(Evidence('open exponential arc', verdict.value, Mode.ANALYTIC,
                                 f'Z finite only on ({interval.lo:g}, {interval.hi:g})'))
    elif interval.tail_excludes is not None:
        verdict = ArcVerdict.NOT_CONNECTED
        side = 'theta > 1' if interval.tail_excludes == 'above' else 'theta < 0'
        evidence.append(Evidence('open exponential arc', verdict.value, Mode.ANALYTIC,
                                 f'series tail makes Z infinite for every {side}'))
    elif interval.exact:
        verdict, witness = ArcVerdict.CONNECTED, (interval.lo, interval.hi)
        evidence.append(Evidence('open exponential arc', verdict.value, Mode.ANALYTIC,
                                 f'Z finite exactly on ({interval.lo:g}, {interval.hi:g})'))
    else:
        eps, _ = _moment_scan(p, q, depth, spec)
        if eps is not None:
            verdict, witness = ArcVerdict.CONNECTED, (-eps, 1.0 + eps)
            evidence.append(Evidence('open exponential arc', verdict.value, Mode.NUMERIC,
                                     f'Z(1+eps) and Z(-eps) finite at eps = {eps:g}'))
        else:
            evidence.append(Evidence('open exponential arc', verdict.value, Mode.NUMERIC,
                                     f'no eps >= 2^-{depth} verified'))
    logging.debug(msg=f'arcs: exp_connected({p.name}, {q.name}) = {verdict.value} {witness}')
    return ArcReport(ArcKind.EXPONENTIAL, verdict, witness, tuple(evidence))


#####################
# Mixture arc
#####################

def _piece_extremes(form, a, b):
    """ (min, max, analytic) of a form over the closed piece, using endpoint limits and critical points """
    values, analytic = [], True
    for x, side in ((a, 1), (b, -1)):
        loc = form.local(x, side)
        if loc is None:
            analytic = False
            values.append(float(form([x + side * 1e-12 * (b - a)])[0]))
        else:
            values.append(loc.limit)
    critical = form.critical_points(a, b)
    if critical is None:
        analytic = False
        critical = np.linspace(a, b, 257)[1:-1]
    if len(critical):
        values.extend(np.asarray(form(np.asarray(critical, dtype=float)), dtype=float).tolist())
    return min(values), max(values), analytic


def ratio_bounds(q, p):
    """ Essential infimum and supremum of q/p

    Returns
    -------
    RatioBounds. With a series tail, unbounded or vanishing limit classes are exact; otherwise the bounds come
    from the first tail pieces and are numeric.
    """
    if q is p:
        return RatioBounds(1.0, 1.0, True)
    ratio = pointwise_ratio(q, p)
    lower, upper, analytic = math.inf, -math.inf, True
    pieces = list(ratio.pieces)
    if ratio.tail is not None:
        limit_exact = False
        for piece in ratio.tail.limit_pieces:
            loc = piece.form.local(0.0, 1) if piece.a == 0 else None
            if loc is None:
                continue
            if not loc.bounded:
                upper, limit_exact = math.inf, True
            elif loc.vanishes:
                lower, limit_exact = 0.0, True
        analytic = limit_exact
        pieces += ratio.tail.materialize(ratio.tail.start + TAIL_SCAN_PIECES)
    for piece in pieces:
        lo, hi, exact = _piece_extremes(piece.form, piece.a, piece.b)
        lower, upper = min(lower, lo), max(upper, hi)
        analytic = analytic and exact
    if ratio.tail is not None and (lower == 0 or upper == math.inf):
        analytic = True
    return RatioBounds(lower, upper, analytic)


def mixture_witness(c1, c2):
    """ lambda interval (1/(1-c2), 1/(1-c1)) keeping (1-lambda) p + lambda q positive; c2 <= 1 opens the left end
    and c1 >= 1 the right end """
    left = -math.inf if c2 <= 1 else 1.0 / (1.0 - c2)
    right = math.inf if c1 >= 1 else 1.0 / (1.0 - c1)
    return left, right


def mix_connected(p, q):
    """ Decides whether p and q are connected by an open mixture arc: q/p and p/q essentially bounded

    Returns
    -------
    ArcReport of kind Mixture with the ratio bounds
    """
    _require_positive(p, q)
    bounds = ratio_bounds(q, p)
    mode = Mode.ANALYTIC if bounds.analytic else Mode.NUMERIC
    detail = f'{bounds.lower:.6g} <= q/p <= {bounds.upper:.6g}'
    witness = None
    if bounds.lower > 0 and bounds.upper < math.inf:
        verdict = ArcVerdict.CONNECTED if bounds.analytic else ArcVerdict.INCONCLUSIVE
        if bounds.analytic:
            witness = mixture_witness(bounds.lower, bounds.upper)
    else:
        verdict = ArcVerdict.NOT_CONNECTED if bounds.analytic else ArcVerdict.INCONCLUSIVE
        detail += '; q/p is unbounded' if bounds.upper == math.inf else '; q/p is not bounded away from zero'
    evidence = (Evidence('q/p and p/q bounded', verdict.value, mode, detail),)
    return ArcReport(ArcKind.MIXTURE, verdict, witness, evidence, bounds)


def mixture_arc_density(p, q, lam):
    """ (1 - lambda) p + lambda q

    Raises
    ------
    ValueError when lambda lies outside the open interval keeping the combination positive
    """
    if lam == 0:
        return p
    if lam == 1:
        return q
    bounds = ratio_bounds(q, p)
    if not bounds.analytic:
        raise PreconditionError(f'arcs.py::mixture_arc_density() - ratio bounds of {q.name}/{p.name} are numeric')
    left, right = mixture_witness(bounds.lower, bounds.upper)
    if not left < lam < right:
        violated = 'lower' if lam <= left else 'upper'
        raise ValueError(f'arcs.py::mixture_arc_density() - lambda = {lam:g} breaks positivity: outside '
                         f'({left:g}, {right:g}), {violated} bound from q/p in [{bounds.lower:g}, {bounds.upper:g}]')
    mixed = mix([p, q], [1.0 - lam, lam], f'{1 - lam:g}*{p.name} + {lam:g}*{q.name}')
    return Density(mixed.pieces, mixed.tail, mixed.name)


#####################
# Cumulant and model
#####################

def cumulant(p, u, spec=None, tol=None):
    """ K_p(u) = log E_p[e^u] for a centered random variable u

    Raises
    ------
    NotCenteredError when |E_p[u]| exceeds the centering tolerance

    Returns
    -------
    IntegralValue of K_p(u); Divergent stands for +inf
    """
    tol = config['CENTERING_TOLERANCE'] if tol is None else tol
    mean = integrate(u, p, spec)
    if not mean.is_finite:
        raise PreconditionError(f'arcs.py::cumulant() - E_p[{u.name}] is {mean.verdict.value}')
    if abs(mean.value) > tol + mean.error_bound:
        raise NotCenteredError(mean.value)
    z = integrate(u, p, spec, ExpTransform())
    if z.is_divergent:
        return IntegralValue.divergent(z.provenance)
    if not z.is_finite:
        return z
    return IntegralValue(math.log(z.value), z.error_bound / z.value, Verdict.FINITE, z.provenance)


def represent(p, q, spec=None, report=None):
    """ Writes q = exp(u - K_p(u)) p with u = log(q/p) - E_p[log(q/p)] and K_p(u) = -E_p[log(q/p)] = D(p||q)

    Parameters
    ----------
    report: optional exp_connected(p, q) result, computed when missing

    Returns
    -------
    ModelRepresentation
    """
    report = report or exp_connected(p, q, spec=spec, jensen=False)
    if report.verdict != ArcVerdict.CONNECTED:
        raise PreconditionError(f'arcs.py::represent() - {q.name} is not in the exponential model of {p.name} '
                                f'({report.verdict.value})')
    if q is p:
        zero = log_ratio(q, p).scaled(0.0, 'u')
        return ModelRepresentation(zero, 0.0, 0.0, 0.0, 0.0)
    lr = log_ratio(q, p)
    mean = integrate(lr, p, spec)
    if not mean.is_finite:
        raise PreconditionError(f'arcs.py::represent() - E_p[log(q/p)] is {mean.verdict.value}')
    k_value = -mean.value
    u = lr.shifted(k_value, f'log({q.name}/{p.name}) - E_p')
    centering = integrate(u, p, spec)

    xs = p.evaluation_grid()
    with np.errstate(all='ignore'):
        target = np.asarray(q(xs), dtype=float)
        rebuilt = np.exp(np.asarray(u(xs), dtype=float) - k_value) * np.asarray(p(xs), dtype=float)
    ok = np.isfinite(target) & np.isfinite(rebuilt)
    residual = float(np.max(np.abs(target[ok] - rebuilt[ok]) / np.maximum(1.0, np.abs(target[ok])))) \
        if ok.any() else math.nan

    d = kl_divergence(p, q, spec)
    divergence = d.value if d.is_finite else None
    if divergence is not None and abs(divergence - k_value) > 1e-6 + d.error_bound + mean.error_bound:
        logging.warning(msg=f'arcs: K_p(u) = {k_value} but D(p||q) = {divergence} for {p.name}, {q.name}')
    return ModelRepresentation(u, k_value, residual, centering.value if centering.is_finite else math.nan,
                               divergence)


#####################
# Equivalent conditions
#####################

def _membership_outcome(u, p, q):
    phi1 = builtin('Phi1')
    verdicts = [membership(u, d, phi1).verdict for d in (p, q)]
    if all(v == Verdict.FINITE for v in verdicts):
        return ArcVerdict.CONNECTED, verdicts
    if Verdict.DIVERGENT in verdicts:
        return ArcVerdict.NOT_CONNECTED, verdicts
    return ArcVerdict.INCONCLUSIVE, verdicts


def theorem_main_crosscheck(p, q, depth=None, spec=None):
    """ Evaluates the equivalent characterizations of q in the maximal exponential model of p

    - open exponential arc (Z finite around [0, 1])
    - log(q/p) in L^Phi1(p) and in L^Phi1(q)
    - q/p in L^(1+eps)(p) and p/q in L^(1+eps)(q) for some eps > 0

    Raises
    ------
    VerdictDisagreementError when two decided conditions disagree

    Returns
    -------
    CrosscheckTable
    """
    _require_positive(p, q)
    depth = config['EPSILON_SCAN_DEPTH'] if depth is None else depth
    arc = exp_connected(p, q, depth, spec, jensen=False)
    evidence = list(arc.evidence)

    if q is p:
        orlicz_verdict = ArcVerdict.CONNECTED
        detail = 'log(q/p) = 0'
    else:
        orlicz_verdict, verdicts = _membership_outcome(log_ratio(q, p), p, q)
        detail = f'L^Phi1(p): {verdicts[0].value}, L^Phi1(q): {verdicts[1].value}'
    # only a divergence for every scale is decided outside the alpha scan
    mode = Mode.ANALYTIC if q is p or orlicz_verdict == ArcVerdict.NOT_CONNECTED else Mode.NUMERIC
    evidence.append(Evidence('log(q/p) in L^Phi1(p) and L^Phi1(q)', orlicz_verdict.value, mode, detail))

    eps, all_divergent = (1.0, False) if q is p else _moment_scan(p, q, depth, spec)
    if eps is not None:
        moment_verdict, detail = ArcVerdict.CONNECTED, f'finite at eps = {eps:g}'
    elif all_divergent:
        moment_verdict, detail = ArcVerdict.NOT_CONNECTED, f'a moment diverges for every eps >= 2^-{depth}'
    else:
        moment_verdict, detail = ArcVerdict.INCONCLUSIVE, f'no eps >= 2^-{depth} verified'
    mode = Mode.ANALYTIC if q is p else Mode.NUMERIC
    evidence.append(Evidence('q/p in L^(1+eps)(p) and p/q in L^(1+eps)(q)', moment_verdict.value, mode, detail))

    decided = {v for v in (arc.verdict, orlicz_verdict, moment_verdict) if v != ArcVerdict.INCONCLUSIVE}
    if len(decided) > 1:
        raise VerdictDisagreementError(f'arcs.py::theorem_main_crosscheck() - {p.name}, {q.name}: arc '
                                       f'{arc.verdict.value}, Orlicz {orlicz_verdict.value}, moments '
                                       f'{moment_verdict.value}')
    verdict = decided.pop() if decided else ArcVerdict.INCONCLUSIVE

    if verdict == ArcVerdict.CONNECTED and q is not p and p.tail is None and q.tail is None:
        # log(q/p) splits at q/p = 1 into parts bounded by the truncated log-ratios of both directions
        norms = [truncated_logratio_norm(p, q, 1.0), truncated_logratio_norm(q, p, 1.0)]
        finite = all(n.verdict == NormVerdict.FINITE for n in norms)
        evidence.append(Evidence('truncated log-ratio norms finite', 'Holds' if finite else 'Violated',
                                 Mode.NUMERIC, ', '.join(f'{n.value:.6g}' for n in norms)))
    if verdict == ArcVerdict.CONNECTED:
        # set equality of the Orlicz spaces has no finite test; it follows from the decided conditions
        evidence.append(Evidence('L^Phi1(p) = L^Phi1(q)', 'Implied', Mode.ANALYTIC,
                                 'by log(q/p) in L^Phi1(p) and L^Phi1(q)'))
    return CrosscheckTable(p.name, q.name, verdict, tuple(evidence))
