"""
Luxemburg norms, Orlicz norm lower bounds and L^Phi(p) membership
"""
import logging
import math
from enum import Enum
from typing import NamedTuple, Optional

from scipy.optimize import bisect

from .app import config
from .forms import PowerForm, log_form, multiply_forms
from .measure_core import Piece, combine, integrate, paired_segments, pointwise_ratio
from .orlicz_utilities import NonMonotoneError, PreconditionError, Verdict
from .transforms import Absolute, YoungTransform
from .young import builtin

MAX_BRACKET_STEPS = 200


class NormVerdict(Enum):
    FINITE = 'Finite'
    INFINITE = 'Infinite'


class NormResult(NamedTuple):
    """ Luxemburg norm with its final bisection bracket """
    value: float
    bracket: tuple
    iterations: int
    verdict: NormVerdict

    @classmethod
    def zero(cls):
        return cls(0.0, (0.0, 0.0), 0, NormVerdict.FINITE)

    @classmethod
    def infinite(cls, iterations=0):
        return cls(math.inf, (math.inf, math.inf), iterations, NormVerdict.INFINITE)


class MembershipResult(NamedTuple):
    """ Finite with the largest verified alpha, Divergent when E_p[Phi(alpha u)] is infinite for every alpha """
    verdict: Verdict
    alpha: Optional[float]
    value: Optional[float]


def _is_zero(u):
    if u.tail is not None:
        return False
    return all(isinstance(p.form, PowerForm) and p.form.coefficient == 0 for p in u.pieces)


def young_expectation(u, p, phi, scale=1.0, spec=None):
    """ E_p[Phi(scale * u)] as an IntegralValue """
    return integrate(u, p, spec, YoungTransform(phi, scale))


def divergent_for_all_scales(u, p, phi):
    """ True when the local classes prove E_p[Phi(alpha u)] = infinity for every alpha > 0

    Exponential growth diverges for every alpha where u blows up like a power (or faster), or where u grows like
    |log| against a weight of order -1 at a tail limit. For x log x growth the local order does not depend on alpha.
    """
    growth = phi.growth
    if growth is None:
        return False
    segments, paired = paired_segments([p, u])
    endpoints = [(s.forms, s.a, 1, False) for s in segments] + [(s.forms, s.b, -1, False) for s in segments]
    if paired is not None:
        endpoints += [(s.forms, 0.0, 1, True) for s in paired.limit_segments]
    for (w, f), x, side, is_limit in endpoints:
        lw, lu = w.local(x, side), f.local(x, side)
        if lw is None or lu is None or lw.is_zero:
            continue
        if growth == 'exponential':
            if not lu.bounded and (lu.essential == 1 or lu.order < 0 or lu.log_order > 1):
                return True
            if lu.order == 0 and lu.log_order == 1 and lw.order <= -1:
                return True
        else:
            loc = lw.times(YoungTransform(phi, 1.0).local(lu))
            if loc is None:
                continue
            if is_limit and (loc.essential == 1 or loc.order < -1):
                return True
            if not is_limit and loc.integrability() == Verdict.DIVERGENT:
                return True
    return False


def membership(u, p, phi, depth=None, spec=None):
    """ Decides u in L^Phi(p) by scanning alpha = 2^-j, j = 0..depth

    Parameters
    ----------
    u: RandomVariable
    p: Density
    phi: YoungFunction

    Returns
    -------
    MembershipResult. Finite at the first (largest) alpha with E_p[Phi(alpha u)] Finite; Divergent only with an
    analytic proof for all alpha; Inconclusive otherwise.
    """
    depth = config['ALPHA_SCAN_DEPTH'] if depth is None else depth
    if _is_zero(u):
        return MembershipResult(Verdict.FINITE, 1.0, 0.0)
    for j in range(depth + 1):
        alpha = 2.0 ** -j
        value = young_expectation(u, p, phi, alpha, spec)
        if value.is_finite:
            return MembershipResult(Verdict.FINITE, alpha, value.value)
        if value.is_divergent and divergent_for_all_scales(u, p, phi):
            return MembershipResult(Verdict.DIVERGENT, None, None)
    logging.info(f'orlicz: membership of {u.name} in L^{phi.name}({p.name}) inconclusive down to 2^-{depth}')
    return MembershipResult(Verdict.INCONCLUSIVE, None, None)


class _MonotoneGauge:
    """ g(k) = E_p[Phi(u/k)] - 1 with a record of evaluations, checking that g is non-increasing in k """

    def __init__(self, u, p, phi, spec):
        self.u, self.p, self.phi, self.spec = u, p, phi, spec
        self.evaluations = []

    def __call__(self, k):
        value = young_expectation(self.u, self.p, self.phi, 1.0 / k, self.spec)
        if value.is_finite:
            g, noise = value.value, value.error_bound
        elif value.is_divergent:
            g, noise = math.inf, 0.0
        else:
            g = value.value if value.value is not None else math.inf
            noise = 0.0 if value.error_bound == math.inf else value.error_bound
        for k_prev, g_prev, noise_prev in self.evaluations:
            if (k_prev < k and g_prev < g - noise - noise_prev - 1e-12) or \
                    (k_prev > k and g_prev > g + noise + noise_prev + 1e-12):
                raise NonMonotoneError(f'orlicz.py::luxemburg_norm() - E[Phi(u/k)] is not monotone in k near {k:g}',
                                       diagnostics=sorted((kk, gg) for kk, gg, _ in self.evaluations) + [(k, g)])
        self.evaluations.append((k, g, noise))
        return g - 1.0

    def bracket(self):
        feasible = [k for k, g, _ in self.evaluations if g <= 1.0]
        infeasible = [k for k, g, _ in self.evaluations if g > 1.0]
        return (max(infeasible) if infeasible else 0.0), (min(feasible) if feasible else math.inf)


def luxemburg_norm(u, p, phi=None, tol=None, spec=None):
    """ Luxemburg norm inf{k > 0 : E_p[Phi(u/k)] <= 1}

    k_hi doubles from 1 until g(k_hi) <= 1, k_lo halves from 1 until g(k_lo) > 1, then bisection on the monotone
    map k -> E_p[Phi(u/k)]. The returned value is the feasible end of the final bracket, so the unit-ball
    inequality E_p[Phi(u/||u||)] <= 1 holds.

    Parameters
    ----------
    u: RandomVariable
    p: Density
    phi: YoungFunction (Phi1 by default)
    tol: relative bracket width

    Returns
    -------
    NormResult
    """
    phi = phi or builtin('Phi1')
    tol = config['NORM_TOLERANCE'] if tol is None else tol
    if _is_zero(u):
        return NormResult.zero()
    gauge = _MonotoneGauge(u, p, phi, spec)

    k_hi = 1.0
    for _ in range(MAX_BRACKET_STEPS):
        if gauge(k_hi) <= 0:
            break
        if gauge.evaluations[-1][1] == math.inf and divergent_for_all_scales(u, p, phi):
            logging.info(f'orlicz: {u.name} not in L^{phi.name}({p.name}); norm is infinite')
            return NormResult.infinite(len(gauge.evaluations))
        k_hi *= 2.0
    else:
        return NormResult.infinite(len(gauge.evaluations))

    k_lo = k_hi / 2.0
    for _ in range(MAX_BRACKET_STEPS):
        if gauge(k_lo) > 0:
            break
        k_lo /= 2.0
    else:
        # E_p[Phi(u/k)] <= 1 for every tested k: u vanishes p-almost surely up to the scan depth
        return NormResult(0.0, (0.0, k_lo), len(gauge.evaluations), NormVerdict.FINITE)

    lo, hi = gauge.bracket()
    logging.debug(msg=f'orlicz: luxemburg bracket [{lo:.6g}, {hi:.6g}] for {u.name}')
    bisect(gauge, lo, hi, xtol=tol * lo / 4.0, rtol=max(tol / 4.0, 1e-15), maxiter=200)
    lo, hi = gauge.bracket()
    return NormResult(hi, (lo, hi), len(gauge.evaluations), NormVerdict.FINITE)


def unit_ball_residual(u, p, phi, norm):
    """ E_p[Phi(u/norm)] - 1 """
    if norm.verdict != NormVerdict.FINITE or norm.value == 0:
        raise PreconditionError('orlicz.py::unit_ball_residual() - needs a finite nonzero norm')
    value = young_expectation(u, p, phi, 1.0 / norm.value)
    return value.value - 1.0


def product(u, v, name=None):
    """ Pointwise product of two random variables """
    return combine([u, v], lambda forms, a, b: multiply_forms(forms[0], forms[1], a, b),
                   name or f'{u.name}*{v.name}')


def orlicz_norm_lower_bound(u, p, phi, witnesses):
    """ Certified lower bound of the Orlicz norm sup{E_p|uv| : E_p[Psi(v)] <= 1}

    Witnesses outside the conjugate unit ball are rescaled onto its boundary by their Luxemburg norm.

    Returns
    -------
    float
    """
    if not witnesses:
        raise ValueError('orlicz.py::orlicz_norm_lower_bound() - empty witness list')
    psi = phi.conjugate
    best = 0.0
    for v in witnesses:
        if _is_zero(v):
            continue
        scale = 1.0
        ball = young_expectation(v, p, psi)
        if not (ball.is_finite and ball.value <= 1.0):
            norm = luxemburg_norm(v, p, psi)
            if norm.verdict != NormVerdict.FINITE:
                continue
            scale = 1.0 / norm.value
        pairing = integrate(product(u, v), p, None, Absolute())
        if pairing.is_finite:
            best = max(best, scale * pairing.value)
    return best


def truncated_logratio(p, q, big_m):
    """ The variable 1_(q/p > M) log(q/p) """
    if big_m <= 0:
        raise ValueError('orlicz.py::truncated_logratio() - M must be positive')
    ratio = pointwise_ratio(q, p)

    def split(piece):
        cuts = sorted(piece.form.level_crossings(big_m, piece.a, piece.b))
        edges = [piece.a] + cuts + [piece.b]
        out = []
        for u, v in zip(edges, edges[1:]):
            if v <= u:
                continue
            mid = float(piece.form([0.5 * (u + v)])[0])
            out.append(Piece(u, v, log_form(piece.form) if mid > big_m else PowerForm(0.0)))
        return out

    return ratio.map_pieces(split, f'1(q/p>{big_m:g})log({q.name}/{p.name})',
                            limit_fn=lambda piece: [Piece(piece.a, piece.b, log_form(piece.form))])


def truncated_logratio_norm(p, q, big_m, tol=None):
    """ ||1_(q/p > M) log(q/p)||_{Phi1, p}, finite for all strictly positive p, q and M > 0

    Returns
    -------
    NormResult
    """
    for d in (p, q):
        if not d.strictly_positive:
            raise PreconditionError(f'orlicz.py::truncated_logratio_norm() - {d.name} is not strictly positive')
    return luxemburg_norm(truncated_logratio(p, q, big_m), p, builtin('Phi1'), tol)


def norm_ratio_evidence(variables, p, q, phi=None):
    """ Finite-sample ratios ||u||_{Phi,p} / ||u||_{Phi,q}; bounded ratios are evidence (not proof) that the
    two Orlicz spaces coincide

    Returns
    -------
    list of (name, ratio) with ratio None when either norm is infinite or zero
    """
    phi = phi or builtin('Phi1')
    rows = []
    for u in variables:
        a, b = luxemburg_norm(u, p, phi), luxemburg_norm(u, q, phi)
        ok = a.verdict == b.verdict == NormVerdict.FINITE and b.value > 0
        rows.append((u.name, a.value / b.value if ok else None))
    return rows

