"""
Restrictions of a density to the filtration F_t generated by the intervals [0, s], s <= t:

    p_t(x) = p(x) 1_[0,t](x) + (1 - F(t))/(1 - t) 1_(t,1](x),   F(t) = int_0^t p

p_0 = 1 and p_1 = p. Once p_t leaves the exponential model of the uniform density it never comes back for larger t.
"""
import logging
import math
from typing import NamedTuple, Optional

import numpy as np

from .arcs import ArcVerdict, exp_connected
from .counterexamples import co419_density, co419_q
from .measure_core import Density, Piece, constant_variable, integrate, lebesgue
from .orlicz_utilities import PreconditionError

AGREEMENT_TOLERANCE = 1e-9


class RestrictionResult(NamedTuple):
    t: float
    restricted: Density
    F_t: float


class StabilityScan(NamedTuple):
    """ exp_connected(1, p_t) along a grid of times

    threshold: first t with NotConnected (None if there is none)
    monotone: no NotConnected -> Connected transition along the grid
    epsilons: theta_hi - 1 of each Connected witness, None otherwise
    inconclusive: the grid times left undecided
    """
    ts: tuple
    verdicts: tuple
    threshold: Optional[float]
    monotone: bool
    epsilons: tuple
    inconclusive: tuple

    def rows(self):
        return [{'t': t, 'verdict': v.value, 'epsilon': e} for t, v, e in zip(self.ts, self.verdicts, self.epsilons)]


class AgreementRow(NamedTuple):
    t: float
    agree: bool
    distance: float


class AgreementResult(NamedTuple):
    """ Restrictions of co419 and co419_q agree up to t0 although only co419_q is in the model of the uniform """
    t0: float
    beta: float
    rows: tuple
    q_connected: bool
    p_connected: bool
    holds: bool


def _check_time(t):
    if not 0 <= t <= 1:
        raise ValueError(f'filtration.py - t = {t} is outside [0, 1]')


def cdf(p, t):
    """ F(t) = int_0^t p

    Parameters
    ----------
    p: Density
    t: float in [0, 1]

    Returns
    -------
    float
    """
    _check_time(t)
    if t == 0:
        return 0.0
    head = p.clip(t)
    bound = head.tail.mass_bound if head.tail is not None else None
    value = integrate(constant_variable(1.0), head, tail_bound=bound)
    if not value.is_finite:
        raise PreconditionError(f'filtration.py::cdf() - mass of {p.name} on [0, {t:g}] is {value.verdict.value}')
    return min(max(value.value, 0.0), 1.0)


def restrict(p, t):
    """ p_t, the density of p conditioned on F_t

    Returns
    -------
    RestrictionResult. t = 1 returns p itself and t = 0 the uniform density.
    """
    _check_time(t)
    if t == 1:
        return RestrictionResult(1.0, p, 1.0)
    if t == 0:
        return RestrictionResult(0.0, lebesgue(), 0.0)
    f_t = cdf(p, t)
    head = p.clip(t)
    level = (1.0 - f_t) / (1.0 - t)
    pieces = list(head.pieces) + [Piece.constant(t, 1.0, level)]
    restricted = Density(pieces, head.tail, f'{p.name}_t={t:g}', strictly_positive=p.strictly_positive and level > 0)
    logging.debug(msg=f'filtration: F({t:g}) = {f_t:.12g} for {p.name}, level {level:.12g}')
    return RestrictionResult(t, restricted, f_t)


def stability_scan(p, t_grid, depth=None):
    """ exp_connected(1, p_t) for every t of the grid

    Returns
    -------
    StabilityScan
    """
    uniform = lebesgue()
    ts, verdicts, epsilons = [], [], []
    for t in sorted(float(t) for t in t_grid):
        restricted = restrict(p, t).restricted
        report = exp_connected(uniform, restricted, depth, jensen=False)
        ts.append(t)
        verdicts.append(report.verdict)
        hi = report.witness_interval[1] if report.witness_interval else None
        epsilons.append(hi - 1.0 if hi is not None and math.isfinite(hi) else None)

    threshold = next((t for t, v in zip(ts, verdicts) if v == ArcVerdict.NOT_CONNECTED), None)
    decided = [v for v in verdicts if v != ArcVerdict.INCONCLUSIVE]
    monotone = all(not (a == ArcVerdict.NOT_CONNECTED and b == ArcVerdict.CONNECTED)
                   for a, b in zip(decided, decided[1:]))
    if not monotone:
        logging.warning(msg=f'filtration: stability scan of {p.name} leaves NotConnected and comes back')
    inconclusive = tuple(t for t, v in zip(ts, verdicts) if v == ArcVerdict.INCONCLUSIVE)
    return StabilityScan(tuple(ts), tuple(verdicts), threshold, monotone, tuple(epsilons), inconclusive)


def sup_distance(f, g, xs=None):
    """ max |f - g| / max(1, |f|) over a grid avoiding piece endpoints """
    xs = f.evaluation_grid() if xs is None else np.asarray(xs, dtype=float)
    with np.errstate(all='ignore'):
        a, b = np.asarray(f(xs), dtype=float), np.asarray(g(xs), dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))))


def co419_agreement_check(t0=0.25, beta=2.0, t_grid=(0.1, 0.2, 0.25), depth=None):
    """ Restrictions of co419 and co419_q(t0, beta) coincide for t <= t0, co419_q is connected to the uniform
    density and co419 is not

    Returns
    -------
    AgreementResult
    """
    if not 0 < t0 < 0.5:
        raise PreconditionError(f'filtration.py::co419_agreement_check() - t0 = {t0} must lie in (0, 1/2)')
    p, q = co419_density(), co419_q(t0, beta)
    rows = []
    for t in sorted(float(t) for t in t_grid):
        distance = sup_distance(restrict(p, t).restricted, restrict(q, t).restricted)
        rows.append(AgreementRow(t, distance <= AGREEMENT_TOLERANCE, distance))
    uniform = lebesgue()
    q_connected = exp_connected(uniform, q, depth, jensen=False).verdict == ArcVerdict.CONNECTED
    p_connected = exp_connected(uniform, p, depth, jensen=False).verdict == ArcVerdict.CONNECTED
    holds = all(r.agree for r in rows if r.t <= t0) and q_connected and not p_connected
    return AgreementResult(t0, beta, tuple(rows), q_connected, p_connected, holds)
