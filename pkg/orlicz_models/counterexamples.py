"""
Explicit counterexample densities built from countably many power-law pieces, their series constants, and the
closed-form divergence series with rigorous tail bounds.

divergenza: q(x) = C sum_n 1/(n^3 C_n) (x - (1 - 1/n))^{-n/(n+1)} on (1 - 1/n, 1 - 1/(n+1)],
            C_n = (n+1) (n(n+1))^{-1/(n+1)}, C = 1/zeta(3). q is in L^1 but no moment E[q^{1+eps}] is finite.
co419:      the same construction folded onto both sides of x = 1/2, with C_n = 2(n+1) (2n(n+1))^{-1/(n+1)}.
"""
import logging
import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .forms import PowerForm
from .measure_core import (Density, Piece, QuadratureSpec, SeriesTail, constant_variable, integrate, lebesgue,
                           pointwise_ratio)
from .orlicz_utilities import Verdict
from .transforms import LogTransform, PowerTransform, XLogX

ZETA_TERMS = 100000
DIRECTIONS = ('q||p', 'p||q')


class SeriesValue(NamedTuple):
    """ Partial sum of a series with a bound on the remainder """
    partial_sum: float
    terms_used: int
    tail_bound: float
    value_interval: tuple


class MomentVerdict(NamedTuple):
    """ Verdict for E[q^{1+eps}] with the first piece whose integral diverges """
    epsilon: float
    verdict: Verdict
    first_divergent_piece: int


#####################
# Constants
#####################

@lru_cache(maxsize=None)
def zeta3_bounds(terms=ZETA_TERMS):
    """ Enclosure of zeta(3): partial sum plus the integral bounds 1/(2(N+1)^2) <= tail <= 1/(2N^2) """
    n = np.arange(1, terms + 1, dtype=float)
    partial = math.fsum((1.0 / n ** 3).tolist())
    return partial + 0.5 / (terms + 1) ** 2, partial + 0.5 / terms ** 2


@lru_cache(maxsize=None)
def zeta3(terms=ZETA_TERMS):
    lo, hi = zeta3_bounds(terms)
    return 0.5 * (lo + hi)


def divergenza_constant():
    """ C = 1/zeta(3) """
    return 1.0 / zeta3()


def divergenza_cn(n):
    n = np.asarray(n, dtype=float)
    return (n + 1) * (n * (n + 1)) ** (-1.0 / (n + 1))


def co419_cn(n):
    n = np.asarray(n, dtype=float)
    return 2 * (n + 1) * (2 * n * (n + 1)) ** (-1.0 / (n + 1))


def _singular_limit():
    return (Piece(0.0, 1.0, PowerForm.anchored(1.0, 0.0, -1.0)),)


def _check_direction(direction):
    if direction not in DIRECTIONS:
        raise ValueError(f'counterexamples.py - unknown direction {direction!r}; expected one of {DIRECTIONS}')


#####################
# divergenza
#####################

@lru_cache(maxsize=16384)
def _divergenza_pieces(n):
    c = divergenza_constant()
    a, b = 1.0 - 1.0 / n, 1.0 - 1.0 / (n + 1)
    k = c / (n ** 3 * float(divergenza_cn(n)))
    return (Piece(a, b, PowerForm.anchored(k, a, -n / (n + 1))),)


def _divergenza_locate(x):
    if x >= 1:
        return None
    return max(1, int(1.0 / (1.0 - x)))


@lru_cache(maxsize=None)
def divergenza_density():
    """ The density whose every moment E[q^{1+eps}] diverges although D(q||1) and D(1||q) are finite

    Returns
    -------
    Density made of a series tail only; piece n carries mass C/n^3
    """
    c = divergenza_constant()
    tail = SeriesTail(1, _divergenza_pieces, 1.0, _singular_limit(), 'divergenza',
                      mass_bound=lambda big_n: c / (2.0 * big_n ** 2), locate=_divergenza_locate)
    return Density([], tail, 'divergenza')


def divergenza_piece_masses(count):
    """ Closed-form masses of the first `count` pieces (C/n^3 up to rounding) """
    return np.array([_divergenza_pieces(n)[0].form.integral(*_divergenza_pieces(n)[0][:2])
                     for n in range(1, count + 1)])


def divergenza_moment_verdict(epsilon):
    """ E[q^{1+eps}] diverges: piece n has exponent -n(1+eps)/(n+1), which is <= -1 exactly when n eps >= 1

    Parameters
    ----------
    epsilon: float > 0

    Returns
    -------
    MomentVerdict with the first divergent piece index
    """
    if not epsilon > 0:
        raise ValueError('counterexamples.py::divergenza_moment_verdict() - epsilon must be positive')
    n = max(1, math.ceil(1.0 / epsilon))
    while n > 1 and (n - 1) * epsilon >= 1:
        n -= 1
    while n * epsilon < 1:
        n += 1
    return MomentVerdict(epsilon, Verdict.DIVERGENT, n)


def divergenza_moment(theta, spec=None):
    """ E_mu[q^theta] through the integration engine """
    return integrate(divergenza_density(), None, spec, PowerTransform(theta))


def divergenza_kl_terms(direction, n):
    """ Per-piece closed forms of D(q||1) and D(1||q)

    Parameters
    ----------
    direction: 'q||p' or 'p||q' (p = uniform)
    n: array of piece indices

    Returns
    -------
    numpy array of terms
    """
    _check_direction(direction)
    c = divergenza_constant()
    n = np.asarray(n, dtype=float)
    cn = divergenza_cn(n)
    log_nn = np.log(n * (n + 1))
    if direction == 'q||p':
        return c / n ** 3 * (np.log(c / (n ** 3 * cn)) + n / (n + 1) * (log_nn + n + 1))
    return np.log(n ** 3 * cn / c) / (n * (n + 1)) - (log_nn + 1) / (n + 1) ** 2


def divergenza_kl_tail_bound(direction, big_n):
    """ Bound on |sum_{n > N} term(n)|

    q||p: the terms simplify to C (n + log C - 2 log n) / n^3 <= C/n^2, so the remainder is at most C/N.
    p||q: |term(n)| <= (6 log(n+1) + |log C| + 1)/n^2, whose remainder is at most
          6(1 + log N)/N + 3/N^2 + (|log C| + 1)/N.
    """
    _check_direction(direction)
    c = divergenza_constant()
    big_n = float(big_n)
    if direction == 'q||p':
        return c / big_n
    return 6.0 * (1.0 + math.log(big_n)) / big_n + 3.0 / big_n ** 2 + (abs(math.log(c)) + 1.0) / big_n


def divergenza_kl_series(direction, big_n):
    """ Partial sum of N closed-form terms in ascending order with its tail bound

    Returns
    -------
    SeriesValue
    """
    if big_n < 1:
        raise ValueError('counterexamples.py::divergenza_kl_series() - N must be at least 1')
    terms = divergenza_kl_terms(direction, np.arange(1, big_n + 1))
    partial = math.fsum(terms.tolist())
    tail = divergenza_kl_tail_bound(direction, big_n)
    logging.debug(msg=f'counterexamples: {direction} series N={big_n} partial={partial:.12g} tail={tail:.3g}')
    return SeriesValue(partial, int(big_n), tail, (partial - tail, partial + tail))


def divergenza_kl_truncated(direction, big_n):
    """ The same divergence restricted to the first N pieces, integrated piece by piece by the engine

    Returns
    -------
    IntegralValue
    """
    _check_direction(direction)
    q, p = divergenza_density(), lebesgue()
    spec = QuadratureSpec(fixed_terms=int(big_n))
    if direction == 'q||p':
        return integrate(pointwise_ratio(q, p), p, spec, XLogX())
    return integrate(pointwise_ratio(p, q), p, spec, LogTransform())


#####################
# co419
#####################

@lru_cache(maxsize=16384)
def _co419_pieces(n):
    c = divergenza_constant()
    k = c / (n ** 3 * float(co419_cn(n)))
    s = n / (n + 1)
    left_a, left_b = 0.5 - 0.5 / n, 0.5 - 0.5 / (n + 1)
    right_a, right_b = 0.5 + 0.5 / (n + 1), 0.5 + 0.5 / n
    return (Piece(left_a, left_b, PowerForm.anchored(k, left_a, -s)),
            Piece(right_a, right_b, PowerForm.anchored(k, right_b, -s)))


def _co419_locate(x):
    d = abs(x - 0.5)
    if d == 0:
        return None
    return max(1, int(0.5 / d))


@lru_cache(maxsize=None)
def co419_density():
    """ Density with pieces accumulating at x = 1/2 from both sides; piece pair n carries mass C/n^3 """
    c = divergenza_constant()
    tail = SeriesTail(1, _co419_pieces, 0.5, _singular_limit(), 'co419',
                      mass_bound=lambda big_n: c / (2.0 * big_n ** 2), locate=_co419_locate)
    return Density([], tail, 'co419')


def co419_q(t0=0.25, beta=2.0):
    """ co419 on [0, t0], a rescaled beta density on (t0, 1]:
    q(x) = p(x) 1_[0,t0](x) + (1 - F(t0))/(1 - t0^beta) beta x^{beta-1} 1_(t0,1](x)

    Both densities share their restrictions to [0, t] for every t <= t0.
    """
    if not 0 < t0 < 0.5:
        raise ValueError('counterexamples.py::co419_q() - t0 must lie in (0, 1/2)')
    if not beta > 0:
        raise ValueError('counterexamples.py::co419_q() - beta must be positive')
    p = co419_density()
    clipped = p.clip(t0)
    mass = integrate(constant_variable(1.0), clipped)
    k = (1.0 - mass.value) / (1.0 - t0 ** beta) * beta
    pieces = list(clipped.pieces) + [Piece(t0, 1.0, PowerForm.anchored(k, 0.0, beta - 1.0))]
    return Density(pieces, None, f'co419_q(t0={t0:g},beta={beta:g})')


def co419_head_mass(t0):
    """ F(t0) of the co419 density as an IntegralValue """
    return integrate(constant_variable(1.0), co419_density().clip(t0))

