"""
Young functions, their conjugates and the elementary inequalities between them.

Built-in pairs: Phi1(x) = cosh(x) - 1 with conjugate Psi1(y) = y asinh(y) - sqrt(1+y^2) + 1, and
Phi2(x) = exp|x| - |x| - 1 with conjugate Psi2(y) = (1+|y|) log(1+|y|) - |y|.
"""
import logging
import math
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar
from scipy.special import lambertw

from .orlicz_utilities import InvalidYoungFunctionError, Verdict

BUILTIN_NAMES = ('Phi1', 'Phi2', 'Psi1', 'Psi2')
_CONJUGATES = {'Phi1': 'Psi1', 'Psi1': 'Phi1', 'Phi2': 'Psi2', 'Psi2': 'Phi2'}
_GROWTH = {'Phi1': 'exponential', 'Phi2': 'exponential', 'Psi1': 'xlogx', 'Psi2': 'xlogx'}


class YoungFunction(NamedTuple):
    """ An even convex function with Phi(0) = 0, finite near 0, tending to infinity

    growth is 'exponential', 'xlogx' or None (unknown, user supplied); local asymptotic classes are only propagated
    through functions of known growth.
    """
    name: str
    phi: Callable
    inverse: Callable
    derivative: Optional[Callable] = None
    growth: Optional[str] = None
    analytic: bool = False
    conjugate_name: Optional[str] = None

    def __call__(self, x):
        return self.phi(np.asarray(x, dtype=float))

    def value(self, x):
        return float(self.phi(np.array([float(x)]))[0])

    @property
    def conjugate(self):
        """ The conjugate Young function: closed form for built-ins, numeric Legendre transform otherwise """
        if self.conjugate_name is not None:
            return builtin(self.conjugate_name)
        return numeric_conjugate(self)


#####################
# Built-in evaluators
#####################

def _phi1(x):
    return 2.0 * np.sinh(0.5 * x) ** 2


def _phi2(x):
    a = np.abs(x)
    return np.expm1(a) - a


def _psi1(y):
    a = np.abs(y)
    return a * np.arcsinh(a) - a * a / (np.sqrt(1.0 + a * a) + 1.0)


def _psi2(y):
    a = np.abs(np.asarray(y, dtype=float))
    with np.errstate(invalid='ignore'):
        direct = (1.0 + a) * np.log1p(a) - a
    # alternating series sum_k (-1)^k a^k / (k(k-1)) avoids cancellation near 0
    series = np.zeros_like(a)
    power = a * a
    for k in range(2, 16):
        series = series + (-1) ** k * power / (k * (k - 1))
        power = power * a
    return np.where(a < 0.1, series, direct)


def _phi1_inverse(v):
    return np.arccosh(1.0 + np.asarray(v, dtype=float))


def _phi2_inverse(v):
    v = np.asarray(v, dtype=float)
    z = np.real(lambertw(-np.exp(-1.0 - v), -1))
    return np.where(v > 0, -z - 1.0 - v, 0.0)


def _psi2_inverse(v):
    v = np.asarray(v, dtype=float)
    t = np.real(lambertw((v - 1.0) / math.e, 0))
    return np.where(v > 0, np.exp(t + 1.0) - 1.0, 0.0)


def _numeric_inverse(phi):
    """ Inverse on [0, inf) of an increasing phi by root bracketing """

    def scalar(v):
        if v <= 0:
            return 0.0
        hi = 1.0
        while float(phi(np.array([hi]))[0]) < v:
            hi *= 2.0
            if hi > 1e300:
                return math.inf
        return brentq(lambda x: float(phi(np.array([x]))[0]) - v, 0.0, hi, xtol=1e-15, rtol=1e-15)

    def inverse(v):
        v = np.asarray(v, dtype=float)
        out = np.array([scalar(float(t)) for t in np.atleast_1d(v)])
        return out.reshape(v.shape)

    return inverse


@lru_cache(maxsize=None)
def builtin(name):
    """ Built-in Young function by name

    Parameters
    ----------
    name: one of 'Phi1', 'Phi2', 'Psi1', 'Psi2'

    Returns
    -------
    YoungFunction
    """
    evaluators = {
        'Phi1': (_phi1, _phi1_inverse, lambda x: np.sinh(x)),
        'Phi2': (_phi2, _phi2_inverse, lambda x: np.sign(x) * np.expm1(np.abs(x))),
        'Psi1': (_psi1, _numeric_inverse(_psi1), lambda y: np.arcsinh(y)),
        'Psi2': (_psi2, _psi2_inverse, lambda y: np.sign(y) * np.log1p(np.abs(y))),
    }
    if name not in evaluators:
        raise ValueError(f'young.py::builtin() - unknown Young function {name!r}; expected one of {BUILTIN_NAMES}')
    phi, inverse, derivative = evaluators[name]
    return YoungFunction(name, phi, inverse, derivative, _GROWTH[name], True, _CONJUGATES[name])


def _vectorize(func):
    def evaluate(x):
        x = np.asarray(x, dtype=float)
        try:
            out = np.asarray(func(x), dtype=float)
            if out.shape == x.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.vectorize(lambda t: float(func(float(t))))(x).astype(float)

    return evaluate


def validate_young(phi, grid=None, tolerance=1e-12):
    """ Axiom checks on a test grid: Phi(0) = 0, evenness, midpoint convexity, finiteness near 0, growth

    Returns
    -------
    List of violation messages (empty when valid)
    """
    grid = np.linspace(-10.0, 10.0, 401) if grid is None else np.asarray(grid, dtype=float)
    problems = []
    with np.errstate(all='ignore'):
        zero = float(phi(np.array([0.0]))[0])
        values = phi(grid)
        mirrored = phi(-grid)
    if abs(zero) > tolerance:
        problems.append(f'Phi(0) = {zero}')
    scale = 1.0 + np.abs(values)
    if np.any(np.abs(values - mirrored) > tolerance * scale):
        problems.append('Phi is not even')
    if np.any(values < -tolerance):
        problems.append('Phi takes negative values')
    near_zero = phi(np.array([1e-3, -1e-3]))
    if not np.all(np.isfinite(near_zero)):
        problems.append('Phi is not finite near 0')
    xs = np.sort(grid)
    left, right = xs[:-2], xs[2:]
    with np.errstate(all='ignore'):
        mid = phi(0.5 * (left + right))
        chord = 0.5 * (phi(left) + phi(right))
    finite = np.isfinite(chord)
    if np.any(mid[finite] > chord[finite] + tolerance * (1.0 + np.abs(chord[finite]))):
        problems.append('Phi is not midpoint convex')
    positive = xs[xs > 0]
    if positive.size and not float(phi(positive[-1:])[0]) > float(phi(positive[:1])[0]):
        problems.append('Phi does not grow')
    return problems


def from_callable(func, name='user', derivative=None, inverse=None, grid=None):
    """ Wraps a user-supplied Young function after a validation pass

    Raises
    ------
    InvalidYoungFunctionError when an axiom fails on the test grid
    """
    phi = _vectorize(func)
    problems = validate_young(phi, grid)
    if problems:
        raise InvalidYoungFunctionError(f'young.py::from_callable() - {name}: ' + '; '.join(problems))
    return YoungFunction(name, phi, _vectorize(inverse) if inverse else _numeric_inverse(phi),
                         _vectorize(derivative) if derivative else None, None, False, None)


#####################
# Conjugates
#####################

class ConjugateValue(NamedTuple):
    """ sup_x {x y - Phi(x)}; attained False when the supremum was not found in the search range """
    value: float
    argmax: float
    attained: bool
    verdict: Verdict


def conjugate_value(phi, y, max_expansions=200, xtol=1e-12):
    """ Numeric Legendre transform Psi(y) = sup_x {x y - Phi(x)}

    The objective x -> x|y| - Phi(x) is concave; its maximizer lies on x >= 0 by evenness. The bracket expands
    geometrically until the objective decreases, then golden-section search locates the maximum.

    Parameters
    ----------
    phi: YoungFunction
    y: real

    Returns
    -------
    ConjugateValue. Inconclusive when the objective still increases at the end of the search range.
    """
    a = abs(float(y))
    if a == 0:
        return ConjugateValue(0.0, 0.0, True, Verdict.FINITE)

    def h(x):
        with np.errstate(over='ignore'):
            return x * a - phi.value(x)

    x = 1.0
    if h(2.0 * x) > h(x):
        for _ in range(max_expansions):
            if h(2.0 * x) <= h(x):
                break
            x *= 2.0
        else:
            logging.info(f'young: conjugate of {phi.name} at {y} not attained below {x:g}')
            return ConjugateValue(math.inf, x, False, Verdict.INCONCLUSIVE)
    else:
        while x > 1e-300 and h(0.5 * x) >= h(x):
            x *= 0.5
    lo, mid, hi = 0.5 * x, x, 2.0 * x
    try:
        result = minimize_scalar(lambda t: -h(t), bracket=(lo, mid, hi), method='golden', options={'xtol': xtol})
    except ValueError:
        result = minimize_scalar(lambda t: -h(t), bounds=(0.0, hi), method='bounded', options={'xatol': xtol * hi})
    best = max(float(-result.fun), 0.0)
    return ConjugateValue(best, float(result.x), True, Verdict.FINITE)


def numeric_conjugate(phi, name=None):
    """ Young function whose evaluator is conjugate_value of phi """

    def evaluate(y):
        y = np.asarray(y, dtype=float)
        out = np.array([conjugate_value(phi, float(t)).value for t in np.atleast_1d(y)])
        return out.reshape(y.shape)

    return YoungFunction(name or f'{phi.name}*', evaluate, _numeric_inverse(evaluate), None, None, False, None)


#####################
# Inequalities
#####################

def fenchel_young_check(phi, psi, xs, ys):
    """ Maximum over the grid xs x ys of |xy| - Phi(x) - Psi(y); nonpositive up to rounding """
    x, y = np.meshgrid(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), indexing='ij')
    with np.errstate(over='ignore'):
        violation = np.abs(x * y) - phi(x) - psi(y)
    return float(np.max(violation))


def equivalence_check(phi, phi_prime, x0, c1, c2, grid=None, tolerance=1e-12):
    """ True iff Phi(c1 x) <= Phi'(x) <= Phi(c2 x) at every grid point x >= x0 """
    if not 0 < c1 < c2 or x0 <= 0:
        raise ValueError('young.py::equivalence_check() - requires 0 < c1 < c2 and x0 > 0')
    grid = np.geomspace(x0, 30.0 * max(x0, 1.0), 200) if grid is None else np.asarray(grid, dtype=float)
    xs = grid[grid >= x0]
    with np.errstate(over='ignore', invalid='ignore'):
        lower, middle, upper = phi(c1 * xs), phi_prime(xs), phi(c2 * xs)
    slack = tolerance * (1.0 + np.abs(middle))
    return bool(np.all(lower <= middle + slack) and np.all(middle <= upper + slack))


def find_equivalence_constants(phi, phi_prime, x0, grid=None, candidates=None):
    """ Largest c1 and smallest c2 from the candidate list with Phi(c1 x) <= Phi'(x) <= Phi(c2 x) on the grid

    Returns
    -------
    (c1, c2) or None when no candidate pair works
    """
    candidates = np.geomspace(1.0 / 64, 64.0, 49) if candidates is None else np.sort(np.asarray(candidates))
    grid = np.geomspace(x0, 30.0 * max(x0, 1.0), 200) if grid is None else np.asarray(grid, dtype=float)
    xs = grid[grid >= x0]
    with np.errstate(over='ignore', invalid='ignore'):
        middle = phi_prime(xs)
        slack = 1e-12 * (1.0 + np.abs(middle))
        lower_ok = [c for c in candidates if np.all(phi(c * xs) <= middle + slack)]
        upper_ok = [c for c in candidates if np.all(middle <= phi(c * xs) + slack)]
    if not lower_ok or not upper_ok:
        return None
    c1, c2 = float(max(lower_ok)), float(min(upper_ok))
    return (c1, c2) if c1 < c2 else None


def delta2_bound_check(beta, ys):
    """ Maximum over y of Psi2(beta y) / (max(beta^2, 1) Psi2(y)); at most 1 by the generalized Delta2 bound """
    if beta <= 0:
        raise ValueError('young.py::delta2_bound_check() - beta must be positive')
    ys = np.asarray(ys, dtype=float)
    ys = ys[ys > 0]
    psi2 = builtin('Psi2')
    return float(np.max(psi2(beta * ys) / (max(beta * beta, 1.0) * psi2(ys))))


def psi2_integral_form(y):
    """ Psi2(y) from its integral representation int_0^|y| (|y| - t)/(1 + t) dt """
    a = abs(float(y))
    value, _ = quad(lambda t: (a - t) / (1.0 + t), 0.0, a, epsabs=1e-14, epsrel=1e-13)
    return value
