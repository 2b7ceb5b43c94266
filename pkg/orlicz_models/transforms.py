"""
Pointwise transforms g applied to a random variable inside an integral, E_w[g(f)].

Each transform maps local asymptotic classes (so divergence is decided analytically) and, where possible, reduces
g(form) to a short sum of terms  coefficient * power_form * log_form^j  (j in {0, 1}) with closed-form integrals.
"""
import math
from abc import ABC, abstractmethod
from typing import NamedTuple, Optional

import numpy as np

from .forms import Local, LogForm, PowerForm


class Term(NamedTuple):
    """ coefficient * power * log, where a missing power or log factor means 1 """
    coefficient: float
    power: Optional[PowerForm] = None
    log: Optional[LogForm] = None


def _midpoint_value(form, a, b):
    return float(np.asarray(form(np.array([0.5 * (a + b)])), dtype=float)[0])


def _xlogx_local(loc):
    """ Local class of |v| * |log|v|| for v in the given class """
    if loc.is_zero:
        return Local(0.0)
    if loc.essential == 1:
        return Local(1.0, 0.0, 0.0, 1)
    k = abs(loc.coefficient)
    if loc.order != 0:
        return Local(k * abs(loc.order), loc.order, loc.log_order + 1)
    if loc.log_order != 0:
        return Local(k * abs(loc.log_order), 0.0, loc.log_order + 1)
    return Local(abs(k * math.log(k)) if k > 0 else 0.0)


class Transform(ABC):
    annotated = True
    breakpoints = ()

    @abstractmethod
    def __call__(self, v):
        pass

    @abstractmethod
    def local(self, loc) -> Optional[Local]:
        pass

    def reduce(self, form, a, b):
        """ List of Terms equal to g(form) on (a, b), or None """
        return None

    def envelope(self):
        """ A reducible transform G with |g| <= G, used to bound segments quadrature cannot resolve """
        return None


class Identity(Transform):
    def __repr__(self):
        return 'id'

    def __call__(self, v):
        return v

    def local(self, loc):
        return loc

    def reduce(self, form, a, b):
        if isinstance(form, PowerForm):
            return [Term(1.0, form)]
        if isinstance(form, LogForm):
            return [Term(1.0, None, form)]
        return None


class Absolute(Transform):
    breakpoints = (0.0,)

    def __repr__(self):
        return 'abs'

    def __call__(self, v):
        return np.abs(v)

    def local(self, loc):
        return loc._replace(coefficient=abs(loc.coefficient))

    def reduce(self, form, a, b):
        terms = Identity().reduce(form, a, b)
        if terms is None:
            return None
        sign = math.copysign(1.0, _midpoint_value(form, a, b))
        return [t._replace(coefficient=sign * t.coefficient) for t in terms]


class PowerTransform(Transform):
    """ v -> v^theta for positive v """

    def __init__(self, theta):
        self.theta = float(theta)

    def __repr__(self):
        return f'pow[{self.theta:g}]'

    def __call__(self, v):
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.asarray(v, dtype=float) ** self.theta

    def local(self, loc):
        return loc.power(self.theta)

    def reduce(self, form, a, b):
        if isinstance(form, PowerForm):
            return [Term(1.0, form.power(self.theta))]
        if isinstance(form, LogForm) and form.is_constant:
            return [Term(form.offset ** self.theta)]
        return None


class ExpTransform(Transform):
    """ v -> exp(alpha * v) """

    def __init__(self, alpha=1.0):
        self.alpha = float(alpha)

    def __repr__(self):
        return f'exp[{self.alpha:g}]'

    def __call__(self, v):
        with np.errstate(over='ignore'):
            return np.exp(self.alpha * np.asarray(v, dtype=float))

    def local(self, loc):
        if loc.is_zero or self.alpha == 0:
            return Local(1.0)
        sign = self.alpha * loc.coefficient
        if loc.essential == 1 or loc.order < 0:
            return Local(1.0, 0.0, 0.0, 1 if sign > 0 else -1)
        if loc.order > 0:
            return Local(1.0)
        if loc.log_order == 1:
            return Local(1.0, -sign)
        if loc.log_order > 1:
            return Local(1.0, 0.0, 0.0, 1 if sign > 0 else -1)
        if loc.log_order < 0:
            return Local(1.0)
        return Local(math.exp(sign))

    def reduce(self, form, a, b):
        if isinstance(form, LogForm):
            return [Term(1.0, form.exp(self.alpha))]
        if isinstance(form, PowerForm) and form.is_constant:
            return [Term(math.exp(self.alpha * form.coefficient))]
        return None


class LogTransform(Transform):
    """ v -> log v for positive v """

    def __repr__(self):
        return 'log'

    def __call__(self, v):
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.log(np.asarray(v, dtype=float))

    def local(self, loc):
        if loc.essential != 0 or loc.is_zero:
            return None
        if loc.order != 0:
            return Local(-loc.order, 0.0, 1.0)
        if loc.log_order != 0:
            # log|log y| is dominated by |log y|
            return Local(loc.log_order, 0.0, 1.0)
        return Local(math.log(abs(loc.coefficient)))

    def reduce(self, form, a, b):
        if isinstance(form, PowerForm):
            return [Term(1.0, None, form.log())]
        return None


class XLogX(Transform):
    """ v -> v log v with 0 log 0 = 0 """

    def __repr__(self):
        return 'xlogx'

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where(v > 0, v * np.log(np.where(v > 0, v, 1.0)), 0.0)

    def local(self, loc):
        if loc.is_zero:
            return Local(0.0)
        if loc.essential == 1:
            return Local(1.0, 0.0, 0.0, 1)
        out = _xlogx_local(loc)
        if loc.order > 0 or (loc.order == 0 and loc.log_order < 0):
            return out._replace(coefficient=-out.coefficient)
        if loc.order == 0 and loc.log_order == 0:
            k = loc.coefficient
            return Local(k * math.log(k) if k > 0 else 0.0)
        return out

    def reduce(self, form, a, b):
        if isinstance(form, PowerForm) and form.coefficient > 0:
            return [Term(1.0, form, form.log())]
        return None


class XLogPlus(Transform):
    """ v -> v (log v)^+ """
    breakpoints = (1.0,)

    def __repr__(self):
        return 'xlog+x'

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where(v > 1, v * np.log(np.where(v > 1, v, 1.0)), 0.0)

    def local(self, loc):
        if loc.bounded:
            limit = loc.limit
            return Local(limit * math.log(limit)) if limit > 1 else Local(0.0)
        return XLogX().local(loc)

    def reduce(self, form, a, b):
        if _midpoint_value(form, a, b) <= 1:
            return []
        return XLogX().reduce(form, a, b)


class XAbsLogEnvelope(Transform):
    """ v -> |s v| (1 + |log|s v||), a majorant of x log x type Young functions """

    def __init__(self, scale=1.0):
        self.scale = abs(float(scale))
        self.breakpoints = (0.0, 1.0 / self.scale, -1.0 / self.scale)

    def __repr__(self):
        return f'xabslog[{self.scale:g}]'

    def __call__(self, v):
        w = np.abs(self.scale * np.asarray(v, dtype=float))
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where(w > 0, w * (1 + np.abs(np.log(np.where(w > 0, w, 1.0)))), 0.0)

    def local(self, loc):
        if loc.bounded and not loc.vanishes:
            w = abs(self.scale * loc.limit)
            return Local(w * (1 + abs(math.log(w))))
        return _xlogx_local(loc.scaled(self.scale))

    def reduce(self, form, a, b):
        if not isinstance(form, PowerForm):
            return None
        g = PowerForm(abs(self.scale * form.coefficient), form.factors)
        sign = 1.0 if _midpoint_value(g, a, b) >= 1 else -1.0
        return [Term(1.0, g), Term(sign, g, g.log())]


class YoungTransform(Transform):
    """ v -> Phi(scale * v) for a Young function Phi """

    def __init__(self, young, scale=1.0):
        self.young = young
        self.scale = float(scale)
        self.annotated = young.growth is not None
        self.breakpoints = (0.0,) if young.name in ('Phi1', 'Phi2') else ()

    def __repr__(self):
        return f'{self.young.name}[{self.scale:g}]'

    def __call__(self, v):
        return self.young(self.scale * np.asarray(v, dtype=float))

    def local(self, loc):
        growth = self.young.growth
        if growth is None:
            return None
        s = self.scale
        if loc.is_zero or s == 0:
            return Local(0.0)
        if loc.vanishes:
            # Young functions are quadratic at the origin
            return Local((s * loc.coefficient) ** 2 / 2, 2 * loc.order, 2 * loc.log_order)
        if loc.bounded:
            return Local(float(self.young(np.array([s * loc.coefficient]))[0]))
        if growth == 'exponential':
            if loc.essential == 1 or loc.order < 0 or loc.log_order > 1:
                return Local(1.0, 0.0, 0.0, 1)
            lead = 0.5 if self.young.name == 'Phi1' else 1.0
            return Local(lead, -abs(s * loc.coefficient))
        if growth == 'xlogx':
            return _xlogx_local(loc.scaled(s))
        return None

    def reduce(self, form, a, b):
        name = self.young.name
        s = self.scale
        if isinstance(form, (PowerForm, LogForm)) and form.is_constant:
            c = form.coefficient if isinstance(form, PowerForm) else form.offset
            return [Term(float(self.young(np.array([s * c]))[0]))]
        if not isinstance(form, LogForm) or name not in ('Phi1', 'Phi2'):
            return None
        if name == 'Phi1':
            return [Term(0.5, form.exp(s)), Term(0.5, form.exp(-s)), Term(-1.0)]
        sign = 1.0 if _midpoint_value(form, a, b) >= 0 else -1.0
        return [Term(1.0, form.exp(sign * s)), Term(-sign * s, None, form), Term(-1.0)]

    def envelope(self):
        if self.young.growth == 'xlogx':
            return XAbsLogEnvelope(self.scale)
        return None


class CallableTransform(Transform):
    """ v -> phi(v) for a user function phi, continuous and positive on (0, inf).

    Local classes are only known where v has a finite positive limit (phi is continuous there).
    """

    def __init__(self, func, name='phi'):
        self.func = func
        self.name = name

    def __repr__(self):
        return self.name

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        try:
            out = np.asarray(self.func(v), dtype=float)
            if out.shape == v.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.vectorize(lambda t: float(self.func(float(t))))(v).astype(float)

    def local(self, loc):
        if loc.bounded and not loc.vanishes and loc.limit > 0:
            return Local(float(self(np.array([loc.limit]))[0]))
        return None
