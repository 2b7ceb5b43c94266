"""
Analytic forms living on a single piece (a, b] of [0, 1].

Every form knows how to evaluate itself, how it behaves near the endpoints of its piece (its local asymptotic class)
and, when one exists, its closed-form integral. Convergence of integrals is decided from the local classes only.
"""
import math
from abc import ABC, abstractmethod
from typing import NamedTuple, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq
from scipy.special import beta as beta_function

from .orlicz_utilities import Verdict


class Local(NamedTuple):
    """ Local asymptotic class of a function f near an anchor point a:
    f(x) ~ coefficient * |x-a|^order * |log|x-a||^log_order.

    essential = +1 marks growth faster than any power, -1 decay faster than any power (coefficient holds the sign).
    A coefficient of 0 means the function vanishes identically near the anchor.
    """
    coefficient: float
    order: float = 0.0
    log_order: float = 0.0
    essential: int = 0

    @property
    def is_zero(self):
        return self.coefficient == 0 or self.essential == -1

    @property
    def bounded(self):
        if self.is_zero:
            return True
        if self.essential == 1:
            return False
        return self.order > 0 or (self.order == 0 and self.log_order <= 0)

    @property
    def vanishes(self):
        if self.is_zero:
            return True
        if self.essential == 1:
            return False
        return self.order > 0 or (self.order == 0 and self.log_order < 0)

    @property
    def limit(self):
        """ Limit of the function at the anchor (0, the coefficient, or a signed infinity) """
        if self.vanishes:
            return 0.0
        if self.bounded:
            return float(self.coefficient)
        return math.copysign(math.inf, self.coefficient)

    def times(self, other):
        if other is None:
            return None
        if self.is_zero or other.is_zero:
            if self.essential == 1 or other.essential == 1:
                return None
            return Local(0.0)
        if self.essential or other.essential:
            return Local(math.copysign(1.0, self.coefficient * other.coefficient), 0.0, 0.0,
                         max(self.essential, other.essential))
        return Local(self.coefficient * other.coefficient, self.order + other.order,
                     self.log_order + other.log_order)

    def scaled(self, k):
        if k == 0:
            return Local(0.0)
        return self._replace(coefficient=k * self.coefficient)

    def power(self, theta):
        if theta == 0:
            return Local(1.0)
        if self.is_zero:
            return Local(0.0) if theta > 0 else Local(1.0, 0.0, 0.0, 1)
        if self.essential:
            return Local(1.0, 0.0, 0.0, self.essential if theta > 0 else -self.essential)
        return Local(abs(self.coefficient) ** theta, self.order * theta, self.log_order * theta)

    def integrability(self):
        """ Finite iff the function is integrable near the anchor """
        if self.is_zero:
            return Verdict.FINITE
        if self.essential == 1:
            return Verdict.DIVERGENT
        if self.order == -1 and self.log_order < -1:
            return Verdict.FINITE
        return classify_power_convergence(self.order)


def classify_power_convergence(r):
    """ Exact convergence rule for the integral of |x-a|^r near a

    Parameters
    ----------
    r: float - exponent

    Returns
    -------
    Verdict.FINITE iff r > -1, otherwise Verdict.DIVERGENT
    """
    return Verdict.FINITE if r > -1 else Verdict.DIVERGENT


def dominance_key(local):
    """ Growth ordering of local classes: larger keys dominate in a sum """
    if local.is_zero:
        return (-2, 0.0, 0.0)
    return (local.essential, -local.order, local.log_order)


def _real_roots(poly, a, b):
    if poly.degree() < 1:
        return []
    roots = []
    for z in poly.roots():
        if abs(z.imag) <= 1e-10 * max(1.0, abs(z.real)) and a < z.real < b:
            roots.append(float(z.real))
    return sorted(set(roots))


def _log_derivative_roots(factors, a, b):
    """ Zeros of sum_i r_i / (x - z_i) inside (a, b) """
    if len(factors) < 2:
        return []
    numerator = Polynomial([0.0])
    for i, (_, r) in enumerate(factors):
        others = [z for j, (z, _) in enumerate(factors) if j != i]
        numerator = numerator + r * Polynomial.fromroots(others)
    return _real_roots(numerator, a, b)


def _xlogx_minus_x(y):
    return 0.0 if y == 0 else y * math.log(y) - y


class Form(ABC):
    """ A function on one piece. Forms are immutable. """
    annotated = True

    @abstractmethod
    def __call__(self, x):
        pass

    @abstractmethod
    def local(self, anchor, side) -> Optional[Local]:
        """ Local class near anchor, approached from the right (side=+1) or the left (side=-1). None if unknown. """

    def at_offset(self, anchor, side, y):
        """ Evaluates f(anchor + side*y), keeping precision for tiny offsets y where the form allows it """
        return self(anchor + side * np.asarray(y, dtype=float))

    def integral(self, a, b):
        """ Closed-form integral over (a, b), or None """
        return None

    def level_crossings(self, level, a, b):
        """ Points of (a, b) where the form crosses the given level """
        xs = np.linspace(a, b, 513)[1:-1]
        with np.errstate(all='ignore'):
            values = np.asarray(self(xs), dtype=float) - level
        crossings = []
        for i in range(len(xs) - 1):
            v0, v1 = values[i], values[i + 1]
            if not (np.isfinite(v0) and np.isfinite(v1)):
                continue
            if v0 == 0:
                crossings.append(float(xs[i]))
            elif v0 * v1 < 0:
                crossings.append(brentq(lambda x: float(self(np.array([x]))[0]) - level, xs[i], xs[i + 1],
                                        xtol=1e-15))
        return sorted(set(crossings))

    def critical_points(self, a, b):
        """ Interior stationary points, or None when they cannot be found exactly """
        return None

    @property
    def is_constant(self):
        return False

    def scaled(self, k):
        return SumForm((self,), (k,))


class PowerForm(Form):
    """ coefficient * prod_i |x - center_i|^exponent_i

    Constants, anchored powers c(x-a)^r / c(b-x)^r and beta powers c x^r are all power forms.
    """

    def __init__(self, coefficient, factors=()):
        merged = {}
        for center, exponent in factors:
            merged[float(center)] = merged.get(float(center), 0.0) + float(exponent)
        self.coefficient = float(coefficient)
        self.factors = tuple(sorted((z, r) for z, r in merged.items() if r != 0))

    @classmethod
    def constant(cls, c):
        return cls(c)

    @classmethod
    def anchored(cls, c, center, exponent):
        return cls(c, ((center, exponent),))

    def __repr__(self):
        terms = ''.join(f'*|x-{z:g}|^{r:g}' for z, r in self.factors)
        return f'PowerForm({self.coefficient:g}{terms})'

    def __eq__(self, other):
        return isinstance(other, PowerForm) and self.coefficient == other.coefficient and \
            self.factors == other.factors

    def __hash__(self):
        return hash((self.coefficient, self.factors))

    @property
    def is_constant(self):
        return not self.factors

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.coefficient)
        with np.errstate(divide='ignore', invalid='ignore'):
            for z, r in self.factors:
                out = out * np.abs(x - z) ** r
        return out

    def at_offset(self, anchor, side, y):
        y = np.asarray(y, dtype=float)
        out = np.full(y.shape, self.coefficient)
        with np.errstate(divide='ignore', invalid='ignore'):
            for z, r in self.factors:
                d = y if z == anchor else np.abs(anchor + side * y - z)
                out = out * d ** r
        return out

    def local(self, anchor, side):
        order = 0.0
        k = self.coefficient
        for z, r in self.factors:
            if z == anchor:
                order += r
            else:
                k *= abs(anchor - z) ** r
        return Local(k, order)

    def integral(self, a, b):
        c = self.coefficient
        if c == 0 or b <= a:
            return 0.0
        if not self.factors:
            return c * (b - a)
        if len(self.factors) == 1:
            z, r = self.factors[0]

            def primitive(y):
                if r == -1:
                    return -math.inf if y == 0 else math.log(y)
                if y == 0:
                    return 0.0 if r > -1 else -math.inf
                return y ** (r + 1) / (r + 1)

            if z <= a:
                value = primitive(b - z) - primitive(a - z)
            elif z >= b:
                value = primitive(z - a) - primitive(z - b)
            else:
                return None
            return c * value if math.isfinite(value) else math.inf
        if len(self.factors) == 2:
            (z1, r1), (z2, r2) = self.factors
            if z1 == a and z2 == b and r1 > -1 and r2 > -1:
                return c * (b - a) ** (r1 + r2 + 1) * float(beta_function(r1 + 1, r2 + 1))
        return None

    def power(self, theta):
        if theta == 0:
            return PowerForm(1.0)
        return PowerForm(self.coefficient ** theta, tuple((z, r * theta) for z, r in self.factors))

    def times(self, other):
        return PowerForm(self.coefficient * other.coefficient, self.factors + other.factors)

    def scaled(self, k):
        return PowerForm(k * self.coefficient, self.factors)

    def log(self):
        if self.coefficient <= 0:
            raise ValueError('forms.py::PowerForm::log() - logarithm of a non-positive power form')
        return LogForm(math.log(self.coefficient), self.factors)

    def level_crossings(self, level, a, b):
        if not self.factors:
            return []
        if len(self.factors) == 1:
            z, r = self.factors[0]
            if level / self.coefficient <= 0:
                return []
            d = (level / self.coefficient) ** (1.0 / r)
            return sorted(x for x in {z + d, z - d} if a < x < b)
        return super().level_crossings(level, a, b)

    def critical_points(self, a, b):
        return _log_derivative_roots(self.factors, a, b)

    def as_polynomial(self, a, b):
        """ The same function as a PolynomialForm on (a, b] when every exponent is a nonnegative integer """
        poly = Polynomial([self.coefficient])
        for z, r in self.factors:
            if r < 0 or r != int(r):
                return None
            base = Polynomial([-z, 1.0]) if z <= a else Polynomial([z, -1.0])
            poly = poly * base ** int(r)
        return PolynomialForm(poly)


class LogForm(Form):
    """ offset + sum_i exponent_i * log|x - center_i|, i.e. the logarithm of a positive power form """

    def __init__(self, offset, factors=()):
        merged = {}
        for center, exponent in factors:
            merged[float(center)] = merged.get(float(center), 0.0) + float(exponent)
        self.offset = float(offset)
        self.factors = tuple(sorted((z, r) for z, r in merged.items() if r != 0))

    def __repr__(self):
        terms = ''.join(f' + {r:g}*log|x-{z:g}|' for z, r in self.factors)
        return f'LogForm({self.offset:g}{terms})'

    @property
    def is_constant(self):
        return not self.factors

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.offset)
        with np.errstate(divide='ignore', invalid='ignore'):
            for z, r in self.factors:
                out = out + r * np.log(np.abs(x - z))
        return out

    def at_offset(self, anchor, side, y):
        y = np.asarray(y, dtype=float)
        out = np.full(y.shape, self.offset)
        with np.errstate(divide='ignore', invalid='ignore'):
            for z, r in self.factors:
                d = y if z == anchor else np.abs(anchor + side * y - z)
                out = out + r * np.log(d)
        return out

    def local(self, anchor, side):
        at_anchor = sum(r for z, r in self.factors if z == anchor)
        if at_anchor != 0:
            # r*log y = -r*|log y| for y < 1
            return Local(-at_anchor, 0.0, 1.0)
        value = self.offset + sum(r * math.log(abs(anchor - z)) for z, r in self.factors)
        return Local(value)

    def integral(self, a, b):
        total = [self.offset * (b - a)]
        for z, r in self.factors:
            if z <= a:
                total.append(r * (_xlogx_minus_x(b - z) - _xlogx_minus_x(a - z)))
            elif z >= b:
                total.append(r * (_xlogx_minus_x(z - a) - _xlogx_minus_x(z - b)))
            else:
                return None
        return math.fsum(total)

    def exp(self, s=1.0):
        return PowerForm(math.exp(s * self.offset), tuple((z, s * r) for z, r in self.factors))

    def scaled(self, k):
        return LogForm(k * self.offset, tuple((z, k * r) for z, r in self.factors))

    def shifted(self, k):
        return LogForm(self.offset + k, self.factors)

    def plus(self, other):
        return LogForm(self.offset + other.offset, self.factors + other.factors)

    def level_crossings(self, level, a, b):
        if not self.factors:
            return []
        if len(self.factors) == 1:
            z, r = self.factors[0]
            d = math.exp((level - self.offset) / r)
            return sorted(x for x in {z + d, z - d} if a < x < b)
        return super().level_crossings(level, a, b)

    def critical_points(self, a, b):
        return _log_derivative_roots(self.factors, a, b)


class PolynomialForm(Form):
    """ Polynomial pieces such as (4 + 2x)/5 """

    def __init__(self, poly):
        if not isinstance(poly, Polynomial):
            poly = Polynomial(poly)
        self.poly = poly.trim()

    def __repr__(self):
        return f'PolynomialForm({list(self.poly.coef)})'

    @property
    def is_constant(self):
        return self.poly.degree() < 1

    def __call__(self, x):
        return np.asarray(self.poly(np.asarray(x, dtype=float)), dtype=float)

    def local(self, anchor, side):
        scale = max(1.0, float(np.max(np.abs(self.poly.coef))))
        p = self.poly
        for k in range(p.degree() + 1):
            v = float(p(anchor)) / math.factorial(k)
            if abs(v) > 1e-13 * scale:
                return Local(v * side ** k, float(k))
            p = p.deriv()
        return Local(0.0)

    def integral(self, a, b):
        primitive = self.poly.integ()
        return float(primitive(b) - primitive(a))

    def level_crossings(self, level, a, b):
        return _real_roots(self.poly - level, a, b)

    def critical_points(self, a, b):
        return _real_roots(self.poly.deriv(), a, b)

    def scaled(self, k):
        return PolynomialForm(self.poly * k)


class RationalForm(Form):
    """ numerator / denominator, both polynomials; denominator positive on the piece """

    def __init__(self, numerator, denominator):
        self.numerator = numerator
        self.denominator = denominator

    def __repr__(self):
        return f'RationalForm({list(self.numerator.coef)} / {list(self.denominator.coef)})'

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide='ignore', invalid='ignore'):
            return self.numerator(x) / self.denominator(x)

    def local(self, anchor, side):
        num = PolynomialForm(self.numerator).local(anchor, side)
        den = PolynomialForm(self.denominator).local(anchor, side)
        if den.is_zero:
            return None
        return num.times(den.power(-1.0).scaled(math.copysign(1.0, den.coefficient)))

    def level_crossings(self, level, a, b):
        return _real_roots(self.numerator - level * self.denominator, a, b)

    def critical_points(self, a, b):
        n, d = self.numerator, self.denominator
        return _real_roots(n.deriv() * d - n * d.deriv(), a, b)

    def scaled(self, k):
        return RationalForm(self.numerator * k, self.denominator)


class SumForm(Form):
    """ sum_i weight_i * term_i """

    def __init__(self, terms, weights):
        self.terms = tuple(terms)
        self.weights = tuple(float(w) for w in weights)
        self.annotated = all(t.annotated for t in self.terms)

    def __repr__(self):
        return 'SumForm(' + ' + '.join(f'{w:g}*{t!r}' for t, w in zip(self.terms, self.weights)) + ')'

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return sum(w * np.asarray(t(x), dtype=float) for t, w in zip(self.terms, self.weights))

    def at_offset(self, anchor, side, y):
        return sum(w * np.asarray(t.at_offset(anchor, side, y), dtype=float)
                   for t, w in zip(self.terms, self.weights))

    def local(self, anchor, side):
        locals_ = []
        for t, w in zip(self.terms, self.weights):
            loc = t.local(anchor, side)
            if loc is None:
                return None
            locals_.append(loc.scaled(w))
        live = [loc for loc in locals_ if not loc.is_zero]
        if not live:
            return Local(0.0)
        top = max(dominance_key(loc) for loc in live)
        leading = [loc for loc in live if dominance_key(loc) == top]
        if top[0] != 0:
            signs = {math.copysign(1.0, loc.coefficient) for loc in leading}
            return leading[0] if len(signs) == 1 else None
        k = math.fsum(loc.coefficient for loc in leading)
        if k == 0:
            # leading terms cancel; the next order is not tracked
            return None
        return leading[0]._replace(coefficient=k)

    def integral(self, a, b):
        parts = []
        for t, w in zip(self.terms, self.weights):
            v = t.integral(a, b)
            if v is None:
                return None
            parts.append(w * v)
        return math.fsum(parts)

    def scaled(self, k):
        return SumForm(self.terms, tuple(k * w for w in self.weights))


class ProductForm(Form):
    """ prod_i factor_i """

    def __init__(self, factors):
        self.factors = tuple(factors)
        self.annotated = all(f.annotated for f in self.factors)

    def __repr__(self):
        return 'ProductForm(' + ' * '.join(repr(f) for f in self.factors) + ')'

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape)
        with np.errstate(all='ignore'):
            for f in self.factors:
                out = out * np.asarray(f(x), dtype=float)
        return out

    def at_offset(self, anchor, side, y):
        y = np.asarray(y, dtype=float)
        out = np.ones(y.shape)
        with np.errstate(all='ignore'):
            for f in self.factors:
                out = out * np.asarray(f.at_offset(anchor, side, y), dtype=float)
        return out

    def local(self, anchor, side):
        result = Local(1.0)
        for f in self.factors:
            loc = f.local(anchor, side)
            if loc is None:
                return None
            result = result.times(loc)
            if result is None:
                return None
        return result


class ComposedForm(Form):
    """ transform(inner(x)) """

    def __init__(self, transform, inner):
        self.transform = transform
        self.inner = inner
        self.annotated = inner.annotated and transform.annotated

    def __repr__(self):
        return f'{self.transform!r}({self.inner!r})'

    def __call__(self, x):
        with np.errstate(all='ignore'):
            return self.transform(np.asarray(self.inner(x), dtype=float))

    def at_offset(self, anchor, side, y):
        with np.errstate(all='ignore'):
            return self.transform(np.asarray(self.inner.at_offset(anchor, side, y), dtype=float))

    def local(self, anchor, side):
        loc = self.inner.local(anchor, side)
        return None if loc is None else self.transform.local(loc)


class ExpressionForm(Form):
    """ A user-supplied closed-form evaluator.

    Parameters
    ----------
    func: callable - vectorized (or scalar) evaluator
    singularities: dict - optional {point: exponent} annotations of power-law singular points
    bounded: bool - declares the evaluator finite and continuous on the closed piece
    """

    def __init__(self, func, singularities=None, bounded=False, name='expression'):
        self.func = func
        self.singularities = dict(singularities or {})
        self.bounded = bounded
        self.name = name
        self.annotated = bounded or bool(self.singularities)

    def __repr__(self):
        return f'ExpressionForm({self.name})'

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        try:
            out = np.asarray(self.func(x), dtype=float)
            if out.shape != x.shape:
                out = np.broadcast_to(out, x.shape).astype(float)
        except (TypeError, ValueError):
            out = np.vectorize(lambda t: float(self.func(t)))(x)
        return out

    def local(self, anchor, side):
        h = 1e-9
        sample = float(self(np.array([anchor + side * h]))[0])
        if anchor in self.singularities:
            r = self.singularities[anchor]
            return Local(sample / h ** r, float(r))
        if self.bounded:
            value = float(self(np.array([anchor]))[0])
            return Local(value if math.isfinite(value) else sample)
        return None


#####################
# Form algebra
#####################

def as_polynomial(form, a, b):
    if isinstance(form, PolynomialForm):
        return form
    if isinstance(form, PowerForm):
        return form.as_polynomial(a, b)
    return None


def affine_form(forms, weights, a, b):
    """ sum_i w_i f_i on the piece (a, b], collapsed to a single power or polynomial form when possible """
    pairs = [(f, float(w)) for f, w in zip(forms, weights) if w != 0]
    if not pairs:
        return PowerForm(0.0)
    if len(pairs) == 1:
        f, w = pairs[0]
        return f if w == 1 else f.scaled(w)
    if all(isinstance(f, PowerForm) for f, _ in pairs) and len({f.factors for f, _ in pairs}) == 1:
        return PowerForm(math.fsum(w * f.coefficient for f, w in pairs), pairs[0][0].factors)
    polys = [as_polynomial(f, a, b) for f, _ in pairs]
    if all(p is not None for p in polys):
        total = Polynomial([0.0])
        for p, (_, w) in zip(polys, pairs):
            total = total + w * p.poly
        return PolynomialForm(total)
    if all(isinstance(f, LogForm) for f, _ in pairs):
        out = LogForm(0.0)
        for f, w in pairs:
            out = out.plus(f.scaled(w))
        return out
    return SumForm([f for f, _ in pairs], [w for _, w in pairs])


def multiply_forms(f, g, a, b):
    if isinstance(f, PowerForm) and isinstance(g, PowerForm):
        return f.times(g)
    if f.is_constant and isinstance(f, PowerForm):
        return g.scaled(f.coefficient) if f.coefficient != 1 else g
    if g.is_constant and isinstance(g, PowerForm):
        return f.scaled(g.coefficient) if g.coefficient != 1 else f
    pf, pg = as_polynomial(f, a, b), as_polynomial(g, a, b)
    if pf is not None and pg is not None:
        return PolynomialForm(pf.poly * pg.poly)
    return ProductForm((f, g))


def divide_forms(f, g, a, b):
    """ f / g on (a, b]; g is assumed positive on the open piece """
    if isinstance(g, PowerForm):
        return multiply_forms(f, g.power(-1.0), a, b)
    pf, pg = as_polynomial(f, a, b), as_polynomial(g, a, b)
    if pf is not None and pg is not None:
        if pg.is_constant:
            return PolynomialForm(pf.poly / float(pg.poly.coef[0]))
        return RationalForm(pf.poly, pg.poly)
    from .transforms import PowerTransform
    return ProductForm((f, ComposedForm(PowerTransform(-1.0), g)))


def log_form(f):
    """ log f as a form """
    if isinstance(f, PowerForm):
        return f.log()
    from .transforms import LogTransform
    return ComposedForm(LogTransform(), f)


def power_form(f, theta):
    if isinstance(f, PowerForm):
        return f.power(theta)
    if theta == 1:
        return f
    from .transforms import PowerTransform
    return ComposedForm(PowerTransform(theta), f)
