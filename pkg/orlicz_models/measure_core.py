"""
Densities and random variables on ([0,1], Borel, Lebesgue) and integrals with power-law endpoint singularities.

A piecewise function is a finite list of pieces (a, b] each carrying an analytic form, plus an optional series tail
that generates countably many pieces accumulating at one point. Integrals are decided analytically from local
asymptotic classes (divergence is never declared numerically) and evaluated with closed forms where available,
otherwise with scipy quadrature in offset coordinates after a substitution that removes the endpoint singularity.
"""
import bisect
import logging
import math
from enum import Enum
from functools import cached_property
from typing import Callable, NamedTuple, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from .app import config
from .forms import (ComposedForm, Form, Local, LogForm, PolynomialForm, PowerForm, ProductForm, ExpressionForm, SumForm,
                    affine_form, divide_forms, log_form, classify_power_convergence)
from .orlicz_utilities import (IntegralValue, Provenance, Verdict, IncompatiblePartitionError, PreconditionError,
                               UnannotatedSingularityError, combine_provenance, sum_values)
from .transforms import Absolute, Identity

__all__ = ['Strategy', 'QuadratureSpec', 'Piece', 'SeriesTail', 'PiecewiseFunction', 'Density', 'RandomVariable',
           'Segment', 'lebesgue', 'constant_variable', 'integrate', 'classify_power_convergence', 'pointwise_ratio',
           'combine', 'refine', 'mix', 'paired_segments', 'integrate_segment']

# Substitution exponents above this are not used; segments closer to the integrability threshold are bounded
BETA_MAX = 30.0
# Tail pieces integrated by quadrature before switching to closed-form envelopes
QUADRATURE_TAIL_PIECES = 64


class Strategy(Enum):
    SUBSTITUTION = 'substitution'
    SPLITTING = 'splitting'


class QuadratureSpec(NamedTuple):
    """ Integration settings. tolerance is absolute per segment, series_tolerance applies to tail estimates. """
    tolerance: float = config['DEFAULT_TOLERANCE']
    max_subdivisions: int = config['QUAD_LIMIT']
    strategy: Strategy = Strategy.SUBSTITUTION
    max_terms: int = config['MAX_SERIES_TERMS']
    series_tolerance: float = 1e-6
    fixed_terms: Optional[int] = None

    def validated(self):
        assert self.tolerance > 0, 'measure_core.py::QuadratureSpec::validated() - tolerance must be positive'
        return self


DEFAULT_SPEC = QuadratureSpec()


class Piece(NamedTuple):
    """ A form living on the interval (a, b] """
    a: float
    b: float
    form: Form

    @classmethod
    def constant(cls, a, b, c):
        return cls(float(a), float(b), PowerForm(c))

    @classmethod
    def power(cls, a, b, c, anchor, exponent):
        """ c*(x-a)^r for anchor='left', c*(b-x)^r for anchor='right' """
        if anchor not in ('left', 'right'):
            raise ValueError(f'unknown anchor {anchor!r}')
        center = a if anchor == 'left' else b
        return cls(float(a), float(b), PowerForm.anchored(c, center, exponent))

    @classmethod
    def beta_power(cls, a, b, c, exponent):
        """ c*x^r """
        return cls(float(a), float(b), PowerForm.anchored(c, 0.0, exponent))

    @classmethod
    def polynomial(cls, a, b, coefficients):
        return cls(float(a), float(b), PolynomialForm(coefficients))

    @classmethod
    def expression(cls, a, b, func, singularities=None, bounded=False, name='expression'):
        return cls(float(a), float(b), ExpressionForm(func, singularities, bounded, name))

    def clipped(self, lo, hi):
        a, b = max(self.a, lo), min(self.b, hi)
        return Piece(a, b, self.form) if a < b else None

    def locals(self):
        """ (local class at a, local class at b) """
        return self.form.local(self.a, 1), self.form.local(self.b, -1)

    def integrable(self):
        for loc in self.locals():
            if loc is not None and loc.integrability() == Verdict.DIVERGENT:
                return False
        return True


class Segment(NamedTuple):
    """ Common refinement cell of several piecewise functions: one form per function """
    a: float
    b: float
    forms: tuple


class SeriesTail:
    """ Countably many pieces n = start, start+1, ... accumulating at one point.

    Parameters
    ----------
    start: int - first index
    pieces_of: callable n -> tuple of Piece
    accumulation: float - accumulation point of the pieces
    limit_pieces: tuple of Piece - nominal pieces on (0, 1] whose local class at 0 is the limit, as n -> infinity,
                  of the singular behaviour of the pieces (e.g. exponent -n/(n+1) -> -1)
    lattice: str - identifier; tails can only be paired with tails on the same lattice
    mass_bound: optional callable N -> bound on the total integral of the pieces n > N
    locate: optional callable x -> n of the pieces containing x
    """

    def __init__(self, start, pieces_of, accumulation, limit_pieces, lattice, mass_bound=None, locate=None):
        self.start = int(start)
        self.pieces_of = pieces_of
        self.accumulation = float(accumulation)
        self.limit_pieces = tuple(limit_pieces)
        self.lattice = lattice
        self.mass_bound = mass_bound
        self.locate = locate

    def __repr__(self):
        return f'SeriesTail({self.lattice}, start={self.start}, accumulation={self.accumulation:g})'

    def map(self, fn, limit_fn=None, keep_mass_bound=False):
        """ New tail whose pieces are fn(piece) (a list of pieces) for every generated piece """
        limit_fn = limit_fn or fn
        pieces_of = self.pieces_of

        def mapped(n):
            out = []
            for piece in pieces_of(n):
                out.extend(fn(piece))
            return tuple(out)

        limit = []
        for piece in self.limit_pieces:
            limit.extend(limit_fn(piece))
        return SeriesTail(self.start, mapped, self.accumulation, limit, self.lattice,
                          self.mass_bound if keep_mass_bound else None, self.locate)

    def index_beyond(self, t):
        """ First index from which every generated piece lies in (t, 1]; requires accumulation > t """
        if self.accumulation <= t:
            raise ValueError('measure_core.py::SeriesTail::index_beyond() - pieces accumulate inside [0, t]')

        def beyond(n):
            return all(p.a >= t for p in self.pieces_of(n))

        hi = self.start
        while not beyond(hi):
            hi = 2 * hi
        lo = max(self.start, hi // 2)
        if beyond(lo):
            return lo
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if beyond(mid):
                hi = mid
            else:
                lo = mid
        return hi

    def materialize(self, stop):
        pieces = []
        for n in range(self.start, stop):
            pieces.extend(self.pieces_of(n))
        return pieces


class PairedTail(NamedTuple):
    start: int
    segments_of: Callable
    limit_segments: tuple
    accumulation: float


def singular_centers(form):
    """ Centers z of the |x-z|^r and log|x-z| factors anywhere inside a form """
    if isinstance(form, (PowerForm, LogForm)):
        return {z for z, _ in form.factors}
    if isinstance(form, ProductForm):
        return set().union(*(singular_centers(f) for f in form.factors))
    if isinstance(form, SumForm):
        return set().union(*(singular_centers(t) for t in form.terms))
    if isinstance(form, ComposedForm):
        return singular_centers(form.inner)
    return set()


def _validate_piece(piece):
    a, b, form = piece
    if not (0.0 <= a < b <= 1.0):
        raise ValueError(f'measure_core.py::_validate_piece() - invalid interval ({a}, {b}]')
    for z in sorted(singular_centers(form)):
        if a < z < b:
            raise ValueError(f'measure_core.py::_validate_piece() - singular center {z} inside ({a}, {b}]; '
                             f'split the piece there')


class PiecewiseFunction:
    """ Finite pieces plus an optional series tail """

    def __init__(self, pieces, tail=None, name=''):
        pieces = sorted((Piece(float(p.a), float(p.b), p.form) for p in pieces), key=lambda p: p.a)
        for p in pieces:
            _validate_piece(p)
        for left, right in zip(pieces, pieces[1:]):
            if right.a < left.b:
                raise ValueError(f'measure_core.py::PiecewiseFunction() - overlapping pieces at {right.a}')
        self.pieces = tuple(pieces)
        self.tail = tail
        self.name = name
        self._starts = [p.a for p in self.pieces]

    def __repr__(self):
        return f'{type(self).__name__}({self.name or len(self.pieces)})'

    @property
    def is_simple(self):
        """ Finitely many pieces with constant values """
        return self.tail is None and all(p.form.is_constant for p in self.pieces)

    def piece_at(self, x):
        i = bisect.bisect_left(self._starts, x) - 1
        candidates = [i, i + 1] if x == 0 else [i]
        for j in candidates:
            if 0 <= j < len(self.pieces):
                p = self.pieces[j]
                if p.a < x <= p.b or (x == 0 and p.a == 0):
                    return p
        if self.tail is not None and self.tail.locate is not None:
            n = self.tail.locate(x)
            if n is not None:
                # rounding at piece boundaries can shift the located index by one
                for m in (n, n - 1, n + 1):
                    if m < self.tail.start:
                        continue
                    for p in self.tail.pieces_of(m):
                        if p.a < x <= p.b or x == p.a == 0:
                            return p
        return None

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(xs.shape, np.nan)
        for i, xi in enumerate(xs):
            p = self.piece_at(float(xi))
            if p is not None:
                out[i] = float(np.asarray(p.form(np.array([xi])))[0])
        return out if np.ndim(x) else float(out[0])

    def map_pieces(self, fn, name=None, limit_fn=None, cls=None):
        """ Applies fn(piece) -> list of pieces to every finite and tail piece """
        pieces = []
        for p in self.pieces:
            pieces.extend(fn(p))
        tail = self.tail.map(fn, limit_fn) if self.tail is not None else None
        builder = cls or RandomVariable
        return builder(pieces, tail, name or self.name)

    def map_forms(self, fn, name=None, cls=None):
        """ Applies fn(form, a, b) -> form piecewise """
        return self.map_pieces(lambda p: [Piece(p.a, p.b, fn(p.form, p.a, p.b))], name, cls=cls)

    def scaled(self, k, name=None):
        return self.map_forms(lambda f, a, b: affine_form([f], [k], a, b), name or f'{k:g}*{self.name}')

    def shifted(self, k, name=None):
        return self.map_forms(lambda f, a, b: affine_form([f, PowerForm(1.0)], [1.0, k], a, b),
                              name or f'{self.name}+{k:g}')

    def log(self, name=None):
        return self.map_forms(lambda f, a, b: log_form(f), name or f'log({self.name})')

    def clip(self, t):
        """ The pieces inside [0, t] (a function defined on [0, t] only) """
        pieces = [c for c in (p.clipped(0.0, t) for p in self.pieces) if c is not None]
        tail = None
        if self.tail is not None:
            if self.tail.accumulation <= t:
                tail = self.tail.map(lambda p: [c for c in [p.clipped(0.0, t)] if c is not None],
                                     limit_fn=lambda p: [p], keep_mass_bound=True)
            else:
                stop = self.tail.index_beyond(t)
                pieces.extend(c for c in (p.clipped(0.0, t) for p in self.tail.materialize(stop)) if c is not None)
        return PiecewiseFunction(pieces, tail, f'{self.name}|[0,{t:g}]')

    def singular_points(self):
        """ Endpoints of finite pieces where the form is unbounded """
        points = []
        for p in self.pieces:
            for (x, side) in ((p.a, 1), (p.b, -1)):
                loc = p.form.local(x, side)
                if loc is None or not loc.bounded:
                    points.append(x)
        return sorted(set(points))

    def evaluation_grid(self, count=1001):
        """ Grid of points avoiding the piece endpoints """
        xs = (np.arange(count) + 0.5 + 1e-3 * math.pi) / (count + 1)
        return xs[(xs > 0) & (xs < 1)]


class RandomVariable(PiecewiseFunction):
    """ Signed piecewise random variable """


class Density(PiecewiseFunction):
    """ Piecewise probability density on [0, 1]

    Parameters
    ----------
    pieces: list of Piece
    tail: optional SeriesTail
    name: str
    strictly_positive: bool - positive mu-a.s.
    normalized: bool - integrates to 1
    """

    def __init__(self, pieces, tail=None, name='', strictly_positive=True, normalized=True):
        super().__init__(pieces, tail, name)
        self.strictly_positive = strictly_positive
        self.normalized = normalized

    @cached_property
    def total_mass(self):
        """ IntegralValue of the integral of the density over [0, 1] """
        bound = self.tail.mass_bound if self.tail is not None else None
        return integrate(constant_variable(1.0), self, tail_bound=bound)

    @property
    def closed_form(self):
        return self.tail is None and all(isinstance(p.form, (PowerForm, PolynomialForm)) for p in self.pieces)

    def normalization_tolerance(self):
        if self.closed_form:
            return config['NORMALIZATION_TOLERANCE_CLOSED']
        return config['NORMALIZATION_TOLERANCE_QUADRATURE']

    def validate(self):
        """ Checks positivity on pieces and normalization within the declared tolerance

        Returns
        -------
        self. Raises ValueError on failure.
        """
        if self.strictly_positive:
            for p in self.pieces:
                mid = float(np.asarray(p.form(np.array([0.5 * (p.a + p.b)])))[0])
                if not mid > 0:
                    raise ValueError(f'measure_core.py::Density::validate() - {self.name} not positive on '
                                     f'({p.a}, {p.b}]')
        if self.normalized:
            mass = self.total_mass
            if not mass.is_finite or abs(mass.value - 1) > self.normalization_tolerance() + mass.error_bound:
                raise ValueError(f'measure_core.py::Density::validate() - {self.name} integrates to {mass.value} '
                                 f'± {mass.error_bound}')
        return self

    def with_name(self, name):
        return Density(self.pieces, self.tail, name, self.strictly_positive, self.normalized)


def lebesgue():
    """ The uniform density 1 on [0, 1] """
    return Density([Piece.constant(0.0, 1.0, 1.0)], name='uniform')


def constant_variable(c, name=None):
    return RandomVariable([Piece.constant(0.0, 1.0, c)], name=name or f'{c:g}')


#####################
# Common refinement
#####################

def _finite_segments(functions):
    bounds = set()
    for f in functions:
        for p in f.pieces:
            bounds.add(p.a)
            bounds.add(p.b)
    bounds = sorted(bounds)
    segments = []
    for u, v in zip(bounds, bounds[1:]):
        mid = 0.5 * (u + v)
        forms = []
        for f in functions:
            i = bisect.bisect_right(f._starts, mid) - 1
            if i < 0 or not (f.pieces[i].a < mid < f.pieces[i].b):
                break
            forms.append(f.pieces[i].form)
        else:
            segments.append(Segment(u, v, tuple(forms)))
    return segments


def paired_segments(functions):
    """ Common refinement of several piecewise functions

    Returns
    -------
    (list of Segment over the finite parts, PairedTail or None)
    """
    segments = _finite_segments(functions)
    tailed = [i for i, f in enumerate(functions) if f.tail is not None]
    if not tailed:
        return segments, None
    tails = [functions[i].tail for i in tailed]
    first = tails[0]
    for other in tails[1:]:
        if other.lattice != first.lattice or other.start != first.start:
            raise IncompatiblePartitionError(
                f'measure_core.py::paired_segments() - tails on lattices {first.lattice!r} and {other.lattice!r} '
                f'cannot be refined')

    finite_bounds = sorted({x for f in functions for p in f.pieces for x in (p.a, p.b)})

    def segments_of(n):
        """ Common refinement of the pieces with index n of every tail; functions whose tail leaves a gap there
        contribute their finite pieces """
        per_tail = dict(zip(tailed, (t.pieces_of(n) for t in tails)))
        bounds = {x for pieces in per_tail.values() for p in pieces for x in (p.a, p.b)}
        if bounds:
            lo, hi = min(bounds), max(bounds)
            bounds.update(finite_bounds[bisect.bisect_right(finite_bounds, lo):bisect.bisect_left(finite_bounds, hi)])
        bounds = sorted(bounds)
        out = []
        for u, v in zip(bounds, bounds[1:]):
            mid = 0.5 * (u + v)
            covered = {i: next((p.form for p in pieces if p.a < mid < p.b), None) for i, pieces in per_tail.items()}
            if all(form is None for form in covered.values()):
                continue
            forms = []
            for i, f in enumerate(functions):
                form = covered.get(i)
                if form is None:
                    j = bisect.bisect_right(f._starts, mid) - 1
                    if j < 0 or not f.pieces[j].a < mid < f.pieces[j].b:
                        break
                    form = f.pieces[j].form
                forms.append(form)
            else:
                out.append(Segment(u, v, tuple(forms)))
        return out

    limit_segments = []
    for slot in zip(*[t.limit_pieces for t in tails]):
        forms = []
        slot_forms = dict(zip(tailed, (p.form for p in slot)))
        for i in range(len(functions)):
            forms.append(slot_forms.get(i, PowerForm(1.0)))
        limit_segments.append(Segment(0.0, 1.0, tuple(forms)))

    return segments, PairedTail(first.start, segments_of, tuple(limit_segments), first.accumulation)


def refine(functions, fn, name, cls=None, **kwargs):
    """ Builds a piecewise function from fn(segment) -> list of Piece over the common refinement """
    cls = cls or RandomVariable
    segments, paired = paired_segments(functions)
    pieces = [p for s in segments for p in fn(s)]
    tail = None
    if paired is not None:
        source = next(f.tail for f in functions if f.tail is not None)

        def pieces_of(n):
            return tuple(p for s in paired.segments_of(n) for p in fn(s))

        limit = tuple(p for s in paired.limit_segments for p in fn(s))
        tail = SeriesTail(paired.start, pieces_of, paired.accumulation, limit, source.lattice, None, source.locate)
    return cls(pieces, tail, name, **kwargs)


def combine(functions, fn, name, cls=None, **kwargs):
    """ Pointwise combination fn(forms, a, b) -> form over the common refinement of several functions """
    return refine(functions, lambda s: [Piece(s.a, s.b, fn(s.forms, s.a, s.b))], name, cls, **kwargs)


def pointwise_ratio(q, p):
    """ q/p as a random variable on the common refinement, exponents subtracted piecewise

    Parameters
    ----------
    q: Density
    p: Density - strictly positive

    Returns
    -------
    RandomVariable
    """
    if isinstance(p, Density) and not p.strictly_positive:
        raise PreconditionError(f'measure_core.py::pointwise_ratio() - {p.name} is not strictly positive')
    return combine([q, p], lambda forms, a, b: divide_forms(forms[0], forms[1], a, b), f'{q.name}/{p.name}')


def mix(densities, weights, name=None):
    """ Affine combination sum_i w_i p_i of densities (normalized when the weights sum to 1) """
    name = name or ' + '.join(f'{w:g}*{d.name}' for d, w in zip(densities, weights))
    positive = all(d.strictly_positive for d in densities) and all(w > 0 for w in weights)
    return combine(list(densities), lambda forms, a, b: affine_form(forms, weights, a, b), name, cls=Density,
                   strictly_positive=positive, normalized=abs(math.fsum(weights) - 1) < 1e-15)


#####################
# Integration engine
#####################

def _power_log_integral(q, log, a, b):
    """ Closed form of the integral of q * log over (a, b) for a power form q and optional log form """
    if log is None or log.is_constant:
        base = q.integral(a, b)
        if base is None:
            return None
        return base if log is None else log.offset * base
    if not q.factors:
        v = log.integral(a, b)
        return None if v is None else q.coefficient * v
    if len(q.factors) != 1:
        return None
    z, s = q.factors[0]
    if any(c != z for c, _ in log.factors):
        return None
    r = sum(e for _, e in log.factors)

    def primitive(y):
        if s == -1:
            return math.log(y) ** 2 / 2 if y > 0 else -math.inf
        if y == 0:
            return 0.0 if s > -1 else math.inf
        return y ** (s + 1) / (s + 1) * (math.log(y) - 1 / (s + 1))

    if z <= a:
        lo, hi = a - z, b - z
    elif z >= b:
        lo, hi = z - b, z - a
    else:
        return None
    base = q.integral(a, b)
    if base is None:
        return None
    return q.coefficient * r * (primitive(hi) - primitive(lo)) + log.offset * base


def _polynomial_weighted_integral(poly, w, a, b):
    """ Integral of poly(x) * c|x - z|^r over (a, b) by expanding poly around z """
    if len(w.factors) != 1:
        return None
    z, r = w.factors[0]
    if z <= a:
        shifted = poly(Polynomial([z, 1.0]))
    elif z >= b:
        shifted = poly(Polynomial([z, -1.0]))
    else:
        return None
    parts = []
    for j, c in enumerate(shifted.coef):
        if c == 0:
            continue
        v = PowerForm.anchored(w.coefficient * c, z, r + j).integral(a, b)
        if v is None:
            return None
        parts.append(v)
    return math.fsum(parts)


def _closed_form(w, f, transform, a, b):
    if isinstance(transform, (Identity, Absolute)) and isinstance(f, PolynomialForm) and isinstance(w, PowerForm):
        sign = 1.0
        if isinstance(transform, Absolute):
            sign = math.copysign(1.0, float(f([0.5 * (a + b)])[0]))
        if w.is_constant:
            return sign * w.coefficient * f.integral(a, b)
        v = _polynomial_weighted_integral(f.poly, w, a, b)
        if v is not None:
            return sign * v
    if isinstance(transform, Identity) and isinstance(w, PowerForm) and w.is_constant:
        v = f.integral(a, b)
        if v is not None:
            return w.coefficient * v
    if isinstance(transform, Identity) and isinstance(f, PowerForm) and f.is_constant:
        v = w.integral(a, b)
        if v is not None:
            return f.coefficient * v
    terms = transform.reduce(f, a, b)
    if terms is None:
        return None
    total = []
    for t in terms:
        if t.power is None and t.log is None:
            v = w.integral(a, b)
        elif isinstance(w, PowerForm):
            q = w.times(t.power) if t.power is not None else w
            v = _power_log_integral(q, t.log, a, b)
        else:
            v = None
        if v is None:
            return None
        total.append(t.coefficient * v)
    return math.fsum(total)


def _segment_local(w, f, transform, x, side):
    lw = w.local(x, side)
    lf = f.local(x, side)
    if lw is None or lf is None:
        return None
    lt = transform.local(lf)
    return None if lt is None else lw.times(lt)


def _sample_singularity(w, f, transform, x, side, length):
    """ Runtime check of an unannotated endpoint """
    ys = length * np.logspace(-3, -12, 10)
    with np.errstate(all='ignore'):
        values = np.abs(np.asarray(w.at_offset(x, side, ys), dtype=float) *
                        np.asarray(transform(np.asarray(f.at_offset(x, side, ys), dtype=float)), dtype=float))
    if not np.all(np.isfinite(values)):
        raise UnannotatedSingularityError(x, 'integrand not finite')
    if values[-1] > 1e6 * (1 + values[0]):
        raise UnannotatedSingularityError(x, f'integrand grows to {values[-1]:.3g}')


def _quad(func, lo, hi, spec):
    value, error, *info = quad(func, lo, hi, epsabs=spec.tolerance, epsrel=max(spec.tolerance, 1e-13),
                               limit=spec.max_subdivisions, full_output=1)
    if len(info) > 1:
        logging.debug(msg=f'measure_core: quad warning on ({lo}, {hi}): {info[1][:80]}')
        error = max(error, abs(value) * 1e-8)
    return value, error


def _envelope_bound(w, f, envelope, a, b):
    """ Closed-form integral of w * envelope(f) over (a, b), split where the envelope changes branch """
    cuts = set()
    for level in envelope.breakpoints:
        cuts.update(f.level_crossings(level, a, b))
    edges = [a] + sorted(cuts) + [b]
    parts = [_closed_form(w, f, envelope, u, v) for u, v in zip(edges, edges[1:])]
    if any(v is None or not math.isfinite(v) for v in parts):
        return None
    return abs(math.fsum(parts))


def _integrate_half(w, f, transform, end, side, length, loc, spec):
    """ Integral over the offsets y in (0, length] from a (possibly singular) endpoint """

    def h(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(all='ignore'):
            return np.asarray(w.at_offset(end, side, y), dtype=float) * \
                np.asarray(transform(np.asarray(f.at_offset(end, side, y), dtype=float)), dtype=float)

    singular = loc is not None and not loc.bounded
    if not singular:
        value, error = _quad(lambda y: float(h(np.array([y]))[0]), 0.0, length, spec)
        return value, error
    order = loc.order - (0.05 if loc.log_order > 0 else 0.0)
    beta = 1.0 / (1.0 + order) if order > -1 else math.inf
    delta = 0.0
    bound = 0.0
    if beta > BETA_MAX:
        envelope = transform.envelope()
        beta = BETA_MAX
        if envelope is not None:
            delta = length * 1e-6
            seg_lo, seg_hi = (end, end + delta) if side > 0 else (end - delta, end)
            env = _envelope_bound(w, f, envelope, seg_lo, seg_hi)
            if env is not None:
                bound = abs(env)
            else:
                delta = 0.0
    if spec.strategy == Strategy.SPLITTING:
        # geometric subintervals toward the singular end
        edges = [length * 2.0 ** -k for k in range(0, 60)]
        edges = [e for e in edges if e > delta] + [delta]
        parts = [_quad(lambda y: float(h(np.array([y]))[0]), lo, hi, spec) for hi, lo in zip(edges, edges[1:])]
        return math.fsum(v for v, _ in parts), math.fsum(e for _, e in parts) + bound
    span = length - delta

    def g(u):
        y = delta + span * u ** beta
        if y <= delta:
            return 0.0
        return float(span * beta * u ** (beta - 1) * h(np.array([y]))[0])

    value, error = _quad(g, 0.0, 1.0, spec)
    return value, error + bound


def integrate_segment(a, b, w, f, transform, spec=DEFAULT_SPEC, split=True, bound_only=False):
    """ Integral of w * transform(f) over one refinement cell (a, b) """
    if b <= a:
        return IntegralValue.finite(0.0)
    if split and transform.breakpoints:
        cuts = set()
        for level in transform.breakpoints:
            cuts.update(f.level_crossings(level, a, b))
        if cuts:
            edges = [a] + sorted(cuts) + [b]
            return sum_values([integrate_segment(u, v, w, f, transform, spec, split=False, bound_only=bound_only)
                               for u, v in zip(edges, edges[1:])])

    locals_ = []
    annotated = True
    for x, side in ((a, 1), (b, -1)):
        loc = _segment_local(w, f, transform, x, side)
        if loc is None:
            annotated = False
            _sample_singularity(w, f, transform, x, side, b - a)
        elif loc.integrability() == Verdict.DIVERGENT:
            return IntegralValue.divergent()
        locals_.append(loc)

    closed = _closed_form(w, f, transform, a, b) if annotated else None
    if closed is not None:
        if math.isfinite(closed):
            return IntegralValue.finite(closed, abs(closed) * 4e-16)
        # finite by the local classes but beyond floating point range
        return IntegralValue.inconclusive(closed, math.inf, Provenance.CLOSED_FORM)

    if bound_only and transform.envelope() is not None:
        env = _envelope_bound(w, f, transform.envelope(), a, b)
        if env is not None:
            return IntegralValue.finite(env / 2, env / 2, Provenance.QUADRATURE)

    mid = 0.5 * (a + b)
    left = _integrate_half(w, f, transform, a, 1, mid - a, locals_[0], spec)
    right = _integrate_half(w, f, transform, b, -1, b - mid, locals_[1], spec)
    value = left[0] + right[0]
    error = left[1] + right[1]
    if not annotated:
        logging.info(f'measure_core: unannotated piece on ({a:g}, {b:g}]; numeric value only')
        return IntegralValue.inconclusive(value, error)
    return IntegralValue.finite(value, error, Provenance.QUADRATURE)


def _tail_limit_verdict(paired, transform):
    """ DIVERGENT when the limit class of the tail pieces is non-integrable beyond the -1 threshold """
    for seg in paired.limit_segments:
        loc = _segment_local(seg.forms[0], seg.forms[1], transform, 0.0, 1)
        if loc is None:
            return Verdict.INCONCLUSIVE
        if loc.essential == 1 or (not loc.is_zero and loc.order < -1):
            return Verdict.DIVERGENT
    return Verdict.FINITE


def _integrate_tail(paired, transform, spec, tail_bound):
    limit = _tail_limit_verdict(paired, transform)
    if limit == Verdict.DIVERGENT:
        return IntegralValue.divergent(Provenance.SERIES_WITH_TAIL)

    terms, errors = [], []
    previous_k, k_growth = None, 1.0
    estimate = 0.0
    n = paired.start
    while True:
        index = n - paired.start
        bound_only = index >= QUADRATURE_TAIL_PIECES
        value = sum_values([integrate_segment(s.a, s.b, s.forms[0], s.forms[1], transform, spec,
                                              bound_only=bound_only) for s in paired.segments_of(n)])
        if value.is_divergent:
            return IntegralValue.divergent(Provenance.SERIES_WITH_TAIL)
        if value.verdict == Verdict.INCONCLUSIVE:
            return IntegralValue.inconclusive(None, math.inf, Provenance.SERIES_WITH_TAIL)
        terms.append(value.value)
        errors.append(value.error_bound)
        count = index + 1
        if spec.fixed_terms is not None:
            if count >= spec.fixed_terms:
                estimate = 0.0
                break
        elif count >= 64 and count & (count - 1) == 0:
            if tail_bound is not None:
                estimate = tail_bound(n)
            else:
                ks = np.arange(paired.start + count // 2, n + 1, dtype=float)
                window = np.abs(np.asarray(terms[count // 2:])) + np.asarray(errors[count // 2:])
                k = float(np.max(window * ks ** 2 / (1 + np.log(ks))))
                if previous_k:
                    k_growth = k / previous_k
                previous_k = k
                estimate = k * (1 + math.log(n)) / n
            if estimate < spec.series_tolerance / 2:
                break
        if spec.fixed_terms is None and count >= spec.max_terms:
            if tail_bound is not None:
                estimate = tail_bound(n)
            break
        n += 1

    logging.debug(msg=f'measure_core: tail summed over {len(terms)} pieces, tail estimate {estimate:.3g}')
    total = math.fsum(terms)
    error = math.fsum(errors) + estimate
    if tail_bound is None and spec.fixed_terms is None and k_growth >= 1.5:
        logging.info(f'measure_core: tail terms decay slower than 1/n^2 (envelope growth {k_growth:.2f})')
        return IntegralValue.inconclusive(total, math.inf, Provenance.SERIES_WITH_TAIL)
    return IntegralValue(total, error, Verdict.FINITE, Provenance.SERIES_WITH_TAIL)


def integrate(f, weight=None, spec=None, transform=None, tail_bound=None):
    """ E_weight[transform(f)], the integral of weight * transform(f) over [0, 1]

    Parameters
    ----------
    f: RandomVariable (or any PiecewiseFunction)
    weight: Density, or None for Lebesgue measure
    spec: QuadratureSpec
    transform: Transform applied pointwise to f (identity by default)
    tail_bound: optional analytic bound N -> |integral over tail pieces n > N|

    Returns
    -------
    IntegralValue. Divergent only when the local classes prove divergence; Inconclusive only for unannotated pieces
    or series whose terms decay slower than the 1/n^2 comparison family.
    """
    spec = (spec or DEFAULT_SPEC).validated()
    transform = transform or Identity()
    weight = weight or lebesgue()
    segments, paired = paired_segments([weight, f])
    values = [integrate_segment(s.a, s.b, s.forms[0], s.forms[1], transform, spec) for s in segments]
    if any(v.is_divergent for v in values):
        return IntegralValue.divergent(combine_provenance(v.provenance for v in values if v.is_divergent))
    if paired is not None:
        values.append(_integrate_tail(paired, transform, spec, tail_bound))
    return sum_values(values)
