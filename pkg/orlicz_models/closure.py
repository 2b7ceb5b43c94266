"""
Convexity of the exponential and mixture models, and the constructive approximation of a nonnegative simple
density q by densities q_n connected to p by open mixture arcs:

    p_n = clamp of p to [1/n, n]
    q_n = q p / (p_n c_n) where q > 0,   a_n p / c_n where q = 0
    c_n = int_{q>0} q p / p_n + a_n P(q = 0)

q_n -> q in L^1 as n -> inf.
"""
import logging
import math
from typing import Callable, NamedTuple, Optional

import numpy as np

from .app import config
from .arcs import ArcVerdict, exp_arc_normalizer, exp_connected, mix_connected
from .forms import PowerForm, affine_form
from .measure_core import Density, Piece, combine, integrate, integrate_segment, mix, pointwise_ratio, refine
from .orlicz_utilities import PreconditionError
from .transforms import Absolute, CallableTransform, Identity, XLogPlus


def default_a_rule(n):
    return 1.0 / n


class ClosureIterate(NamedTuple):
    """ One approximation step with the ratio bounds min(a/n, a_n)/c_n <= q_n/p <= max(A n, a_n)/c_n """
    n: int
    c_n: float
    q_n: Density
    l1_error: Optional[float]
    proof_bounds: tuple
    mixture_verdict: ArcVerdict

    def row(self):
        return {'n': self.n, 'c_n': self.c_n, 'l1_error': self.l1_error,
                'mixture': self.mixture_verdict.value}


class ClosureSequence(NamedTuple):
    target: Density
    a_rule: Callable
    iterates: tuple

    @property
    def c_values(self):
        return [it.c_n for it in self.iterates]

    @property
    def l1_errors(self):
        return [it.l1_error for it in self.iterates]

    def eventually_decreasing(self, start=1):
        errors = [e for it, e in zip(self.iterates, self.l1_errors) if it.n >= start]
        return all(e is not None for e in errors) and all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))


class ConvexityRow(NamedTuple):
    lam: float
    exp_verdict: ArcVerdict
    mix_verdict: Optional[ArcVerdict]
    theta: float
    z_mix: Optional[float]
    z_bound: Optional[float]


class ConvexityReport(NamedTuple):
    rows: tuple
    holds: bool


#####################
# Clamping
#####################

def _clamp_piece(piece, n):
    lo, hi = 1.0 / n, float(n)
    cuts = set()
    for level in (lo, hi):
        cuts.update(piece.form.level_crossings(level, piece.a, piece.b))
    edges = [piece.a] + sorted(cuts) + [piece.b]
    out = []
    for u, v in zip(edges, edges[1:]):
        if v <= u:
            continue
        mid = float(piece.form([0.5 * (u + v)])[0])
        if mid < lo:
            out.append(Piece.constant(u, v, lo))
        elif mid > hi:
            out.append(Piece.constant(u, v, hi))
        else:
            out.append(Piece(u, v, piece.form))
    return out


def _clamp_limit(piece, n):
    loc = piece.form.local(0.0, 1)
    value = float(n) if loc is None or not loc.bounded else min(max(loc.limit, 1.0 / n), float(n))
    return [Piece.constant(piece.a, piece.b, value)]


def clamp(p, n):
    """ p_n = min(max(p, 1/n), n), split where p crosses 1/n and n

    Returns
    -------
    RandomVariable with 1/n <= p_n <= n
    """
    if n < 1:
        raise ValueError('closure.py::clamp() - n must be at least 1')
    return p.map_pieces(lambda piece: _clamp_piece(piece, n), f'clamp({p.name},{n})',
                        limit_fn=lambda piece: _clamp_limit(piece, n))


#####################
# Approximation
#####################

def _target_values(q):
    if not q.is_simple:
        raise PreconditionError(f'closure.py - target {q.name} is not simple; quantize it first')
    values = [p.form.coefficient for p in q.pieces]
    if any(v < 0 for v in values):
        raise PreconditionError(f'closure.py - target {q.name} takes negative values')
    positive = [v for v in values if v > 0]
    if not positive:
        raise PreconditionError(f'closure.py - target {q.name} vanishes everywhere')
    return min(positive), max(positive)


def _unnormalized_step(p, q, n, a_n):
    lo, hi = 1.0 / n, float(n)

    def build(segment):
        fp, fq = segment.forms
        c = fq.coefficient
        if c == 0:
            return [Piece(segment.a, segment.b, fp.scaled(a_n))]
        out = []
        for piece in _clamp_piece(Piece(segment.a, segment.b, fp), n):
            if piece.form is not fp:
                # clamped band: q p / p_n with p_n = 1/n or n
                k = c * n if piece.form.coefficient == lo else c / hi
                out.append(Piece(piece.a, piece.b, fp.scaled(k)))
            else:
                out.append(Piece.constant(piece.a, piece.b, c))
        return out

    return refine([p, q], build, f'g_{n}')


def closure_step(p, q, n, a_rule=None):
    """ The n-th approximant q_n of the simple target q

    Parameters
    ----------
    p: Density - strictly positive
    q: Density - simple (finitely many constant pieces), nonnegative
    n: int >= 1
    a_rule: n -> a_n > 0, 1/n by default

    Returns
    -------
    ClosureIterate with the L^1 distance to q
    """
    if not p.strictly_positive:
        raise PreconditionError(f'closure.py::closure_step() - {p.name} is not strictly positive')
    if n < 1:
        raise ValueError('closure.py::closure_step() - n must be at least 1')
    a_rule = a_rule or default_a_rule
    a_n = float(a_rule(n))
    if not a_n > 0:
        raise ValueError(f'closure.py::closure_step() - a_{n} = {a_n} must be positive')
    a, big_a = _target_values(q)

    g = _unnormalized_step(p, q, n, a_n)
    mass = integrate(g)
    if not mass.is_finite:
        raise PreconditionError(f'closure.py::closure_step() - c_{n} is {mass.verdict.value}')
    c_n = mass.value
    q_n = g.map_forms(lambda f, lo, hi: f.scaled(1.0 / c_n), f'q_{n}', cls=Density)

    bounds = (min(a / n, a_n) / c_n, max(big_a * n, a_n) / c_n)
    mixture = mix_connected(p, q_n)
    if mixture.ratio_bounds.analytic and not (bounds[0] - 1e-12 <= mixture.ratio_bounds.lower and
                                              mixture.ratio_bounds.upper <= bounds[1] + 1e-12):
        logging.warning(msg=f'closure: ratio bounds of q_{n} outside [{bounds[0]:.6g}, {bounds[1]:.6g}]')
    error = l1_distance(q_n, q)
    logging.debug(msg=f'closure: n={n} c_n={c_n:.12g} L1={error.value}')
    return ClosureIterate(n, c_n, q_n, error.value if error.is_finite else None, bounds, mixture.verdict)


def closure_sequence(p, target, n_max=10, a_rule=None, level=None):
    """ q_1, ..., q_n_max for a target density, quantized first when it is not simple

    Returns
    -------
    ClosureSequence
    """
    q = target if target.is_simple else quantize(target, level)
    a_rule = a_rule or default_a_rule
    iterates = tuple(closure_step(p, q, n, a_rule) for n in range(1, int(n_max) + 1))
    return ClosureSequence(q, a_rule, iterates)


def l1_distance(f, g, spec=None):
    """ int |f - g| d mu

    Returns
    -------
    IntegralValue
    """
    diff = combine([f, g], lambda forms, a, b: affine_form(forms, (1.0, -1.0), a, b), f'{f.name}-{g.name}')
    return integrate(diff, None, spec, Absolute())


#####################
# Quantization
#####################

def _cell_masses(target, cells):
    h = 1.0 / cells
    masses = np.zeros(cells)
    one = PowerForm(1.0)

    def deposit(piece):
        first = min(int(piece.a / h), cells - 1)
        last = min(int(math.ceil(piece.b / h)), cells)
        for k in range(first, last):
            u, v = max(piece.a, k * h), min(piece.b, (k + 1) * h)
            if v > u:
                value = integrate_segment(u, v, one, piece.form, Identity())
                if not value.is_finite:
                    raise PreconditionError(f'closure.py::quantize() - {target.name} is not integrable on '
                                            f'({u:g}, {v:g}]')
                masses[k] += value.value

    for piece in target.pieces:
        deposit(piece)
    tail = target.tail
    if tail is None:
        return masses

    # tail pieces are deposited until they fit inside the cells touching the accumulation point
    x = tail.accumulation
    home = {k for k in (int(x / h) - 1, int(x / h)) if 0 <= k < cells and k * h <= x <= (k + 1) * h}
    n, last_cells = tail.start, {}
    while n - tail.start < config['MAX_SERIES_TERMS']:
        pieces = tail.pieces_of(n)
        for piece in pieces:
            deposit(piece)
        cells_of = {min(int(0.5 * (p.a + p.b) / h), cells - 1) for p in pieces}
        if cells_of <= home:
            last_cells = cells_of
            break
        n += 1
    remainder = max(1.0 - masses.sum(), 0.0)
    targets = sorted(last_cells or home)
    for k in targets:
        masses[k] += remainder / len(targets)
    return masses


def quantize(target, level=None, name=None):
    """ Simple density of cell averages of the target on the dyadic grid of the given mesh

    Returns
    -------
    Density made of constant pieces (zero where the target vanishes)
    """
    level = config['QUANTIZATION_LEVEL'] if level is None else level
    cells = int(round(1.0 / level))
    if cells < 1:
        raise ValueError('closure.py::quantize() - level must be at most 1')
    masses = _cell_masses(target, cells)
    total = math.fsum(masses.tolist())
    h = 1.0 / cells
    pieces = [Piece.constant(k * h, (k + 1) * h, masses[k] / (total * h)) for k in range(cells)]
    return Density(pieces, None, name or f'quantized({target.name},{level:g})',
                   strictly_positive=bool(np.all(masses > 0)))


#####################
# Convexity and phi-integrability
#####################

def _witness_theta(reports):
    highs = [r.witness_interval[1] for r in reports]
    eps = min(1.0, min(highs) - 1.0) / 2.0
    return 1.0 + eps


def convexity_check(p, q, r, lam_grid=(0.0, 0.25, 0.5, 0.75, 1.0), depth=None):
    """ exp_connected(p, lam q + (1 - lam) r) for every lam, plus the mixture analogue when q and r are
    mixture-connected to p; records Z_m(theta) <= lam Z_q(theta) + (1 - lam) Z_r(theta) at a witness theta > 1

    Raises
    ------
    PreconditionError when q or r is not in the exponential model of p

    Returns
    -------
    ConvexityReport
    """
    reports = [exp_connected(p, d, depth, jensen=False) for d in (q, r)]
    if any(rep.verdict != ArcVerdict.CONNECTED for rep in reports):
        raise PreconditionError(f'closure.py::convexity_check() - {q.name} and {r.name} must both be connected '
                                f'to {p.name}')
    with_mixture = all(mix_connected(p, d).verdict == ArcVerdict.CONNECTED for d in (q, r))
    theta = _witness_theta(reports)
    z_q, z_r = exp_arc_normalizer(p, q, theta), exp_arc_normalizer(p, r, theta)

    rows = []
    for lam in lam_grid:
        lam = float(lam)
        if lam == 1:
            m = q
        elif lam == 0:
            m = r
        else:
            m = mix([q, r], [lam, 1.0 - lam], f'{lam:g}*{q.name} + {1 - lam:g}*{r.name}')
        exp_verdict = exp_connected(p, m, depth, jensen=False).verdict
        mix_verdict = mix_connected(p, m).verdict if with_mixture else None
        z_m = exp_arc_normalizer(p, m, theta)
        bound = lam * z_q.value + (1 - lam) * z_r.value if z_q.is_finite and z_r.is_finite else None
        rows.append(ConvexityRow(lam, exp_verdict, mix_verdict, theta, z_m.value if z_m.is_finite else None, bound))

    holds = all(row.exp_verdict != ArcVerdict.NOT_CONNECTED and row.mix_verdict != ArcVerdict.NOT_CONNECTED and
                (row.z_bound is None or row.z_mix is None or row.z_mix <= row.z_bound * (1 + 1e-9) + 1e-12)
                for row in rows)
    return ConvexityReport(tuple(rows), holds)


def phi_membership(p, q, phi=None, spec=None):
    """ E_p[phi(q/p)] for phi = x (log x)^+ (default) or a user function continuous and positive on (0, inf)

    Returns
    -------
    IntegralValue
    """
    transform = XLogPlus() if phi is None else CallableTransform(phi, getattr(phi, '__name__', 'phi'))
    return integrate(pointwise_ratio(q, p), p, spec, transform)
