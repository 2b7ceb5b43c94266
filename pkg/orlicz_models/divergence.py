"""
Kullback-Leibler divergence and the finiteness equivalences around it:
D(q||p) < inf  <=>  q/p in L^Psi1(p)  <=>  log(q/p) in L^1(q), and D(q||p) < inf implies L^Phi1(p) in L^1(q).
"""
import logging
from typing import NamedTuple, Optional

import numpy as np

from .forms import LogForm, log_form
from .measure_core import Piece, RandomVariable, integrate, pointwise_ratio
from .orlicz import membership
from .orlicz_utilities import IntegralValue, PreconditionError, Verdict, VerdictDisagreementError
from .transforms import Absolute, XLogX
from .young import builtin


class LemmaChecks(NamedTuple):
    """ Verdicts of the three equivalent finiteness conditions """
    divergence: Verdict
    psi1_membership: Verdict
    log_ratio_l1: Verdict

    @property
    def agree(self):
        decided = {v for v in self if v != Verdict.INCONCLUSIVE}
        return len(decided) <= 1


class DivergenceReport(NamedTuple):
    forward: IntegralValue
    reverse: IntegralValue
    lemma_checks: Optional[LemmaChecks]
    gibbs_ok: bool
    corollary_consistent: Optional[bool] = None


class ImmersionReport(NamedTuple):
    trials: int
    members: int
    violations: int
    max_expectation: float


def _require_positive(*densities):
    for d in densities:
        if not d.strictly_positive:
            raise PreconditionError(f'divergence.py - {d.name} is not strictly positive')


def log_ratio(q, p):
    """ log(q/p) as a random variable """
    ratio = pointwise_ratio(q, p)
    return ratio.map_forms(lambda f, a, b: log_form(f), f'log({q.name}/{p.name})')


def kl_divergence(q, p, spec=None):
    """ D(q||p) = E_p[(q/p) log(q/p)] with 0 log 0 = 0

    Parameters
    ----------
    q: Density
    p: Density - strictly positive

    Returns
    -------
    IntegralValue
    """
    _require_positive(q, p)
    return integrate(pointwise_ratio(q, p), p, spec, XLogX())


def _gibbs(value):
    return not value.is_finite or value.value >= -value.error_bound - 1e-12


def finitediv_equivalence(q, p):
    """ Evaluates D(q||p) < inf, q/p in L^Psi1(p) and log(q/p) in L^1(q) independently

    Raises
    ------
    VerdictDisagreementError when two decided verdicts differ

    Returns
    -------
    DivergenceReport with both directions of the divergence
    """
    _require_positive(q, p)
    forward = kl_divergence(q, p)
    reverse = kl_divergence(p, q)
    psi1 = membership(pointwise_ratio(q, p), p, builtin('Psi1')).verdict
    l1 = integrate(log_ratio(q, p), q, None, Absolute()).verdict
    checks = LemmaChecks(forward.verdict, psi1, l1)
    if not checks.agree:
        raise VerdictDisagreementError(f'divergence.py::finitediv_equivalence() - {q.name} vs {p.name}: '
                                       f'D={forward.verdict.value}, Psi1={psi1.value}, L1={l1.value}')
    logging.debug(msg=f'divergence: finitediv {q.name}||{p.name}: {forward.verdict.value}')
    return DivergenceReport(forward, reverse, checks, _gibbs(forward) and _gibbs(reverse))


def divergence_report(q, p, exp_verdict=None):
    """ Both directions plus consistency with exponential connection: q in E(p) makes both divergences finite

    Parameters
    ----------
    exp_verdict: optional ArcVerdict of exp_connected(p, q)
    """
    report = finitediv_equivalence(q, p)
    consistent = None
    if exp_verdict is not None and exp_verdict.value == 'Connected':
        consistent = report.forward.is_finite and report.reverse.is_finite
    return report._replace(corollary_consistent=consistent)


def random_variables(trials, seed=0, max_pieces=4, polynomials=True, logs=False):
    """ Random piecewise variables on random breakpoints: constants and low-degree polynomials, plus unbounded
    pieces c log|x - e| + d singular at a piece endpoint e when logs is set. The log pieces stay in L^Phi1(p)
    for every density p that is bounded near e. """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(trials):
        count = int(rng.integers(1, max_pieces + 1))
        edges = np.unique(np.concatenate([[0.0, 1.0], np.round(rng.uniform(0.01, 0.99, count - 1), 6)]))
        pieces = []
        for a, b in zip(edges, edges[1:]):
            if logs and rng.uniform() < 1.0 / 3.0:
                center = float(a) if rng.uniform() < 0.5 else float(b)
                c, d = np.round(rng.normal(0, 1, 2), 6)
                pieces.append(Piece(float(a), float(b), LogForm(float(d), ((center, float(c) or 1.0),))))
            elif not polynomials or rng.uniform() < 0.5:
                pieces.append(Piece.constant(a, b, float(np.round(rng.normal(0, 2), 6))))
            else:
                pieces.append(Piece.polynomial(a, b, np.round(rng.normal(0, 2, 3), 6).tolist()))
        out.append(RandomVariable(pieces, name=f'random[{seed}:{i}]'))
    return out


def immersion_spotcheck(p, q, trials=20, seed=0, extra=()):
    """ For random u in L^Phi1(p), unbounded ones included, checks E_q[|u|] < inf, which D(q||p) < inf guarantees

    Parameters
    ----------
    extra: additional variables to test (e.g. log q)

    Returns
    -------
    ImmersionReport; violations counts the members of L^Phi1(p) with a divergent E_q|u|
    """
    d = kl_divergence(q, p)
    if not d.is_finite:
        raise PreconditionError(f'divergence.py::immersion_spotcheck() - D({q.name}||{p.name}) is not finite')
    phi1 = builtin('Phi1')
    members, violations, worst = 0, 0, 0.0
    for u in list(random_variables(trials, seed, logs=True)) + list(extra):
        if membership(u, p, phi1).verdict != Verdict.FINITE:
            continue
        members += 1
        value = integrate(u, q, None, Absolute())
        if value.is_divergent:
            violations += 1
            logging.warning(msg=f'divergence: E_q|{u.name}| diverges although {u.name} is in L^Phi1({p.name})')
        elif value.is_finite:
            worst = max(worst, value.value)
    return ImmersionReport(trials + len(extra), members, violations, worst)
