"""
This test module tests the model layer of orlicz_models: exponential and mixture arcs, the counterexample
densities, restrictions to the filtration F_t, the mixture closure construction and the acceptance suite.

Intended to be run with pytest: pytest -s orlicz_models/test_models.py
"""
import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from scipy.special import zeta

from . import acceptance
from . import arcs
from . import closure
from . import counterexamples
from . import filtration
from .arcs import ArcVerdict
from .measure_core import Density, Piece, RandomVariable, lebesgue
from .orlicz_utilities import Mode, NotCenteredError, PreconditionError, Verdict


def _beta(beta):
    return Density([Piece.beta_power(0.0, 1.0, beta, beta - 1.0)], name=f'beta(beta={beta:g})')


def _steps():
    return Density([Piece.constant(0.0, 0.5, 1.5), Piece.constant(0.5, 1.0, 0.5)], name='steps')


def _target():
    return Density([Piece.constant(0.0, 0.5, 2.0), Piece.constant(0.5, 1.0, 0.0)], name='target',
                   strictly_positive=False)


# ######################################################################################################################
# This section tests arcs.py
# ######################################################################################################################


def test_exp_connected_beta():
    """ The uniform density and beta x^(beta-1) are exponentially connected; Z is finite exactly on
    (-1/(beta-1), inf) for beta > 1 and (-inf, 1/(1-beta)) for beta < 1

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    report = arcs.exp_connected(lebesgue(), _beta(2.0))
    assert report.kind == arcs.ArcKind.EXPONENTIAL
    assert report.verdict == ArcVerdict.CONNECTED
    assert report.witness_interval == (-1.0, math.inf)

    report = arcs.exp_connected(lebesgue(), _beta(0.5))
    assert report.verdict == ArcVerdict.CONNECTED
    assert report.witness_interval == (-math.inf, 2.0)

    report = arcs.exp_connected(_beta(1.0), _beta(2.0))
    assert report.verdict == ArcVerdict.CONNECTED and report.witness_interval[0] == -1.0

    p = lebesgue()
    assert arcs.exp_connected(p, p).witness_interval == (-math.inf, math.inf)


def test_exp_connected_jensen_evidence():
    """ Jensen's bound Z(theta) <= 1 on (0, 1) shows up as side evidence

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    report = arcs.exp_connected(lebesgue(), _beta(2.0), jensen=True)
    jensen = [e for e in report.evidence if e.condition.startswith('jensen')]
    assert len(jensen) == len(arcs.JENSEN_THETAS)
    assert all(e.outcome == 'Holds' for e in jensen)


def test_exp_connected_divergenza():
    """ The divergenza density has finite divergences in both directions but is not exponentially connected
    to the uniform density

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    report = arcs.exp_connected(lebesgue(), counterexamples.divergenza_density(), jensen=False)
    assert report.verdict == ArcVerdict.NOT_CONNECTED
    assert report.witness_interval is None


def test_exp_connected_requires_positive():
    """ Densities vanishing on a piece are rejected

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    with pytest.raises(PreconditionError):
        arcs.exp_connected(lebesgue(), _target())


def test_exp_arc_normalizer():
    """ Z(1/2) for the uniform and 2x is int sqrt(2x) dx = 2 sqrt(2)/3

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    z = arcs.exp_arc_normalizer(lebesgue(), _beta(2.0), 0.5)
    assert z.is_finite and abs(z.value - 2.0 * math.sqrt(2.0) / 3.0) <= 1e-12

    assert arcs.exp_arc_normalizer(lebesgue(), _beta(2.0), 0.0).value == 1.0
    assert arcs.exp_arc_normalizer(lebesgue(), _beta(2.0), -1.0).is_divergent

    density = arcs.exp_arc_density(lebesgue(), _beta(2.0), 0.5)
    assert abs(density(0.5) - 1.0 / z.value) <= 1e-12

    with pytest.raises(PreconditionError):
        arcs.exp_arc_density(lebesgue(), _beta(2.0), -1.0)


def test_mix_connected():
    """ Bounded ratios give an open mixture arc with witness (1/(1-c2), 1/(1-c1)); 2x/1 is not bounded away from 0

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    report = arcs.mix_connected(lebesgue(), _steps())
    assert report.kind == arcs.ArcKind.MIXTURE
    assert report.verdict == ArcVerdict.CONNECTED
    assert report.ratio_bounds.lower == 0.5 and report.ratio_bounds.upper == 1.5 and report.ratio_bounds.analytic
    assert report.witness_interval == (-2.0, 2.0)

    report = arcs.mix_connected(lebesgue(), _beta(2.0))
    assert report.verdict == ArcVerdict.NOT_CONNECTED and report.witness_interval is None
    assert report.ratio_bounds.lower == 0.0


def test_mixture_witness_edges():
    """ Ratios on one side of 1 leave the corresponding end of the lambda interval open

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    assert arcs.mixture_witness(0.5, 1.0) == (-math.inf, 2.0)
    assert arcs.mixture_witness(1.0, 3.0) == (-0.5, math.inf)


def test_mixture_arc_density():
    """ (1-lambda) p + lambda q inside the witness interval, ValueError outside

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    m = arcs.mixture_arc_density(lebesgue(), _steps(), 0.5)
    assert abs(m(0.25) - 1.25) <= 1e-15 and abs(m(0.75) - 0.75) <= 1e-15

    m = arcs.mixture_arc_density(lebesgue(), _steps(), 1.5)
    assert abs(m(0.75) - 0.25) <= 1e-15

    with pytest.raises(ValueError):
        arcs.mixture_arc_density(lebesgue(), _steps(), 3.0)
    with pytest.raises(ValueError):
        arcs.mixture_arc_density(lebesgue(), _steps(), -2.0)


def test_cumulant():
    """ K(0) = 0 and K(x - 1/2) = log(2 sinh(1/2)) under the uniform density; off-centre variables are refused

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    zero = RandomVariable([Piece.constant(0.0, 1.0, 0.0)], name='0')
    k = arcs.cumulant(lebesgue(), zero)
    assert k.is_finite and k.value == 0.0

    u = RandomVariable([Piece.polynomial(0.0, 1.0, [-0.5, 1.0])], name='x-1/2')
    k = arcs.cumulant(lebesgue(), u)
    assert k.is_finite and abs(k.value - math.log(2.0 * math.sinh(0.5))) <= 1e-9

    with pytest.raises(NotCenteredError):
        arcs.cumulant(lebesgue(), RandomVariable([Piece.constant(0.0, 1.0, 0.1)], name='0.1'))


def test_cumulant_steps():
    """ A centred two-valued variable has K = log((e^a + e^-a)/2) = log cosh(a)

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    u = RandomVariable([Piece.constant(0.0, 0.5, 1.5), Piece.constant(0.5, 1.0, -1.5)], name='+-1.5')
    k = arcs.cumulant(lebesgue(), u)
    assert k.is_finite and abs(k.value - math.log(math.cosh(1.5))) <= 1e-12


def test_represent():
    """ q = exp(u - K(u)) p with K(u) = D(p||q) = 1 - log 2 for p uniform, q = 2x

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    r = arcs.represent(lebesgue(), _beta(2.0))
    assert abs(r.k_value - (1.0 - math.log(2.0))) <= 1e-9
    assert abs(r.divergence - r.k_value) <= 1e-9
    assert abs(r.centering) <= 1e-9
    assert r.residual <= 1e-9

    with pytest.raises(PreconditionError):
        arcs.represent(lebesgue(), counterexamples.divergenza_density())


def test_theorem_main_crosscheck():
    """ The equivalent characterizations agree for the uniform density and 2x

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    table = arcs.theorem_main_crosscheck(lebesgue(), _beta(2.0))
    assert table.verdict == ArcVerdict.CONNECTED
    outcomes = {e.condition: e.outcome for e in table.evidence}
    assert outcomes['log(q/p) in L^Phi1(p) and L^Phi1(q)'] == 'Connected'
    assert outcomes['q/p in L^(1+eps)(p) and p/q in L^(1+eps)(q)'] == 'Connected'
    assert outcomes['truncated log-ratio norms finite'] == 'Holds'
    assert outcomes['L^Phi1(p) = L^Phi1(q)'] == 'Implied'

    # finite verdicts found by the alpha and eps scans are numeric evidence
    modes = {e.condition: e.mode for e in table.evidence}
    assert modes['log(q/p) in L^Phi1(p) and L^Phi1(q)'] == Mode.NUMERIC
    assert modes['q/p in L^(1+eps)(p) and p/q in L^(1+eps)(q)'] == Mode.NUMERIC
    assert modes['truncated log-ratio norms finite'] == Mode.NUMERIC

    p = lebesgue()
    modes = {e.condition: e.mode for e in arcs.theorem_main_crosscheck(p, p).evidence}
    assert modes['log(q/p) in L^Phi1(p) and L^Phi1(q)'] == Mode.ANALYTIC
    assert modes['q/p in L^(1+eps)(p) and p/q in L^(1+eps)(q)'] == Mode.ANALYTIC


# ######################################################################################################################
# This section tests counterexamples.py
# ######################################################################################################################


def test_zeta3():
    """ zeta(3) from the enclosed partial sum agrees with scipy

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    lo, hi = counterexamples.zeta3_bounds()
    assert lo <= float(zeta(3.0, 1.0)) <= hi
    assert abs(counterexamples.zeta3() - float(zeta(3.0, 1.0))) <= 1e-12


def test_divergenza_pieces():
    """ Piece n of the divergenza density carries mass C/n^3 and the density is normalized

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    c = counterexamples.divergenza_constant()
    n = np.arange(1, 11)
    assert np.allclose(counterexamples.divergenza_piece_masses(10), c / n ** 3, rtol=1e-12, atol=0)

    q = counterexamples.divergenza_density()
    mass = q.total_mass
    assert mass.is_finite and abs(mass.value - 1.0) <= 1e-6


def test_divergenza_moment_verdict():
    """ E[q^(1+eps)] diverges with the first divergent piece at n = ceil(1/eps)

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    for eps, first in ((1.0, 1), (0.5, 2), (0.3, 4), (0.25, 4), (0.1, 10), (2.0 ** -10, 1024)):
        verdict = counterexamples.divergenza_moment_verdict(eps)
        assert verdict.verdict == Verdict.DIVERGENT and verdict.first_divergent_piece == first, eps

    with pytest.raises(ValueError):
        counterexamples.divergenza_moment_verdict(0.0)

    assert counterexamples.divergenza_moment(1.25).is_divergent
    assert counterexamples.divergenza_moment(1.0).is_finite


def test_divergenza_kl_series():
    """ Both divergence series: the interval at N = 1000 contains the partial sum at N = 10000

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    for direction in counterexamples.DIRECTIONS:
        coarse = counterexamples.divergenza_kl_series(direction, 1000)
        fine = counterexamples.divergenza_kl_series(direction, 10000)
        assert coarse.terms_used == 1000 and coarse.tail_bound > fine.tail_bound
        assert coarse.value_interval[0] <= fine.partial_sum <= coarse.value_interval[1], direction
        assert fine.partial_sum > 0

    with pytest.raises(ValueError):
        counterexamples.divergenza_kl_series('q|p', 10)
    with pytest.raises(ValueError):
        counterexamples.divergenza_kl_series('q||p', 0)


def test_divergenza_kl_truncated():
    """ The engine, restricted to the first N pieces, reproduces the closed-form partial sums

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    for direction in counterexamples.DIRECTIONS:
        series = counterexamples.divergenza_kl_series(direction, 50)
        truncated = counterexamples.divergenza_kl_truncated(direction, 50)
        assert truncated.is_finite
        assert abs(series.partial_sum - truncated.value) <= 1e-7, direction


def test_co419():
    """ co419 is normalized; co419_q agrees with it on [0, t0] and is a density

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    p = counterexamples.co419_density()
    assert abs(p.total_mass.value - 1.0) <= 1e-6

    q = counterexamples.co419_q(0.25, 2.0)
    assert q.tail is None
    assert abs(q.total_mass.value - 1.0) <= 1e-9
    xs = np.array([0.01, 0.1, 0.2, 0.24])
    assert np.allclose(p(xs), q(xs), rtol=1e-14, atol=0)

    head = counterexamples.co419_head_mass(0.25)
    assert head.is_finite and 0 < head.value < 0.5

    with pytest.raises(ValueError):
        counterexamples.co419_q(0.5, 2.0)
    with pytest.raises(ValueError):
        counterexamples.co419_q(0.25, 0.0)


# ######################################################################################################################
# This section tests filtration.py
# ######################################################################################################################


def test_cdf_and_restrict():
    """ F(1/2) = 1/4 for 2x; the restriction keeps 2x on [0, 1/2] and spreads the rest uniformly

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    p = _beta(2.0)
    assert abs(filtration.cdf(p, 0.5) - 0.25) <= 1e-15
    assert filtration.cdf(p, 0.0) == 0.0

    result = filtration.restrict(p, 0.5)
    assert result.t == 0.5 and abs(result.F_t - 0.25) <= 1e-15
    assert abs(result.restricted(0.25) - 0.5) <= 1e-15
    assert abs(result.restricted(0.75) - 1.5) <= 1e-15
    assert result.restricted.validate() is result.restricted

    assert filtration.restrict(p, 1.0).restricted is p
    assert filtration.restrict(p, 0.0).restricted(0.3) == 1.0

    with pytest.raises(ValueError):
        filtration.restrict(p, 1.5)


@seed(3)
@settings(max_examples=30, deadline=None)
@given(t1=st.floats(min_value=0.05, max_value=0.95), t2=st.floats(min_value=0.05, max_value=0.95))
def test_restrict_tower(t1, t2):
    """ Restricting p_t2 to F_t1 gives p_min(t1, t2)

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    p = _beta(2.0)
    nested = filtration.restrict(filtration.restrict(p, t2).restricted, t1).restricted
    direct = filtration.restrict(p, min(t1, t2)).restricted
    assert filtration.sup_distance(direct, nested) <= 1e-10


def test_stability_scan_beta():
    """ Every restriction of 2x stays in the exponential model of the uniform density

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    scan = filtration.stability_scan(_beta(2.0), [0.25, 0.5, 1.0])
    assert scan.ts == (0.25, 0.5, 1.0)
    assert all(v == ArcVerdict.CONNECTED for v in scan.verdicts)
    assert scan.threshold is None and scan.monotone and scan.inconclusive == ()
    assert scan.rows()[0]['verdict'] == 'Connected'


def test_stability_scan_co419():
    """ The restrictions of co419 leave the model once t reaches the accumulation point 1/2 and stay out

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    scan = filtration.stability_scan(counterexamples.co419_density(), [0.75, 0.25, 0.5, 0.4])
    assert scan.ts == (0.25, 0.4, 0.5, 0.75)
    assert scan.verdicts == (ArcVerdict.CONNECTED, ArcVerdict.CONNECTED, ArcVerdict.NOT_CONNECTED,
                             ArcVerdict.NOT_CONNECTED)
    assert scan.threshold == 0.5 and scan.monotone


def test_co419_agreement():
    """ co419 and co419_q share their restrictions up to t0, yet only co419_q is connected to the uniform density

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    result = filtration.co419_agreement_check(0.25, 2.0)
    assert result.holds
    assert result.q_connected and not result.p_connected
    assert all(row.agree for row in result.rows)

    with pytest.raises(PreconditionError):
        filtration.co419_agreement_check(0.6, 2.0)


# ######################################################################################################################
# This section tests closure.py
# ######################################################################################################################


def test_closure_step():
    """ For p uniform and q = 2 on [0, 1/2], 0 elsewhere: c_n = 1 + 1/(2n) and ||q_n - q||_1 = (1/n)/c_n

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    step = closure.closure_step(lebesgue(), _target(), 10)
    assert abs(step.c_n - 1.05) <= 1e-12
    assert abs(step.l1_error - 0.1 / 1.05) <= 1e-12
    assert abs(step.q_n(0.25) - 2.0 / 1.05) <= 1e-12
    assert abs(step.q_n(0.75) - 0.1 / 1.05) <= 1e-12
    assert step.mixture_verdict == ArcVerdict.CONNECTED
    assert step.proof_bounds[0] <= 0.1 / 1.05 and 2.0 / 1.05 <= step.proof_bounds[1]


def test_closure_step_errors():
    """ closure_step validates p, n, a_n and the target

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    with pytest.raises(ValueError):
        closure.closure_step(lebesgue(), _target(), 0)
    with pytest.raises(ValueError):
        closure.closure_step(lebesgue(), _target(), 3, a_rule=lambda n: 0.0)
    with pytest.raises(PreconditionError):
        closure.closure_step(_target(), _steps(), 3)
    with pytest.raises(PreconditionError):
        closure.closure_step(lebesgue(), _beta(2.0), 3)


def test_closure_sequence():
    """ c_n -> 1 and the L^1 errors decrease to 0

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    sequence = closure.closure_sequence(lebesgue(), _target(), 6)
    assert len(sequence.iterates) == 6
    assert np.allclose(sequence.c_values, [1.0 + 0.5 / n for n in range(1, 7)], rtol=0, atol=1e-12)
    assert sequence.eventually_decreasing()
    assert all(e <= 2.0 / n for n, e in zip(range(1, 7), sequence.l1_errors))


def test_closure_sequence_quantizes():
    """ A target that is not simple is quantized first

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    sequence = closure.closure_sequence(lebesgue(), _beta(2.0), 2, level=0.25)
    assert sequence.target.is_simple and len(sequence.target.pieces) == 4


def test_quantize():
    """ Cell averages of 2x on the quarter grid are 1/4, 3/4, 5/4, 7/4

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    q = closure.quantize(_beta(2.0), 0.25)
    assert np.allclose([piece.form.coefficient for piece in q.pieces], [0.25, 0.75, 1.25, 1.75], rtol=0,
                       atol=1e-12)
    assert q.strictly_positive

    q = closure.quantize(_target(), 0.25)
    assert not q.strictly_positive

    with pytest.raises(ValueError):
        closure.quantize(_beta(2.0), 4.0)


def test_clamp():
    """ clamp(0.5 x^-1/2, 4) caps the singularity at 4 and keeps the rest

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    clamped = closure.clamp(_beta(0.5), 4)
    assert clamped(0.001) == 4.0
    assert abs(clamped(0.25) - 1.0) <= 1e-15
    xs = clamped.evaluation_grid()
    assert np.all(clamped(xs) >= 0.25) and np.all(clamped(xs) <= 4.0)

    with pytest.raises(ValueError):
        closure.clamp(_beta(0.5), 0)


def test_l1_distance_and_phi_membership():
    """ ||1 - 2x||_1 = 1/2 and E[(2x) log+(2x)] = log 2 - 3/8

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    d = closure.l1_distance(lebesgue(), _beta(2.0))
    assert d.is_finite and abs(d.value - 0.5) <= 1e-12

    x = closure.phi_membership(lebesgue(), _beta(2.0))
    assert x.is_finite and abs(x.value - (math.log(2.0) - 0.375)) <= 1e-9

    def square(v):
        return v * v

    x = closure.phi_membership(lebesgue(), _beta(2.0), square)
    assert abs(x.value - 4.0 / 3.0) <= 1e-8


def test_convexity_check():
    """ Mixtures of two members of the exponential model stay in it

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    report = closure.convexity_check(lebesgue(), _beta(2.0), _steps())
    assert report.holds
    assert len(report.rows) == 5
    assert all(row.exp_verdict == ArcVerdict.CONNECTED for row in report.rows)
    assert all(row.mix_verdict is None for row in report.rows)

    with pytest.raises(PreconditionError):
        closure.convexity_check(lebesgue(), _beta(2.0), counterexamples.divergenza_density())


# ######################################################################################################################
# This section tests acceptance.py
# ######################################################################################################################


def test_acceptance_pair_grid():
    """ The pair grid has 27 pairs of named densities, the counterexamples included

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    pairs = acceptance.pair_grid()
    assert len(pairs) == 27
    names = {q.name for _, q in pairs}
    assert {'divergenza', 'co419', 'co419_q(t0=0.25,beta=2)'} <= names
    densities = acceptance.pair_grid_densities()
    assert all(d.validate() is d for d in densities.values())


def test_check_pair_grid():
    """ The finite-divergence conditions agree and mixture arcs imply exponential arcs on every pair of the grid,
    including a polynomial density against a fractional power

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    entries = acceptance.check_pair_grid()
    assert [e.check_id for e in entries] == ['pairs.finitediv', 'pairs.mixture_implies_exponential']
    for e in entries:
        assert e.passed, e.detail


def test_verify_subset():
    """ A subset of the acceptance suite passes and ends with the report round-trip entry

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    report = acceptance.verify_all(only=['beta', 'closure', 'filtration.tower'])
    assert report.passed, report.to_text(color=False)
    assert report.entries[-1].anchor == 'plumbing'
    assert any(e.check_id.startswith('closure') for e in report.entries)
