"""
Shared records, verdict codes and exceptions used across orlicz_models
"""
import math
from enum import Enum
from typing import Iterable, NamedTuple, Optional


class Verdict(Enum):
    """ Outcome of a convergence decision """
    FINITE = 'Finite'
    DIVERGENT = 'Divergent'
    INCONCLUSIVE = 'Inconclusive'


class Provenance(Enum):
    """ How an integral value was obtained. Ordered from most to least exact. """
    CLOSED_FORM = 'ClosedForm'
    QUADRATURE = 'Quadrature'
    SERIES_WITH_TAIL = 'SeriesWithTail'


_PROVENANCE_RANK = {Provenance.CLOSED_FORM: 0, Provenance.QUADRATURE: 1, Provenance.SERIES_WITH_TAIL: 2}


class Mode(Enum):
    """ Whether a piece of evidence was decided analytically or only numerically """
    ANALYTIC = 'Analytic'
    NUMERIC = 'Numeric'


class IntegralValue(NamedTuple):
    """ Numeric value with an error bound, a convergence verdict and provenance.
    Divergent values carry value=None; Finite values always have a finite error_bound.
    """
    value: Optional[float]
    error_bound: float
    verdict: Verdict
    provenance: Provenance

    @classmethod
    def finite(cls, value, error_bound=0.0, provenance=Provenance.CLOSED_FORM):
        return cls(float(value), float(abs(error_bound)), Verdict.FINITE, provenance)

    @classmethod
    def divergent(cls, provenance=Provenance.CLOSED_FORM):
        return cls(None, math.inf, Verdict.DIVERGENT, provenance)

    @classmethod
    def inconclusive(cls, value=None, error_bound=math.inf, provenance=Provenance.QUADRATURE):
        return cls(value, error_bound, Verdict.INCONCLUSIVE, provenance)

    @property
    def is_finite(self):
        return self.verdict == Verdict.FINITE

    @property
    def is_divergent(self):
        return self.verdict == Verdict.DIVERGENT

    def scaled(self, k):
        if self.value is None:
            return self
        return self._replace(value=k * self.value, error_bound=abs(k) * self.error_bound)


#####################
# Exceptions
#####################

class OrliczModelsError(Exception):
    """ Base class for hard failures """


class UnannotatedSingularityError(OrliczModelsError):
    def __init__(self, point, detail=''):
        self.point = point
        super().__init__(f'unannotated singularity at x = {point!r}{": " + detail if detail else ""}')


class IncompatiblePartitionError(OrliczModelsError):
    pass


class NonMonotoneError(OrliczModelsError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or []
        super().__init__(message)


class NotCenteredError(OrliczModelsError):
    def __init__(self, offset):
        self.offset = offset
        super().__init__(f'random variable is not centered: E_p[u] = {offset!r}')


class PreconditionError(OrliczModelsError):
    pass


class VerdictDisagreementError(OrliczModelsError):
    pass


class InvalidYoungFunctionError(OrliczModelsError):
    pass


class DensitySpecError(OrliczModelsError):
    pass


#####################
# Summation helpers
#####################

def combine_provenance(provenances: Iterable[Provenance]):
    """ Least exact provenance of a collection """
    result = Provenance.CLOSED_FORM
    for p in provenances:
        if _PROVENANCE_RANK[p] > _PROVENANCE_RANK[result]:
            result = p
    return result


def sum_values(values, weights=None):
    """ Sums integral values (optionally weighted) with compensated summation in the given order.

    Parameters
    ----------
    values: sequence of IntegralValue
    weights: optional sequence of real weights, same length as values

    Returns
    -------
    IntegralValue. Divergent if any summand with nonzero weight is Divergent, Inconclusive if any is Inconclusive.
    """
    values = list(values)
    if weights is None:
        weights = [1.0] * len(values)
    active = [(v, w) for v, w in zip(values, weights) if w != 0]
    provenance = combine_provenance(v.provenance for v, _ in active)
    if any(v.is_divergent for v, _ in active):
        return IntegralValue.divergent(provenance)
    if any(v.verdict == Verdict.INCONCLUSIVE for v, _ in active):
        partial = [w * v.value for v, w in active if v.value is not None]
        return IntegralValue.inconclusive(math.fsum(partial) if partial else None, math.inf, provenance)
    total = math.fsum(w * v.value for v, w in active)
    error = math.fsum(abs(w) * v.error_bound for v, w in active)
    return IntegralValue(total, error, Verdict.FINITE, provenance)


#####################
# JSON helpers
#####################

def json_number(x):
    """ JSON doesn't allow Infinity or NaN. Infinities are written as strings, NaN as None. """
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return 'inf' if x > 0 else '-inf'
    return x


def json_interval(interval):
    if interval is None:
        return None
    return [json_number(interval[0]), json_number(interval[1])]
