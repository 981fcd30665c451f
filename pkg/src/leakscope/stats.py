"""Welch two-sample t-test with a self-contained Student-t p-value.

The p-value is evaluated through the regularized incomplete beta function
using Lentz's continued fraction, so no special-function library is needed.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DegenerateVariance, EmptySample, InsufficientSamples

DEFAULT_ALPHA = 0.05

_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 100_000


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    variance: float

    @property
    def degenerate(self) -> bool:
        """True when the spread is unknown (a single observation)."""
        return self.n < 2


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: Optional[float]
    p: float
    alpha: float
    reject: bool


def summarize(counts: Sequence[int]) -> SummaryStats:
    """Sample size, arithmetic mean and unbiased variance of ``counts``."""
    values = list(counts)
    n = len(values)
    if n == 0:
        raise EmptySample("cannot summarize an empty sample")
    mean = math.fsum(values) / n
    if n == 1:
        return SummaryStats(1, float(mean), 0.0)
    variance = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    return SummaryStats(n, float(mean), float(variance))


def welch_t(a: SummaryStats, b: SummaryStats):
    """Welch t-statistic and Welch-Satterthwaite degrees of freedom.

    Returns ``(t, df)``. The sign follows ``a.mean - b.mean``.
    """
    if a.n < 2 or b.n < 2:
        raise InsufficientSamples(f"need >= 2 samples per group, got {a.n} and {b.n}")
    if a.variance == 0 and b.variance == 0:
        raise DegenerateVariance("both samples have zero variance")
    va = a.variance / a.n
    vb = b.variance / b.n
    se2 = va + vb
    t = (a.mean - b.mean) / math.sqrt(se2)
    df = se2 * se2 / (va * va / (a.n - 1) + vb * vb / (b.n - 1))
    return t, df


def _beta_cf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _stirling_tail(x: float) -> float:
    # lgamma(x) - [(x - 0.5) ln x - x + 0.5 ln 2pi], valid for x >= 10
    x2 = x * x
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * x2)) / x2) / x2) / x2) / x


def _log_inv_beta(a: float, b: float) -> float:
    """ln(Gamma(a+b) / (Gamma(a) Gamma(b))) without cancellation for large a or b."""
    big, small = max(a, b), min(a, b)
    if big < 10.0:
        return math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    return (
        (big - 0.5) * math.log1p(small / big)
        + small * math.log(big + small)
        - small
        + _stirling_tail(big + small)
        - _stirling_tail(big)
        - math.lgamma(small)
    )


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b) for a, b > 0."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = _log_inv_beta(a, b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def p_two_tailed(t: float, df: float) -> float:
    """Two-sided p-value of Student's t distribution with ``df`` degrees of freedom."""
    if not df > 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if math.isnan(t):
        raise ValueError("t is NaN")
    if math.isinf(t):
        return 0.0
    if t == 0:
        return 1.0
    t2 = t * t
    # I_x(df/2, 1/2) with x = df/(df+t^2); the complement is computed from
    # t^2/(df+t^2) directly to avoid cancellation when |t| is small
    x = df / (df + t2)
    one_minus_x = t2 / (df + t2)
    a = df / 2.0
    b = 0.5
    if x < (a + 1.0) / (a + b + 2.0):
        p = betainc_regularized(a, b, x)
    else:
        p = 1.0 - betainc_regularized(b, a, one_minus_x)
    return min(1.0, max(0.0, p))


def t_test(a_counts, b_counts, alpha: float = DEFAULT_ALPHA) -> TTestResult:
    """Welch t-test of ``a_counts`` against ``b_counts`` at level ``alpha``.

    When both samples are constant the statistic is undefined; equal
    constants count as indistinguishable (t=0, p=1) and different constants
    as perfectly distinguishable (t=+-inf, p=0).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    a = summarize(a_counts)
    b = summarize(b_counts)
    if a.n < 2 or b.n < 2:
        raise InsufficientSamples(f"need >= 2 samples per group, got {a.n} and {b.n}")
    try:
        t, df = welch_t(a, b)
    except DegenerateVariance:
        if a.mean == b.mean:
            return TTestResult(0.0, None, 1.0, alpha, False)
        t = math.copysign(math.inf, a.mean - b.mean)
        return TTestResult(t, None, 0.0, alpha, True)
    p = p_two_tailed(t, df)
    return TTestResult(t, df, p, alpha, p < alpha)
