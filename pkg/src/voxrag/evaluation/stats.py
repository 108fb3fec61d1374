"""Paired statistics: sample moments, paired t-test, paired Cohen's d, Pearson r.

The two-tailed p-value comes from the Student-t CDF evaluated through the
regularized incomplete beta function (continued fraction), so no stats
library is assumed. Cohen's d here is the paired d_z = mean(diff)/sd(diff),
which satisfies t = d_z * sqrt(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..errors import DegenerateVariance, LengthMismatch

_BETACF_TOL = 1e-14
_BETACF_MAX_ITER = 500


def mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def sample_std(xs: Sequence[float]) -> float:
    """Standard deviation with the n-1 denominator."""
    if len(xs) < 2:
        raise ValueError("sample std needs n >= 2")
    m = mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def _betacf(a: float, b: float, x: float) -> float:
    # continued fraction for the incomplete beta, modified Lentz's method
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m_i in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m_i
        aa = m_i * (b - m_i) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m_i) * (qab + m_i) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_TOL:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must be in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_p_two_tailed(t: float, dof: int) -> float:
    """P(|T| >= t) for T ~ Student-t with dof degrees of freedom."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if t == 0.0:
        return 1.0
    x = dof / (dof + t * t)
    p = regularized_incomplete_beta(dof / 2.0, 0.5, x)
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class PairedStats:
    t: float
    p_value: float
    d_z: float
    n: int
    mean_diff: float
    sd_diff: float


def paired_stats(a: Sequence[float], b: Sequence[float]) -> PairedStats:
    """Two-tailed paired t-test and paired Cohen's d over elementwise a - b.

    Raises LengthMismatch for unequal lengths and DegenerateVariance when the
    differences have zero variance (including a == b elementwise).
    """
    if len(a) != len(b):
        raise LengthMismatch(f"paired samples of length {len(a)} and {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("paired test needs n >= 2")
    diffs = [x - y for x, y in zip(a, b)]
    sd = sample_std(diffs)
    if sd == 0.0:
        raise DegenerateVariance("differences have zero variance")
    mean_d = mean(diffs)
    d_z = mean_d / sd
    t = d_z * math.sqrt(n)
    return PairedStats(t=t, p_value=student_t_p_two_tailed(t, n - 1), d_z=d_z,
                       n=n, mean_diff=mean_d, sd_diff=sd)


def pearson_r(a: Sequence[float], b: Sequence[float]) -> float:
    """Sample Pearson correlation, two-pass."""
    if len(a) != len(b):
        raise LengthMismatch(f"samples of length {len(a)} and {len(b)}")
    if len(a) < 2:
        raise ValueError("correlation needs n >= 2")
    ma, mb = mean(a), mean(b)
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    if va == 0.0 or vb == 0.0:
        raise DegenerateVariance("correlation undefined for constant data")
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    return max(-1.0, min(1.0, cov / math.sqrt(va * vb)))
