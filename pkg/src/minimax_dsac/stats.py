"""Two-sample Welch t-test.

The p-value uses the regularized incomplete beta function evaluated by the
standard continued-fraction expansion (modified Lentz), so the test has no
dependency on an external statistics library.
"""

from __future__ import annotations

import math

import numpy as np

_MAX_ITER = 300
_CF_EPS = 1e-15
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise RuntimeError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_bt = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    bt = math.exp(log_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with df degrees of freedom."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    return betainc_reg(0.5 * df, 0.5, df / (df + t * t))


def welch_t_test(sample_a, sample_b) -> tuple[float, float]:
    """Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom.

    Returns (t, p). Requires at least two observations per sample and a
    nonzero combined variance.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise ValueError(f"need >= 2 observations per sample, got {na} and {nb}")
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    sa, sb = va / na, vb / nb
    se_sq = sa + sb
    if se_sq <= 0.0:
        raise ValueError("degenerate variance: both samples are constant")
    t = (float(a.mean()) - float(b.mean())) / math.sqrt(se_sq)
    df = se_sq * se_sq / (sa * sa / (na - 1) + sb * sb / (nb - 1))
    return t, student_t_two_sided_p(t, df)


def confidence_band(curves: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pointwise mean and 95% normal-approximation band over seed runs.

    curves has one row per run; the band is mean +- 1.96 * std / sqrt(n),
    with sample (ddof=1) standard deviation, zero for a single run.
    """
    curves = np.atleast_2d(np.asarray(curves, dtype=np.float64))
    n = curves.shape[0]
    mean = curves.mean(axis=0)
    if n < 2:
        half = np.zeros_like(mean)
    else:
        half = 1.96 * curves.std(axis=0, ddof=1) / math.sqrt(n)
    return mean, mean - half, mean + half
