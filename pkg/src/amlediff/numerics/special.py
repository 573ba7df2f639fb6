"""Regularised incomplete gamma functions and the chi-square quantile."""
from __future__ import annotations

import math

from ..errors import InputError

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 1000


def _gamma_series(a, x):
    # lower regularised P(a, x), valid for x < a + 1
    ap = a
    term = total = 1.0 / a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_contfrac(a, x):
    # upper regularised Q(a, x) by modified Lentz, valid for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc_lower(a: float, x: float) -> float:
    """Regularised lower incomplete gamma P(a, x)."""
    if a <= 0.0:
        raise InputError("shape a must be positive")
    if x < 0.0:
        raise InputError("x must be non-negative")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_contfrac(a, x)


def gammainc_upper(a: float, x: float) -> float:
    """Regularised upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0.0:
        raise InputError("shape a must be positive")
    if x < 0.0:
        raise InputError("x must be non-negative")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_contfrac(a, x)


def chi2_cdf(q: float, df: int) -> float:
    return gammainc_lower(df / 2.0, q / 2.0) if q > 0 else 0.0


def chi2_quantile(p_tail: float, df: int) -> float:
    """Value ``q`` with upper-tail probability ``p_tail`` under chi-square(df).

    Bisection on ``[0, df + 40 sqrt(df)]`` (widened if needed). The tail that
    is smaller is matched directly so that ``1 - p`` cancellation is avoided.
    """
    if isinstance(df, bool) or int(df) != df or df < 1:
        raise InputError(f"degrees of freedom must be a positive integer, got {df!r}")
    if not (0.0 < p_tail < 1.0):
        raise InputError(f"tail probability must lie in (0, 1), got {p_tail!r}")
    a = df / 2.0
    if p_tail < 0.5:
        def above(q):
            return gammainc_upper(a, q / 2.0) < p_tail
    else:
        def above(q):
            return gammainc_lower(a, q / 2.0) > 1.0 - p_tail

    lo, hi = 0.0, df + 40.0 * math.sqrt(df)
    while not above(hi):
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if above(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
