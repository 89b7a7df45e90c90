"""The model growth function F(t) = e^t - 1 and its iterates."""
from __future__ import annotations

import math
from typing import NamedTuple

SATURATION = 1e300
_EXP_LIMIT = math.log(SATURATION)


class Iterated(NamedTuple):
    value: float
    saturated: bool


def F(t: float) -> float:
    return math.expm1(t)


def F_inv(t: float) -> float:
    if t <= -1.0:
        raise ValueError(f"F_inv undefined for t={t!r} (needs t > -1)")
    return math.log1p(t)


def F_iter(n: int, t: float) -> Iterated:
    """n-fold iterate of F; stops at SATURATION instead of overflowing.

    Negative n applies F_inv |n| times.
    """
    if n < 0:
        for _ in range(-n):
            t = F_inv(t)
        return Iterated(t, False)
    for _ in range(n):
        if t >= _EXP_LIMIT:
            return Iterated(SATURATION, True)
        t = F(t)
    if t >= SATURATION:
        return Iterated(SATURATION, True)
    return Iterated(t, False)


def F_iter_mp(n: int, t):
    """F^n at mpmath precision (huge exponents are fine there)."""
    import mpmath

    t = mpmath.mpf(t)
    if n >= 0:
        for _ in range(n):
            t = mpmath.expm1(t)
    else:
        for _ in range(-n):
            t = mpmath.log1p(t)
    return t


def log_F_iter_upper(n: int, t):
    """An upper bound for log F^n(t), t > 0, usable when F^n(t) is unrepresentable.

    log F^n(t) = log(e^y - 1) with y = F^{n-1}(t), which is < y; when y is small
    enough the exact value is returned.
    """
    import mpmath

    if n == 0:
        return mpmath.log(t)
    y = F_iter_mp(n - 1, t)
    if y < 1e4:
        return mpmath.log(mpmath.expm1(y))
    return y
