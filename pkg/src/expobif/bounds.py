"""Quantitative checks across the parameter plane: wake bounds, vertical order, squeezing."""
from __future__ import annotations

import math
from fractions import Fraction

import mpmath

from .addresses import (
    Infinite, Intermediate, WakeInterval, compare, format_address, is_exponentially_bounded,
)
from .errors import HypothesisFailed, ValidationError
from .parameter import ComponentRecord, _ray_fixed_point, find_component_parameter, parameter_ray_certificate
from .potential import F_iter, F_iter_mp

TWO_PI = 2 * math.pi


# -- parameter wakes -------------------------------------------------------------

def _window_minimum(s: Infinite, n: int) -> float:
    """min over k of max_{k <= l < k+n} 2 pi |s_l|."""
    return min(max(TWO_PI * abs(s.entry(l)) for l in range(k, k + n))
               for k in range(1, s.horizon() + 1))


def _threshold(n: int) -> float:
    v = F_iter(n - 1, 6.0)
    return math.inf if v.saturated else v.value


def wake_parameter_bound(w: WakeInterval, n: int, M: float) -> float:
    """Lower bound F^{-(n-1)}(M - pi) - 2 for |kappa| in the parameter wake of w.

    Requires M > F^{n-1}(6) and a window of n consecutive entries with
    2 pi |s_l| >= M starting at every position, for both characteristic addresses.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not M > _threshold(n):
        raise HypothesisFailed(f"M={M:.6g} does not exceed F^{n - 1}(6)", n=n, M=M)
    for side, s in (("minus", w.s_minus), ("plus", w.s_plus)):
        for k in range(1, s.horizon() + 1):
            window = [s.entry(l) for l in range(k, k + n)]
            if max(TWO_PI * abs(e) for e in window) < M:
                raise HypothesisFailed(
                    f"window {window} at position {k} of {format_address(s)} has no entry with 2 pi |s| >= M",
                    side=side, k=k, window=window, n=n, M=M)
    v = M - math.pi
    for _ in range(n - 1):
        v = math.log1p(v)
    return v - 2


def admissible_wake_bound(w: WakeInterval, n_max: int = 4):
    """The best bound over the window lengths n <= n_max whose hypothesis holds.

    M is taken as large as the characteristic addresses allow.  Returns (bound, n, M);
    raises HypothesisFailed listing each window length when none qualifies.
    """
    best, tried = None, []
    for n in range(1, n_max + 1):
        M = min(_window_minimum(w.s_minus, n), _window_minimum(w.s_plus, n))
        tried.append({"n": n, "M": M, "needs": _threshold(n)})
        try:
            b = wake_parameter_bound(w, n, M)
        except HypothesisFailed:
            continue
        if best is None or b > best[0]:
            best = (b, n, M)
    if best is None:
        raise HypothesisFailed("no window length satisfies the entry-size hypothesis",
                               wake=f"({format_address(w.s_minus)}, {format_address(w.s_plus)})", tried=tried)
    return best


# -- vertical order ------------------------------------------------------------------

def vertical_order_check(records: list[ComponentRecord], R: float) -> bool:
    """True iff the components, sampled at re kappa = R, are stacked by imaginary part
    in the same order as their addresses."""
    if len(records) <= 1:
        return True
    pts = []
    for rec in records:
        if not isinstance(rec.address, Intermediate):
            raise ValidationError("vertical order needs intermediate addresses")
        if abs(rec.sample.real - R) > 1e-6:
            rec = find_component_parameter(rec.address, R)
        pts.append((rec.address, rec.exact_sample if rec.exact_sample is not None else mpmath.mpc(rec.sample)))
    by_im = sorted(range(len(pts)), key=lambda i: pts[i][1].imag)
    by_addr = sorted(range(len(pts)), key=_cmp_key(pts))
    return by_im == by_addr


def _cmp_key(pts):
    import functools

    return functools.cmp_to_key(lambda i, j: compare(pts[i][0], pts[j][0]))


# -- squeezing ---------------------------------------------------------------------

def flanking_addresses(s: Infinite, n: int) -> tuple[Intermediate, Intermediate]:
    """s_1 ... s_{n-2} (s_{n-1} -/+ 1/2) inf."""
    if n < 2:
        raise ValidationError("n must be >= 2")
    head = tuple(s.entry(k) for k in range(1, n - 1))
    c = s.entry(n - 1)
    return Intermediate(head, Fraction(2 * c - 1, 2)), Intermediate(head, Fraction(2 * c + 1, 2))


def matched_ray_parameter(s: Infinite, R: float, tol: float = 1e-12) -> tuple[float, complex]:
    """(t, kappa) on the parameter ray G_s with re kappa = R, by a secant search in t."""
    t0, t1 = R, R + 0.5
    k0 = _ray_fixed_point(s, t0, complex(t0, TWO_PI * s.entry(1)))
    k1 = _ray_fixed_point(s, t1, k0)
    for _ in range(60):
        f0, f1 = k0.real - R, k1.real - R
        if abs(f1) < tol or f1 == f0:
            break
        t0, t1 = t1, t1 - f1 * (t1 - t0) / (f1 - f0)
        k0, k1 = k1, _ray_fixed_point(s, t1, k1)
    return t1, k1


def squeezing_strip_diameters(s: Infinite, x: float, n_range, R: float = 8.0):
    """Separation of the two components flanking s at depth n, at re kappa = R.

    Returns a list of dicts with n, separation (mpf), bound = 2 pi / F^{n-2}(x+1),
    the flanking parameters (mpc) and the matched parameter-ray point.
    """
    if x < 3 or not is_exponentially_bounded(s, x):
        raise ValidationError("s must be exponentially bounded with witness x >= 3")
    t, g = matched_ray_parameter(s, R)
    cert = parameter_ray_certificate(g)
    out = []
    for n in n_range:
        lo, hi = flanking_addresses(s, n)
        recs = [find_component_parameter(a, R) for a in (lo, hi)]
        k_lo, k_hi = (r.exact_sample if r.exact_sample is not None else mpmath.mpc(r.sample) for r in recs)
        with mpmath.workdps(40):
            sep = abs(k_hi - k_lo)
            bound = 2 * mpmath.pi / F_iter_mp(n - 2, x + 1)
            between = mpmath.im(k_lo) < g.imag < mpmath.im(k_hi)
        out.append({"n": n, "separation": sep, "bound": bound, "minus": k_lo, "plus": k_hi,
                    "addresses": (lo, hi), "ray_t": t, "ray_kappa": g, "between": between,
                    "certificate": cert})
    return out
