"""Numerics for a single map E(z) = exp(z) + kappa."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .addresses import ExtAddress, Infinite, boundedness_threshold, shift_n
from .errors import (
    BranchCollision, NoConvergence, Overflow, PotentialTooLow, StripBoundary, UnsupportedBase,
    ValidationError, WrongExactPeriod,
)
from .potential import F, F_iter

TWO_PI = 2 * math.pi
EXP_MAX = 709.0
SEED_LEVEL = 40.0  # seed error e^-40 is below double precision
STRIP_TOL = 1e-9


def E(kappa: complex, z: complex) -> complex:
    """One step of the map; returns an infinite real part instead of raising."""
    x, y = z.real, z.imag
    if x > EXP_MAX:
        s = math.sin(y)
        im = kappa.imag if s == 0 else math.copysign(math.inf, s)
        return complex(math.inf, im)
    return cmath.exp(z) + kappa


def orbit(kappa: complex, z: complex, n: int) -> list[complex]:
    """[z, E(z), ..., E^n(z)], truncated after the first non-finite point."""
    pts = [complex(z)]
    for _ in range(n):
        w = pts[-1]
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            break
        pts.append(E(kappa, w))
    return pts


def strip_index(y: float, tol: float = STRIP_TOL) -> int:
    """Index s with y in the half-open strip ((2s-1)pi, (2s+1)pi]."""
    s = math.ceil((y / math.pi - 1) / 2)
    # boundary lines are the odd multiples of pi
    if min(abs(y - (2 * s - 1) * math.pi), abs(y - (2 * s + 1) * math.pi)) < tol:
        raise StripBoundary(0, y)
    return s


def external_address_prefix(kappa: complex, z: complex, n: int, tol: float = STRIP_TOL) -> tuple[int, ...]:
    kappa, w = complex(kappa), complex(z)
    out = []
    for k in range(1, n + 1):
        # an infinite real part is fine as long as the strip is known
        if not math.isfinite(w.imag) or math.isnan(w.real):
            raise Overflow(f"orbit left double range before step {k}", k=k)
        try:
            out.append(strip_index(w.imag, tol))
        except StripBoundary:
            raise StripBoundary(k, w.imag) from None
        if k < n:
            w = E(kappa, w)
    return tuple(out)


# -- escape certificates --------------------------------------------------------

def certificate_level(kappa: complex) -> float:
    return max(complex(kappa).real - 1.0, TWO_PI + 6.0)


def escape_certificate(kappa: complex, z: complex, k_max: int = 64) -> Optional[float]:
    """Certified lower bound x for the potential of z, or None.

    Checks re E^k(z) >= F^k(x) for k = 0..k_max until F^k(x) saturates,
    with x = max(re kappa - 1, 2 pi + 6).
    """
    if k_max < 1:
        raise ValidationError("k_max must be >= 1")
    x = certificate_level(kappa)
    return x if _fast_from(kappa, complex(z), x, 0, k_max) else None


def lagged_escape_certificate(kappa: complex, z: complex, x0: float, k_max: int = 64):
    """Certificate for potential >= x0 when x0 is below the direct level.

    Finds the least lag l with F^l(x0) >= certificate_level(kappa) and checks
    re E^k(z) >= F^k(x0) for k >= l.  Then E^l(z) is a fast point at potential
    >= F^l(x0), and pulling back along the ray gives potential >= x0 for z.
    Returns (x0, l) or None.
    """
    level = certificate_level(kappa)
    lag, v = 0, x0
    while v < level:
        v = F(v)
        lag += 1
        if lag > 8:
            return None
    w = complex(z)
    for _ in range(lag):
        w = E(kappa, w)
    ok = _fast_from(kappa, w, v, 0, k_max)
    return (x0, lag) if ok else None


def _fast_from(kappa, w, x, k0, k_max) -> bool:
    fx = x
    for k in range(k0, k_max + 1):
        if not w.real >= fx:
            return False
        if math.isinf(w.real) or fx >= 1e300:
            return True
        if fx >= EXP_MAX:
            # next F value saturates; the next iterate must still be huge
            return E(kappa, w).real >= 1e300 or math.isinf(E(kappa, w).real)
        fx = F(fx)
        w = E(kappa, w)
    return True


# -- dynamic rays ---------------------------------------------------------------

def t_min(s: ExtAddress, kappa: complex) -> float:
    """Conservative lower potential below which traces are refused."""
    logk = max(0.0, math.log(abs(kappa))) if kappa != 0 else 0.0
    return max(logk + 4.0, boundedness_threshold(s))


def seed_depth(t: float) -> int:
    m, v = 0, t
    while v < SEED_LEVEL:
        v = F(v)
        m += 1
    return m


def _pullback(kappa: complex, s: Infinite, t: float, m: int) -> list[complex]:
    """Points z_0..z_m with z_m the asymptotic seed at depth m."""
    v = F_iter(m, t).value
    z = complex(v, TWO_PI * s.entry(m + 1))
    pts = [z]
    for k in range(m, 0, -1):
        d = z - kappa
        if abs(d) < 1e-12 * max(1.0, abs(kappa)):
            raise BranchCollision(f"pullback hits the singular value at depth {k}", depth=k)
        z = cmath.log(d) + complex(0.0, TWO_PI * s.entry(k))
        pts.append(z)
    pts.reverse()
    return pts


def trace_dynamic_ray(kappa: complex, s: ExtAddress, t: float, tol: float = 1e-9, check: bool = True) -> complex:
    """g_s(t) for the map with parameter kappa, by backward iteration."""
    if not isinstance(s, Infinite):
        raise UnsupportedBase("dynamic rays need an infinite address")
    kappa = complex(kappa)
    lo = t_min(s, kappa)
    if t < lo:
        raise PotentialTooLow(f"t={t} below t_min={lo}", t=t, t_min=lo)
    pts = _pullback(kappa, s, t, seed_depth(t))
    z0 = pts[0]
    if check and len(pts) > 1:
        r = functional_residual(kappa, s, t, z0)
        if r >= tol:
            raise NoConvergence(f"functional equation residual {r:.3g}", residual=r)
    return z0


def functional_residual(kappa: complex, s: Infinite, t: float, z0: complex) -> float:
    """|E(z0) - g_{sigma s}(F(t))| relative to max(1, |g_{sigma s}(F(t))|)."""
    ft = F(t)
    z1 = _pullback(kappa, shift_n(s, 1), ft, seed_depth(ft))[0]
    return abs(E(kappa, z0) - z1) / max(1.0, abs(z1))


@dataclass
class DynRayTrace:
    address: Infinite
    kappa: complex
    samples: list = field(default_factory=list)  # (t, z)
    depth_used: int = 0
    error_estimate: float = 0.0
    t_min: float = 0.0


def sample_dynamic_ray(kappa: complex, s: Infinite, ts: Sequence[float]) -> DynRayTrace:
    kappa = complex(kappa)
    tr = DynRayTrace(s, kappa, t_min=t_min(s, kappa))
    for t in ts:
        z = trace_dynamic_ray(kappa, s, t, check=False)
        m = seed_depth(t)
        tr.samples.append((t, z))
        tr.depth_used = max(tr.depth_used, m)
        tr.error_estimate = max(tr.error_estimate, math.exp(-F_iter(m, t).value))
    return tr


# -- periodic orbits --------------------------------------------------------------

@dataclass
class PeriodicOrbit:
    points: list
    multiplier: complex
    residual: float = 0.0


def _iterate_with_derivative(kappa, z, n):
    d = 1.0 + 0j
    for _ in range(n):
        if z.real > EXP_MAX:
            raise Overflow("orbit overflow during Newton", z=z)
        e = cmath.exp(z)
        d *= e
        z = e + kappa
    return z, d


def find_periodic_orbit(kappa: complex, n: int, seed: complex, max_iter: int = 60,
                        tol: float = 1e-10) -> PeriodicOrbit:
    if n < 1:
        raise ValidationError("period must be >= 1")
    kappa, z = complex(kappa), complex(seed)
    for _ in range(max_iter):
        try:
            w, d = _iterate_with_derivative(kappa, z, n)
        except Overflow:
            raise NoConvergence("Newton left the double range", period=n) from None
        g = w - z
        if g == 0:
            break
        if d == 1:
            raise NoConvergence("singular Newton step", period=n)
        step = g / (d - 1)
        if abs(step) > 10:
            step *= 10 / abs(step)
        z -= step
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            break
    pts = orbit(kappa, z, n - 1)
    res = abs(E(kappa, pts[-1]) - pts[0]) if len(pts) == n else math.inf
    if not res < tol * max(1.0, abs(z)):
        raise NoConvergence(f"no period-{n} orbit after {max_iter} steps", period=n, last=z, residual=res)
    for dv in range(1, n):
        if n % dv == 0 and abs(pts[dv] - pts[0]) < 1e-8 * max(1.0, abs(pts[0])):
            raise WrongExactPeriod(dv, n)
    mu = 1 + 0j
    for a in pts:
        mu *= cmath.exp(a)
    return PeriodicOrbit(pts, mu, res)


# -- classification of the singular orbit -----------------------------------------

@dataclass(frozen=True)
class Escaping:
    certified_x: float
    steps: int  # iterate at which the certificate was found (escape speed)


@dataclass(frozen=True)
class Attracting:
    period: int
    multiplier: complex


@dataclass(frozen=True)
class Unresolved:
    reason: str = ""


Status = Union[Escaping, Attracting, Unresolved]


@dataclass
class OrbitRecord:
    kappa: complex
    start: complex
    points: list
    status: Status


def classify_singular_orbit(kappa: complex, max_iter: int = 200, period_cap: int = 8,
                            keep_points: bool = False):
    kappa = complex(kappa)
    x = certificate_level(kappa)
    z = kappa
    pts = [z] if keep_points else None
    hist = []
    for k in range(max_iter):
        if z.real >= x and _fast_from(kappa, z, x, 0, 64):
            return _record(kappa, pts, Escaping(x, k), keep_points)
        hist.append(z)
        z = E(kappa, z)
        if keep_points:
            pts.append(z)
        if not math.isfinite(z.real):
            return _record(kappa, pts, Unresolved("overflow without certificate"), keep_points)
        if k >= 8 and k % 8 == 0:
            st = _detect_cycle(kappa, hist, period_cap)
            if st is not None:
                return _record(kappa, pts, st, keep_points)
    st = _detect_cycle(kappa, hist, period_cap)
    return _record(kappa, pts, st or Unresolved("no cycle detected"), keep_points)


def _record(kappa, pts, status, keep):
    if keep:
        return OrbitRecord(kappa, kappa, pts, status)
    return status


def _detect_cycle(kappa, hist, period_cap):
    if len(hist) < 2:
        return None
    z = hist[-1]
    for n in range(1, min(period_cap, len(hist) - 1) + 1):
        if abs(hist[-1 - n] - z) < 1e-3 * max(1.0, abs(z)):
            try:
                orb = find_periodic_orbit(kappa, n, z)
            except (NoConvergence, WrongExactPeriod):
                continue
            if abs(orb.multiplier) < 1 - 1e-6:
                return Attracting(n, orb.multiplier)
            return None
    return None
