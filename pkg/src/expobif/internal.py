"""Internal rays of hyperbolic components by multi-shooting continuation.

The unknowns are the attracting cycle a_1..a_n and kappa.  The cycle relations
are written in log form, a_j = log(a_{j+1} - kappa) (branch tracked), except
for the closing relation a_1 = exp(a_n) + kappa, where a_n is kept as the
leftmost point of the cycle.  The last equation fixes the log-multiplier:
sum(a_j) = t + 2 pi i h + offset.  This keeps every equation well scaled from
the parabolic boundary all the way to parameters with astronomically small
multipliers (in mpmath).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath

from .addresses import format_address, wake_contains, characteristic_addresses
from .dynamics import E, find_periodic_orbit
from .errors import (
    ContinuationBreakdown, NoConvergence, NotReadable, Overflow, PerturbationFailed,
    ValidationError, WakeViolation, WrongExactPeriod,
)
from .parameter import ComponentRecord, _c, _is_mp, read_component_address

TWO_PI = 2 * math.pi
MP_DPS = 40
MAX_NEWTON = 12
ACCEPT = 0.05  # largest relative corrector move accepted in one step


@dataclass
class InternalRayTrace:
    h: float
    samples: list = field(default_factory=list)  # (t, kappa, a_1, multiplier)
    landing: Optional[complex] = None


# -- linear algebra and elementary functions for both number types -----------------

def _solve(A, b):
    """Gaussian elimination with partial pivoting; works for complex and mpc."""
    n = len(b)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for c in range(n):
        p = max(range(c, n), key=lambda r: abs(M[r][c]))
        if M[p][c] == 0:
            raise ZeroDivisionError("singular Jacobian")
        M[c], M[p] = M[p], M[c]
        piv = M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / piv
            if f != 0:
                for k in range(c, n + 1):
                    M[r][k] -= f * M[c][k]
    x = [0] * n
    for r in range(n - 1, -1, -1):
        s = M[r][n]
        for k in range(r + 1, n):
            s -= M[r][k] * x[k]
        x[r] = s / M[r][r]
    return x


def _mp_exp(w):
    # far left values are below working precision; skip the costly reduction
    if w.real < -10 * mpmath.mp.dps - 50:
        return mpmath.mpc(0)
    return mpmath.exp(w)


class _Ops:
    def __init__(self, mp: bool):
        self.mp = mp
        if mp:
            self.exp, self.log = _mp_exp, mpmath.log
            self.two_pi = 2 * mpmath.pi
            self.i = mpmath.mpc(0, 1)
        else:
            self.exp, self.log = cmath.exp, cmath.log
            self.two_pi = TWO_PI
            self.i = 1j

    def num(self, v):
        if self.mp:
            return v if isinstance(v, mpmath.mpc) else mpmath.mpc(v)
        return _c(v)

    def wrap(self, v):
        """Reduce the imaginary part into (-pi, pi]."""
        q = float(v.imag / self.two_pi)
        if not abs(q) < 1e12:
            return v  # a diverging iterate; Newton rejects it
        return v - self.i * self.two_pi * round(q)

    def finite(self, v):
        if self.mp:
            return mpmath.isfinite(v.real) and mpmath.isfinite(v.imag)
        return math.isfinite(v.real) and math.isfinite(v.imag)


def _equations(x, T, ops):
    n = len(x) - 1
    a, k = x[:n], x[n]
    G = []
    for j in range(n - 1):
        G.append(ops.wrap(a[j] - ops.log(a[j + 1] - k)))
    G.append(a[0] - ops.exp(a[n - 1]) - k)
    G.append(sum(a[1:], a[0]) - T)
    return G


def _jacobian(x, ops):
    n = len(x) - 1
    a, k = x[:n], x[n]
    z = ops.num(0)
    J = [[z] * (n + 1) for _ in range(n + 1)]
    for j in range(n - 1):
        w = a[j + 1] - k
        J[j][j] += 1
        J[j][j + 1] += -1 / w
        J[j][n] += 1 / w
    J[n - 1][0] += 1
    J[n - 1][n - 1] += -ops.exp(a[n - 1])
    J[n - 1][n] += -1
    for j in range(n):
        J[n][j] = ops.num(1)
    return J


def _rotate_leftmost_last(x):
    n = len(x) - 1
    a = x[:n]
    i = min(range(n), key=lambda j: a[j].real)
    a = a[i + 1:] + a[:i + 1]
    return a + [x[n]]


def _newton(x, T, ops, tol):
    x = _rotate_leftmost_last(list(x))
    for it in range(1, MAX_NEWTON + 1):
        try:
            G = _equations(x, T, ops)
            dx = _solve(_jacobian(x, ops), [-g for g in G])
        except (OverflowError, ZeroDivisionError, ValueError) as e:
            if isinstance(e, OverflowError) and not ops.mp:
                raise Overflow("double overflow in continuation") from None
            return None
        if max(float(abs(d) / (1 + abs(v))) for d, v in zip(dx, x)) > 1e3:
            return None
        x = [xi + di for xi, di in zip(x, dx)]
        if not all(ops.finite(v) for v in x):
            if not ops.mp:
                raise Overflow("double overflow in continuation")
            return None
        if all(abs(d) <= tol * (1 + abs(v)) for d, v in zip(dx, x)):
            return _rotate_leftmost_last(x)
    return None


def _distance(x, y):
    """Relative distance between two states, up to relabelling of the cycle."""
    n = len(x) - 1
    dk = abs(x[n] - y[n]) / (1 + abs(y[n]))
    best = None
    for r in range(n):
        d = max(abs(x[(j + r) % n] - y[j]) / (1 + abs(y[j])) for j in range(n))
        best = d if best is None else min(best, d)
    return float(max(dk, best))


def _sweep(x, T, ops):
    """One pass of the pullback map; an excellent predictor deep inside a component."""
    n = len(x) - 1
    a, k = list(x[:n]), x[n]
    a[n - 1] = T - (sum(a[:n - 1], ops.num(0)))
    for j in range(n - 2, -1, -1):
        w = ops.log(a[j + 1] - k)
        a[j] = w + ops.i * ops.two_pi * _nearest_turn(a[j] - w, ops)
    k = a[0] - ops.exp(a[n - 1])
    return a + [k]


def _nearest_turn(v, ops):
    if ops.mp:
        return int(mpmath.nint(v.imag / ops.two_pi))
    return round(v.imag / TWO_PI)


class Tracker:
    """State of a continuation inside one hyperbolic component."""

    def __init__(self, cycle, kappa, offset, t, h, mp=False):
        self.ops = _Ops(mp)
        self.x = [self.ops.num(v) for v in list(cycle) + [kappa]]
        self.offset = offset
        self.t, self.h = t, h
        self._prev = None

    @classmethod
    def from_record(cls, rec: ComponentRecord):
        mp = any(_is_mp(v) or not math.isfinite(abs(_c(v))) for v in rec.orbit)
        mp = mp or any(abs(_c(v)) > 1e300 for v in rec.orbit)
        cycle = list(rec.orbit)
        if mp:
            with mpmath.workdps(MP_DPS):
                lm = mpmath.fsum([mpmath.mpc(v) for v in cycle])
                phi = lm - rec.offset
                tr = cls(cycle, rec.sample, rec.offset, phi.real, phi.imag / (2 * mpmath.pi), mp=True)
        else:
            phi = sum(complex(v) for v in cycle) - rec.offset
            tr = cls(cycle, rec.sample, rec.offset, phi.real, phi.imag / TWO_PI)
        tr.polish()
        return tr

    # -- basic properties
    @property
    def n(self):
        return len(self.x) - 1

    @property
    def kappa(self) -> complex:
        return _c(self.x[-1])

    @property
    def cycle(self):
        return self.x[:-1]

    def T(self, t, h):
        return self.ops.num(t) + self.ops.i * self.ops.two_pi * self.ops.num(h) + self.ops.num(self.offset)

    def _tol(self):
        return mpmath.mpf(10) ** (-MP_DPS + 8) if self.ops.mp else 1e-13

    def promote(self):
        if not self.ops.mp:
            self.ops = _Ops(True)
            self.x = [self.ops.num(v) for v in self.x]
            self._prev = None

    def polish(self):
        with mpmath.workdps(MP_DPS):
            y = _newton(self.x, self.T(self.t, self.h), self.ops, self._tol())
        if y is None:
            raise ContinuationBreakdown("cannot polish the starting cycle", kappa=self.kappa)
        self.x = y

    def multiplier(self) -> complex:
        if self.ops.mp:
            with mpmath.workdps(MP_DPS):
                return _c(mpmath.exp(mpmath.fsum(self.cycle)))
        try:
            mu = 1 + 0j
            for a in self.cycle:
                mu *= cmath.exp(a)
            return mu
        except OverflowError:
            return complex(math.inf, 0)

    # -- continuation
    def _try(self, t, h, dp):
        T = self.T(t, h)
        tol = self._tol()
        cands = []
        if self._prev is not None and self._prev[1] > 0:
            xp, ds = self._prev
            r = dp / ds
            cands.append([c + (c - p) * r for c, p in zip(self.x, xp)])
        cands.append(self.x)
        try:
            cands.append(_sweep(self.x, T, self.ops))
        except (OverflowError, ValueError, ZeroDivisionError):
            pass
        for x0 in cands:
            y = _newton(x0, T, self.ops, tol)
            if y is not None and _distance(x0, y) <= ACCEPT:
                return y
        return None

    def _segment(self, path, min_dp=1e-9):
        p, dp = 0.0, 0.125
        self._prev = None
        while p < 1:
            q = min(1.0, p + dp)
            t, h = path(q)
            try:
                with mpmath.workdps(MP_DPS):
                    y = self._try(t, h, q - p)
            except Overflow:
                self.promote()
                continue
            if y is None:
                dp /= 2
                if dp < min_dp:
                    raise ContinuationBreakdown("continuation step collapsed", t=float(t), h=float(h),
                                                kappa=self.kappa)
                continue
            self._prev = (self.x, q - p)
            self.x, p = y, q
            self.t, self.h = t, h
            dp = min(2 * dp, 0.5)

    def move_to(self, t1, h1):
        h0, t0 = self.h, self.t
        if h1 != h0:
            self._segment(lambda p: (t0, h0 + p * (h1 - h0)))
            self.h = h1
        if t1 != self.t:
            self._move_t(self.t, t1, h1)
        self.t, self.h = t1, h1

    def _move_t(self, t0, t1, h):
        if max(abs(t0), abs(t1)) > 1e300:
            self.promote()
        m = mpmath if self.ops.mp else math
        if not (t0 < 0 and t1 < 0) or max(abs(t0), abs(t1)) <= 4 * min(abs(t0), abs(t1)):
            self._segment(lambda p: (t0 + p * (t1 - t0), h))
            return
        u0, u1 = m.log(-t0), m.log(-t1)
        lo, hi = min(u0, u1), max(u0, u1)
        if hi > 4 and hi > 4 * max(lo, 1):
            # u = log(-t) spans decades: geometric in u, split at u = 1
            if lo < 1:
                mid = -m.exp(1)
                self._move_t(t0, mid, h)
                self._move_t(mid, t1, h)
                return
            l0, l1 = m.log(u0), m.log(u1)
            self._segment(lambda p: (-m.exp(m.exp(l0 + p * (l1 - l0))), h))
            return
        self._segment(lambda p: (-m.exp(u0 + p * (u1 - u0)), h))


# -- public operations ----------------------------------------------------------------

def trace_internal_ray(record: ComponentRecord, h: float, t_range=(-5.0, -0.1), steps: int = 49) -> InternalRayTrace:
    t_lo, t_hi = t_range
    if not (t_lo < t_hi < 0 or (t_lo < t_hi and t_hi <= 0)):
        raise ValidationError("t_range must be an increasing interval in (-inf, 0)")
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    tr = Tracker.from_record(record)
    tr.move_to(tr.t, h)
    tr.move_to(t_lo, h)
    out = InternalRayTrace(h)
    for i in range(steps + 1):
        t = t_lo + (t_hi - t_lo) * i / steps
        tr.move_to(t, h)
        out.samples.append((t, tr.kappa, _c(tr.cycle[0]), tr.multiplier()))
    return out


def _neville(xs, ys, x=0.0):
    p = list(ys)
    m = len(xs)
    for k in range(1, m):
        for i in range(m - k):
            p[i] = ((x - xs[i + k]) * p[i] + (xs[i] - x) * p[i + 1]) / (xs[i] - xs[i + k])
    return p[0]


@dataclass
class Landing:
    kappa: complex
    error_estimate: float
    multiplier: complex
    period: int  # exact period of the indifferent cycle found at the landing point


def land_internal_ray_full(record: ComponentRecord, h, tol: float = 1e-6) -> Landing:
    tr = Tracker.from_record(record)
    tr.move_to(tr.t, float(h))
    tr.move_to(-1.0, float(h))
    n = record.period
    if float(h) != round(float(h)):
        tr.move_to(0.0, float(h))
        kappa, est = tr.kappa, 0.0
        seed = _c(tr.cycle[0])
    else:
        ts, ks = [], []
        for k in range(1, 15):
            t = -2.0 ** -k
            tr.move_to(t, float(h))
            ts.append(t)
            ks.append(tr.kappa)
        seed = _c(tr.cycle[0])
        ext = [_neville(ts[-m:], ks[-m:]) for m in (4, 5, 6)]
        kappa = ext[-1]
        est = max(abs(ext[-1] - ext[-2]), abs(ext[-2] - ext[-3]))
        if est > tol:
            raise NoConvergence(f"landing extrapolation unstable ({est:.2g})", kappa=kappa, estimate=est)
    mu, per = _indifferent_cycle(kappa, n, seed)
    return Landing(kappa, est, mu, per)


def _indifferent_cycle(kappa, n, seed):
    try:
        po = find_periodic_orbit(kappa, n, seed, max_iter=200, tol=1e-6)
        return po.multiplier, n
    except WrongExactPeriod as e:
        po = find_periodic_orbit(kappa, e.divisor, seed, max_iter=200, tol=1e-6)
        return po.multiplier ** (n // e.divisor), e.divisor
    except NoConvergence:
        return complex("nan"), 0


def land_internal_ray(record: ComponentRecord, h, tol: float = 1e-6) -> complex:
    """Landing point of the internal ray at height h (t -> 0)."""
    return land_internal_ray_full(record, h, tol).kappa


# -- children ------------------------------------------------------------------------

def _child_cycle(kappa, period, max_iter=200000):
    """Attracting cycle of exactly the given period, found from the singular orbit."""
    z = complex(kappa)
    hist = []
    for i in range(max_iter):
        z = E(kappa, z)
        if not math.isfinite(abs(z)):
            return None
        hist.append(z)
        if len(hist) > period and i % (4 * period) == 0:
            if abs(hist[-1] - hist[-1 - period]) < 1e-6 * max(1.0, abs(z)):
                break
            if len(hist) > 4 * period:
                hist = hist[-2 * period:]
    try:
        po = find_periodic_orbit(kappa, period, hist[-1])
    except (NoConvergence, WrongExactPeriod):
        return None
    if abs(po.multiplier) >= 1:
        return None
    return po


def _descent_schedule(t_abs, max_log_u):
    u = max(1.0, math.log(max(1.0, float(t_abs))))
    while u < 1000:
        u *= 2
        yield u
    v = math.log(u)
    while v < max_log_u:
        v = min(2 * v, max_log_u)
        yield mpmath.exp(v)


@dataclass
class ChildResult:
    address: object
    record: ComponentRecord
    root: complex


def child_component(record: ComponentRecord, h, delta0: float = 1e-3, max_log_u: float = 1e4) -> ChildResult:
    h = Fraction(h)
    if h.denominator < 2:
        raise ValidationError("child heights must be non-integer rationals")
    q = h.denominator
    n = record.period
    parent = Tracker.from_record(record)
    parent.move_to(parent.t, float(h))
    parent.move_to(-1.0, float(h))
    parent.move_to(0.0, float(h))
    root = parent.kappa
    delta = delta0
    po = None
    for _ in range(10):
        out = Tracker(parent.cycle, parent.x[-1], parent.offset, 0.0, float(h), mp=parent.ops.mp)
        out.move_to(delta, float(h))
        po = _child_cycle(out.kappa, q * n)
        if po is not None:
            break
        delta /= 2
    if po is None:
        raise PerturbationFailed("no attracting child cycle next to the landing point", root=root)
    k1 = out.kappa
    lm = sum(po.points)
    offset = complex(0, TWO_PI * round(lm.imag / TWO_PI))
    phi = lm - offset
    child = Tracker(po.points, k1, offset, phi.real, phi.imag / TWO_PI)
    child.polish()
    child.move_to(phi.real, 0.0)
    # flow down the central ray until the address can be read; the waypoints
    # double u = log(-t), then double log u once u is large
    addr = None
    for u in _descent_schedule(-child.t, max_log_u):
        child.move_to(-mpmath.exp(u) if u > 700 else -math.exp(u), 0.0)
        try:
            # the cycle point after the leftmost one shadows the singular value
            addr = read_component_address(child.x[-1], q * n, orbit=[child.x[-1]] + list(child.cycle[1:]))
            break
        except NotReadable:
            continue
    if addr is None:
        raise PerturbationFailed("child never reached the read-back regime", root=root)
    lm_c = mpmath.fsum(child.cycle) if child.ops.mp else sum(child.cycle)
    rec = ComponentRecord(addr, q * n, child.kappa, list(child.cycle), _c(lm_c), offset,
                          characteristic_addresses(addr), "continuation")
    if addr.length != q * n:
        raise WakeViolation("child address has the wrong length", address=format_address(addr))
    if record.wake is not None and not wake_contains(record.wake, addr):
        raise WakeViolation(f"{format_address(addr)} outside the parent wake", address=format_address(addr))
    return ChildResult(addr, rec, root)


def child_address_numeric(record: ComponentRecord, h):
    return child_component(record, h).address
