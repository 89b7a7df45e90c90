"""The acceptance suite: twelve numeric checks, each returning pass/fail with a detail line."""
from __future__ import annotations

import cmath
import itertools
import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from . import addresses as A
from .bounds import admissible_wake_bound, squeezing_strip_diameters, vertical_order_check
from .dynamics import find_periodic_orbit, functional_residual, trace_dynamic_ray
from .errors import ExpobifError, HypothesisFailed, WrongExactPeriod
from .internal import child_component, land_internal_ray, trace_internal_ray
from .parameter import (
    find_component_parameter, kbounded_certificate, log_derivative_along_orbit, period_one_record,
    random_kbounded_parameter, read_component_address, trace_parameter_ray,
)
from .potential import F_iter, F_iter_mp, log_F_iter_upper

TWO_PI = 2 * math.pi


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _grid(a, b, step):
    k = round((b - a) / step)
    return [round(a + i * step, 10) for i in range(k + 1)]


def c1_period_one_closed_form():
    rec = period_one_record()
    ts = _grid(-5.0, -0.1, 0.1)
    worst = 0.0
    for h in _grid(-2.0, 2.0, 0.1):
        tr = trace_internal_ray(rec, h, (ts[0], ts[-1]), len(ts) - 1)
        for t, kappa, _, _ in tr.samples:
            w = complex(t, TWO_PI * h)
            worst = max(worst, abs(kappa - (w - cmath.exp(w))))
    return worst < 1e-9, f"max |kappa - Psi(t + 2 pi i h)| = {worst:.2e} over 41 x 50 grid (tol 1e-9)"


def c2_parabolic_landing():
    rec = period_one_record()
    e1 = abs(land_internal_ray(rec, 0.5) - complex(1, math.pi))
    e0 = abs(land_internal_ray(rec, 0) - (-1))
    return max(e0, e1) < 1e-6, f"|land(1/2) - (1 + pi i)| = {e1:.1e}, |land(0) + 1| = {e0:.1e} (tol 1e-6)"


def c3_characteristic_addresses():
    w = A.characteristic_addresses(A.parse_address("1/2 inf"))
    ok = (w.s_minus, w.s_plus) == (A.per(0, 1), A.per(1, 0))
    count, bad = 0, []
    tails = [Fraction(v, 2) for v in (-3, -1, 1, 3)]
    for n in (2, 3, 4):
        for head in itertools.product(range(-2, 3), repeat=n - 2):
            for tail in tails:
                s = A.Intermediate(head, tail)
                c = A.characteristic_addresses(s)
                count += 1
                if not A.verify_characteristic(s, c.s_minus, c.s_plus):
                    bad.append(A.format_address(s))
    return ok and not bad, (f"char(1/2 inf) = ({A.format_address(w.s_minus)}, {A.format_address(w.s_plus)}); "
                            f"{count - len(bad)}/{count} pairs verified")


def c4_component_round_trip():
    s = A.parse_address("1/2 inf")
    rec = find_component_parameter(s, 10)
    kappa = complex(rec.sample)
    try:
        orb = find_periodic_orbit(kappa, 2, complex(rec.orbit[-1]) if math.isfinite(abs(complex(rec.orbit[-1]))) else kappa)
        attracting = abs(orb.multiplier) < 1
    except WrongExactPeriod:
        attracting = False
    back = read_component_address(kappa, 2)
    gap = abs(land_internal_ray(rec, 0) - land_internal_ray(period_one_record(), 0.5))
    ok = attracting and back == s and gap < 1e-6
    return ok, (f"kappa = {kappa:.6g}, period-2 attracting = {attracting}, read-back {A.format_address(back)}, "
                f"|root - Psi_1(pi i)| = {gap:.1e}")


def c5_ray_asymptotics():
    worst_ratio, worst_case, worst_res = 0.0, None, 0.0
    for s in (A.per(0), A.per(1), A.per(0, 1)):
        for kappa in (0, -2, 1 + 1j):
            for t in range(10, 31):
                z = trace_dynamic_ray(kappa, s, float(t))
                r = abs(z - t - 2j * math.pi * s.entry(1)) / math.exp(1 - t)
                if r > worst_ratio:
                    worst_ratio, worst_case = r, (A.format_address(s), kappa, t)
                worst_res = max(worst_res, functional_residual(kappa, s, float(t), z))
    ok = worst_ratio <= 1 and worst_res < 1e-9
    return ok, (f"max error / e^(1-t) = {worst_ratio:.3f} at {worst_case}; "
                f"max functional residual {worst_res:.1e}")


def c6_parameter_ray():
    tr = trace_parameter_ray(A.per(0), 25.0, 8.0, 34)
    res = max(tr.residuals)
    im = max(abs(k.imag) for _, k in tr.samples)
    certs = all(c is not None and c[0] >= k.real - 1 - 1e-12 for (_, k), c in zip(tr.samples, tr.certificates))
    return res < 1e-8 and im < 1e-9 and certs, (f"{len(tr.samples)} samples, max residual {res:.1e}, "
                                                f"max |im| {im:.1e}, all certified tau >= re kappa - 1: {certs}")


def c7_derivative_bound():
    rng = random.Random(4)
    bad = 0
    for i in range(100):
        n = 2 + i % 4
        kappa, orbit, tail = random_kbounded_parameter(rng, n)
        if kbounded_certificate(kappa, n, orbit=orbit) is None:
            bad += 1
            continue
        pts = orbit[:n - 1] if tail is not None else orbit[:n]
        if not log_derivative_along_orbit(kappa, pts, tail_log=tail) >= log_F_iter_upper(n - 1, mpmath.re(kappa) - 1):
            bad += 1
    return bad == 0, f"{bad} violations in 100 certificates (n = 2..5)"


def c8_growth_bounds():
    rng = random.Random(8)
    bad2 = 0
    for _ in range(500):
        kappa = complex(rng.uniform(2, 12), rng.uniform(-20, 20))
        z = complex(kappa.real + rng.uniform(-15, 1), rng.uniform(-30, 30))
        for k in range(1, 8):
            z = cmath.exp(z) + kappa if z.real < 700 else complex(math.inf, 0)
            b1, b2 = F_iter(k, kappa.real + 2), F_iter(k, abs(kappa) + 2)
            if b1.saturated or not math.isfinite(abs(z)):
                break
            if abs(z.real) > b1.value or (not b2.saturated and abs(z) > b2.value):
                bad2 += 1
    bad3 = 0
    for i in range(500):
        n = 2 + i % 4
        kappa, orbit, tail = random_kbounded_parameter(rng, n)
        x = mpmath.re(kappa) - 1
        for k in range(n):
            re = mpmath.re(orbit[k])
            if mpmath.isinf(re):
                ok = tail is not None and tail >= log_F_iter_upper(k, x)
            else:
                ok = abs(re) >= F_iter_mp(k, x)
            bad3 += not ok
    return bad2 == 0 and bad3 == 0, f"upper growth: {bad2} violations / 500 trials; lower growth: {bad3} violations / 500 trials"


def _wakes():
    out = []
    for n in (2, 3, 4):
        for head in itertools.product(range(-1, 2), repeat=n - 2):
            for tail in (Fraction(-1, 2), Fraction(1, 2)):
                out.append(A.characteristic_addresses(A.Intermediate(head, tail)))
    random.Random(9).shuffle(out)
    return out[:20]


def _random_address(rng, w):
    pre = ()
    if rng.random() < 0.5:
        pre = rng.choice([w.s_minus, w.s_plus]).prefix(rng.randint(1, 2 * w.n))
    pre = pre + tuple(rng.randint(-3, 3) for _ in range(rng.randint(0, 2)))
    return A.Infinite(pre, tuple(rng.randint(-3, 3) for _ in range(rng.randint(1, 4))))


def c9_wake_equivalence():
    rng = random.Random(9)
    wakes = _wakes()
    mism, inside, total = 0, 0, 0
    for i in range(200):
        r = _random_address(rng, wakes[i % len(wakes)])
        for w in wakes:
            a = A.wake_contains(w, r)
            mism += a != A.wake_contains_by_itinerary(w, r)
            inside += a
            total += 1
    return mism == 0, f"{mism} mismatches in {total} address/wake pairs ({inside} inside)"


def c10_vertical_order():
    recs = [find_component_parameter(A.parse_address(t), 20) for t in ("5/2 inf", "1/2 inf", "3/2 inf")]
    ok = vertical_order_check(recs, 20)
    ims = ", ".join(f"{A.format_address(r.address)}: {r.sample.imag:.4f}" for r in recs)
    return ok, f"im kappa at re kappa = 20: {ims}"


def _fmt(x) -> str:
    x = mpmath.mpf(x)
    if x == 0:
        return "0"
    e = mpmath.log10(abs(x))
    if abs(e) < 300:
        return mpmath.nstr(x, 3)
    return f"10^({mpmath.nstr(e, 4)})"


def c11_squeezing():
    rows = squeezing_strip_diameters(A.per(0), 3, [3, 4, 5])
    seps = [r["separation"] for r in rows]
    dec = all(a > b for a, b in zip(seps, seps[1:]))
    bounded = all(r["separation"] <= r["bound"] + mpmath.mpf("1e-6") for r in rows)
    between = all(r["between"] for r in rows)
    txt = ", ".join(f"n={r['n']}: {_fmt(r['separation'])} <= {_fmt(r['bound'])}" for r in rows)
    return dec and bounded and between, f"{txt}; decreasing {dec}; G_per(0) between flanks {between}"


def c12_wake_bound_growth():
    parent = find_component_parameter(A.parse_address("1/2 inf"), 10)
    bounds, notes = [], []
    for j in range(1, 6):
        child = child_component(parent, Fraction(2 * j + 1, 2))
        try:
            b, n, M = admissible_wake_bound(child.record.wake)
        except HypothesisFailed as e:
            notes.append(f"j={j} {A.format_address(child.address)}: hypothesis fails "
                         f"(n=2 needs M > 402.4, has {e.details['tried'][1]['M']:.1f})")
            continue
        tr = trace_internal_ray(child.record, 0.0, (-5.0, -0.1), 10)
        respected = all(abs(k) > b for _, k, _, _ in tr.samples)
        bounds.append(b)
        notes.append(f"j={j}: bound {b:.3f} respected={respected}")
        if not respected:
            return False, "; ".join(notes)
    ok = len(bounds) == 5 and all(a < b for a, b in zip(bounds, bounds[1:]))
    return ok, "; ".join(notes[:2] + (["..."] if len(notes) > 3 else []) + notes[-1:])


CRITERIA = [
    (1, "period-1 closed form", c1_period_one_closed_form),
    (2, "parabolic landing", c2_parabolic_landing),
    (3, "characteristic addresses", c3_characteristic_addresses),
    (4, "component round trip", c4_component_round_trip),
    (5, "ray asymptotics", c5_ray_asymptotics),
    (6, "parameter ray", c6_parameter_ray),
    (7, "derivative bound", c7_derivative_bound),
    (8, "growth bounds", c8_growth_bounds),
    (9, "wake equivalence", c9_wake_equivalence),
    (10, "vertical order", c10_vertical_order),
    (11, "squeezing decay", c11_squeezing),
    (12, "wake bound growth", c12_wake_bound_growth),
]


def run_criterion(number: int) -> CriterionResult:
    for k, name, fn in CRITERIA:
        if k == number:
            t0 = time.perf_counter()
            try:
                ok, detail = fn()
            except ExpobifError as e:
                ok, detail = False, f"{e.code}: {e}"
            return CriterionResult(k, name, bool(ok), detail, time.perf_counter() - t0)
    raise KeyError(number)


def run_all(numbers=None) -> list[CriterionResult]:
    return [run_criterion(k) for k, _, _ in CRITERIA if numbers is None or k in numbers]
