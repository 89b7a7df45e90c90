"""Parameter-plane numerics: prescribed singular orbits, component location,
address read-back and parameter rays."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath

from .addresses import (
    TOP, Infinite, Intermediate, WakeInterval, characteristic_addresses, format_address,
)
from .dynamics import (
    EXP_MAX, escape_certificate, find_periodic_orbit, lagged_escape_certificate,
    trace_dynamic_ray,
)
from .errors import (
    AddressMismatch, CertificateFailure, HomotopyStall, NoConvergence, NotReadable, Overflow,
    SolverDivergence, ValidationError,
)
from .potential import F_iter, F_iter_mp

TWO_PI = 2 * math.pi
MP_DPS = 40


def _is_mp(x) -> bool:
    return isinstance(x, (mpmath.mpc, mpmath.mpf))


def _c(x) -> complex:
    """Complex double from a (possibly huge) mpmath value; inf if out of range."""
    if not _is_mp(x):
        return complex(x)
    re, im = mpmath.re(x), mpmath.im(x)

    def f(v):
        return float(v) if abs(v) < 1e308 or v == 0 else math.copysign(math.inf, float(mpmath.sign(v)))
    return complex(f(re), f(im))


# -- derivative of kappa -> E^{n-1}(kappa) ---------------------------------------

def param_derivative(kappa: complex, n: int) -> complex:
    """f_n'(kappa) for f_n(kappa) = E^{n-1}(kappa), by the chain-rule recurrence."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    kappa = complex(kappa)
    z, d = kappa, 1 + 0j
    for _ in range(n - 1):
        if z.real > EXP_MAX:
            raise Overflow("exp saturates in the derivative recurrence", n=n)
        e = cmath.exp(z)
        d = e * d + 1
        z = e + kappa
        if not math.isfinite(abs(d)):
            raise Overflow("derivative overflow", n=n)
    return d


def log_derivative_along_orbit(kappa, orbit, tail_log=None):
    """log|f_n'(kappa)| from a known singular orbit z_1..z_m.

    exp(z_k) is taken as z_{k+1} - kappa, so nothing is exponentiated.  With
    ``tail_log = Y`` one more step with exp(z_m) = e^Y (Y real) is taken in
    the log domain, which is how the deepest step is handled when z_{m+1}
    is too large even for mpmath.
    """
    with mpmath.workdps(MP_DPS):
        d = mpmath.mpc(1)
        for k in range(len(orbit) - 1):
            d = (orbit[k + 1] - kappa) * d + 1
        ld = mpmath.log(abs(d))
        if tail_log is not None:
            # |e^Y d + 1| = e^Y |d| (1 + O(e^-Y)) and e^-Y is far below precision here
            ld = tail_log + ld
        return ld


# -- exponential kappa-boundedness ---------------------------------------------

@dataclass
class KBoundedCertificate:
    kappa: complex
    n: int
    margins: list  # F^{k-1}(re kappa - 2) - |im z_k|, as floats (inf when huge)


def _F_bound(k, x):
    """F^k(x) as a float or mpf; ("log", y) with F^k(x) = e^y - 1 when even mpf cannot hold it."""
    v = F_iter(k, x)
    if not v.saturated:
        return v.value
    y = F_iter_mp(k - 1, x)
    if y > 1e6:
        return ("log", y)
    return mpmath.expm1(y)


def _bound_float(b) -> float:
    return math.inf if isinstance(b, tuple) else min(float(b), math.inf)


def _below(im, b) -> bool:
    if isinstance(b, tuple):
        # log(e^y - 1) > y - 1 for y >= 1
        return im == 0 or mpmath.log(im) < b[1] - 1
    return im < b


def kbounded_certificate(kappa, n: int, orbit=None) -> Optional[KBoundedCertificate]:
    """Check exponential kappa-boundedness for n steps on the singular orbit.

    ``orbit`` (z_1..z_n) may be supplied when it is known more accurately than
    forward iteration can provide; otherwise it is computed.
    """
    if orbit is None:
        orbit = forward_orbit(kappa, n)
    if len(orbit) < n:
        raise ValidationError("orbit too short")
    rk = float(mpmath.re(orbit[0])) if _is_mp(orbit[0]) else complex(orbit[0]).real
    if rk < 4:
        return None
    margins = []
    for k in range(1, n + 1):
        z = orbit[k - 1]
        b = _F_bound(k - 1, rk - 2)
        im = abs(mpmath.im(z)) if _is_mp(z) else abs(complex(z).imag)
        if not _below(im, b):
            return None
        if isinstance(b, tuple):
            margins.append(math.inf)
        else:
            margins.append(float(b - im) if not _is_mp(b - im) or abs(b - im) < 1e308 else math.inf)
        if k <= n - 1:
            re = mpmath.re(z) if _is_mp(z) else complex(z).real
            if not re > 0:
                return None
    return KBoundedCertificate(_c(orbit[0]), n, margins)


# -- singular orbits at controlled precision ---------------------------------

def _needed_digits(orbit) -> int:
    tot = 0.0
    for z in orbit[:-1]:
        a = abs(z)
        tot += float(mpmath.log10(a + 1)) if _is_mp(a) else math.log10(a + 1)
    return int(tot) + 30


def forward_orbit(kappa, n: int, max_digits: int = 20000):
    """Singular orbit z_1..z_n (z_1 = kappa), at a precision where the last
    point is still accurate to about 30 digits in absolute terms of its
    position within the strips.  Uses doubles when they suffice."""
    kappa = complex(kappa)
    pts = [kappa]
    z = kappa
    ok = True
    for _ in range(n - 1):
        if z.real > EXP_MAX:
            ok = False
            break
        z = cmath.exp(z) + kappa
        pts.append(z)
    if ok and _needed_digits(pts) <= 15:
        return pts
    dps = MP_DPS
    for _ in range(6):
        mp_pts = _forward_mp(kappa, n, dps, max_digits)
        need = _needed_digits(mp_pts)
        if need <= dps:
            return mp_pts
        if need > max_digits:
            raise NotReadable(f"orbit needs {need} digits", digits=need)
        dps = need + 10
    return mp_pts


def _forward_mp(kappa, n, dps, max_digits):
    with mpmath.workdps(dps):
        k = mpmath.mpc(kappa.real, kappa.imag)
        z = k
        pts = [z]
        for _ in range(n - 1):
            if abs(mpmath.re(z)) > mpmath.mpf(10) ** min(max_digits, 10**6):
                raise NotReadable("singular orbit beyond representable size")
            z = mpmath.exp(z) + k
            pts.append(z)
    return pts


def pullback_parameter(entries, target, mp: bool = False, tol: float = 1e-15, max_iter: int = 200):
    """Find kappa with E^{m-1}(kappa) = target along the strips s_1..s_{m-1}.

    ``entries`` holds s_1..s_{m-1}.  Iterates the pullback
    kappa <- phi_kappa(target), which contracts once the orbit is far right.
    Returns (kappa, [z_1, ..., z_m]).
    """
    m = len(entries) + 1
    if m == 1:
        return target, [target]
    if mp:
        log, ii = mpmath.log, mpmath.mpc(0, 1)
        twopi = 2 * mpmath.pi
        kappa = mpmath.mpc(0)
    else:
        log, ii, twopi = cmath.log, 1j, TWO_PI
        kappa = 0j
    chain = None
    for _ in range(max_iter):
        z = target
        chain = [z]
        for k in range(m - 1, 0, -1):
            d = z - kappa
            if d == 0:
                raise HomotopyStall("pullback hits the singular value")
            z = log(d) + ii * twopi * entries[k - 1]
            chain.append(z)
        chain.reverse()
        new = chain[0]
        step = abs(new - kappa)
        kappa = new
        if step <= tol * max(1, abs(new)):
            break
    else:
        raise HomotopyStall("pullback iteration did not settle", last=_c(kappa))
    chain[0] = kappa
    return kappa, chain


# -- hyperbolic components ------------------------------------------------------

@dataclass
class ComponentRecord:
    address: object  # Intermediate or TOP
    period: int
    sample: complex
    orbit: list  # attracting cycle, a_1 near kappa (mpmath entries when huge)
    log_multiplier: complex  # Sigma a_j, principal branch not implied
    offset: complex  # Phi_W = Sigma a_j - offset
    wake: Optional[WakeInterval]
    verified: str
    traces: list = field(default_factory=list)
    exact_sample: object = None  # mpc when the double sample loses information

    @property
    def multiplier(self) -> complex:
        lm = self.log_multiplier
        if lm.real < -745:
            return 0j
        return cmath.exp(lm)

    @property
    def phi(self) -> complex:
        return self.log_multiplier - self.offset

    def to_json(self, boundary: Optional[str] = None) -> dict:
        mu = self.multiplier
        out = {
            "address": format_address(self.address),
            "period": self.period,
            "sample": [self.sample.real, self.sample.imag],
            "multiplier": [mu.real, mu.imag],
            "log_multiplier": [self.log_multiplier.real, self.log_multiplier.imag],
            "wake": None if self.wake is None else {
                "minus": format_address(self.wake.s_minus), "plus": format_address(self.wake.s_plus)},
            "verified": self.verified,
        }
        if boundary is not None:
            out["boundary"] = boundary
        return out


def _offset_for(log_mu: complex) -> complex:
    return complex(0, TWO_PI * round(log_mu.imag / TWO_PI))


def period_one_record(t: float = -3.0) -> ComponentRecord:
    """The period-1 component; Psi(z) = z - e^z is its preferred parametrization."""
    kappa = t - math.exp(t)
    return ComponentRecord(TOP, 1, complex(kappa), [complex(t)], complex(t), 0j, None, "closed form")


def _prescribed_chain(head, tail, rho, n):
    """Pullback chain with z_{n-1} = F^{n-2}(rho) + 2 pi i tail."""
    v = F_iter(n - 2, rho)
    mp = v.saturated
    if mp:
        with mpmath.workdps(MP_DPS):
            X = F_iter_mp(n - 2, rho)
            target = mpmath.mpc(X, 2 * mpmath.pi * mpmath.mpf(tail.numerator) / tail.denominator)
            kappa, chain = pullback_parameter(head, target, mp=True, tol=mpmath.mpf(10) ** (-MP_DPS + 5))
        return kappa, chain, X
    X = v.value
    kappa, chain = pullback_parameter(head, complex(X, TWO_PI * float(tail)))
    return kappa, chain, X


def find_component_parameter(s, R: float = 10.0) -> ComponentRecord:
    """A parameter with an attracting cycle in the component of address s.

    The deepest orbit point z_{n-1} is placed on the line im = 2 pi tail far to
    the right, so that z_n = kappa - e^X lies far left; the head is pulled back
    and the real part of kappa is matched to R by a secant search.
    """
    if s is TOP:
        return period_one_record()
    if not isinstance(s, Intermediate):
        raise ValidationError("component addresses are intermediate or inf")
    n = len(s.head) + 2
    if R < 4:
        raise ValidationError("R must be >= 4 for the read-back regime")
    tail = s.tail
    if n == 2:
        kappa = complex(R, TWO_PI * float(tail))
        chain, X = [kappa], R
    else:
        rho0, rho1 = R, R + 0.25
        k0, chain, X = _prescribed_chain(s.head, tail, rho0, n)
        f0 = float(mpmath.re(k0)) - R if _is_mp(k0) else k0.real - R
        kappa = k0
        for _ in range(60):
            if abs(f0) < 1e-12 * max(1, R):
                break
            k1, chain, X = _prescribed_chain(s.head, tail, rho1, n)
            f1 = (float(mpmath.re(k1)) if _is_mp(k1) else k1.real) - R
            kappa = k1
            if abs(f1) < 1e-12 * max(1, R) or f1 == f0:
                f0 = f1
                break
            rho0, rho1, f0 = rho1, rho1 - f1 * (rho1 - rho0) / (f1 - f0), f1
        else:
            raise HomotopyStall("could not match re kappa", R=R)
    # z_n = kappa + e^{z_{n-1}} = kappa - e^X, since im z_{n-1} is an odd multiple of pi
    if _is_mp(X) and X > 1e6:
        # e^X is beyond even mpmath's exponent arithmetic; only its sign matters
        zn = mpmath.mpc(-mpmath.inf, mpmath.im(kappa))
    elif _is_mp(X) or X > EXP_MAX:
        with mpmath.workdps(MP_DPS):
            zn = mpmath.mpc(kappa) - mpmath.exp(X)
    else:
        zn = complex(kappa) - math.exp(X)
    orbit = list(chain) + [zn]
    kc = _c(kappa)
    with mpmath.workdps(MP_DPS):
        lm = mpmath.fsum(orbit) if any(_is_mp(z) for z in orbit) else sum(orbit)
    log_mu = _c(lm) if _is_mp(lm) else complex(lm)
    if not math.isfinite(log_mu.real):
        log_mu = complex(-math.inf, 0)
    verified = "lemma"
    cycle = orbit
    if all(math.isfinite(abs(_c(z))) for z in orbit) and max(_c(z).real for z in orbit) < EXP_MAX:
        try:
            po = find_periodic_orbit(kc, n, _c(orbit[0]))
            if abs(po.multiplier) < 1:
                cycle = po.points
                verified = "newton"
        except Exception:
            pass
    cert = kbounded_certificate(kappa, n - 1, orbit=orbit)
    if cert is None or not (mpmath.re(zn) < 0 if _is_mp(zn) else zn.real < 0):
        raise ValidationError("R is too small for this address (not exponentially kappa-bounded)",
                              kappa=kc, R=R)
    back = read_component_address(kc, n, orbit=orbit)
    if back != s:
        raise AddressMismatch(f"read back {format_address(back)}", expected=format_address(s))
    mu_im = log_mu.imag if math.isfinite(log_mu.imag) else 0.0
    offset = _offset_for(complex(0, mu_im))
    return ComponentRecord(s, n, kc, cycle, log_mu, offset, characteristic_addresses(s), verified,
                           exact_sample=kappa if _is_mp(kappa) else None)


def read_component_address(kappa, n: int, orbit=None) -> Intermediate:
    """Intermediate address of the component containing kappa.

    Requires exponential kappa-boundedness for n-1 steps and re z_n < 0; the
    head comes from the strips of z_1..z_{n-2} and the tail from the half strip
    (2 pi j, 2 pi (j+1)) of z_{n-1}.
    """
    if n < 2:
        raise NotReadable("period must be >= 2 to read an address")
    if orbit is None:
        orbit = forward_orbit(kappa, n)
    if kbounded_certificate(kappa, n - 1, orbit=orbit) is None:
        raise NotReadable("parameter is not exponentially kappa-bounded", kappa=_c(kappa))
    zn = orbit[n - 1]
    if not ((mpmath.re(zn) if _is_mp(zn) else complex(zn).real) < 0):
        raise NotReadable("E^{n-1}(kappa) is not in the left half plane", kappa=_c(kappa))
    head = []
    for k in range(n - 2):
        y = mpmath.im(orbit[k]) if _is_mp(orbit[k]) else complex(orbit[k]).imag
        head.append(int(mpmath.ceil((y / mpmath.pi - 1) / 2)) if _is_mp(y) else math.ceil((y / math.pi - 1) / 2))
    y = orbit[n - 2]
    y = mpmath.im(y) if _is_mp(y) else complex(y).imag
    q = y / (2 * mpmath.pi) if _is_mp(y) else y / TWO_PI
    j = int(mpmath.floor(q)) if _is_mp(q) else math.floor(q)
    if q == j:
        raise NotReadable("z_{n-1} lies on a strip center line")
    return Intermediate(tuple(head), Fraction(2 * j + 1, 2))


# -- parameter rays ------------------------------------------------------------

@dataclass
class ParamRayTrace:
    address: Infinite
    samples: list = field(default_factory=list)  # (t, kappa)
    residuals: list = field(default_factory=list)
    certificates: list = field(default_factory=list)  # (tau lower bound, lag)


def _ray_fixed_point(s, t, kappa, tol=1e-13, max_iter=40):
    for _ in range(max_iter):
        g = trace_dynamic_ray(kappa, s, t, check=False) - kappa
        h = 1e-7 * max(1.0, abs(kappa))
        g2 = trace_dynamic_ray(kappa + h, s, t, check=False) - (kappa + h)
        d = (g2 - g) / h
        if d == 0:
            raise SolverDivergence("flat residual", t=t)
        step = g / d
        kappa -= step
        if abs(step) < tol * max(1.0, abs(kappa)):
            return kappa
    raise SolverDivergence(f"parameter ray solve failed at t={t}", t=t)


def parameter_ray_certificate(kappa: complex):
    """(tau, lag) with tau >= re kappa - 1 for the escaping parameter, or None."""
    x = escape_certificate(kappa, kappa)
    if x is not None and x >= kappa.real - 1:
        return (x, 0)
    return lagged_escape_certificate(kappa, kappa, kappa.real - 1)


def trace_parameter_ray(s: Infinite, t_hi: float, t_lo: float, steps: int) -> ParamRayTrace:
    if not isinstance(s, Infinite):
        raise ValidationError("parameter rays need an infinite address")
    if steps < 1 or t_lo >= t_hi:
        raise ValidationError("need t_lo < t_hi and steps >= 1")
    tr = ParamRayTrace(s)
    kappa = complex(t_hi, TWO_PI * s.entry(1))
    for i in range(steps + 1):
        t = t_hi + (t_lo - t_hi) * i / steps
        kappa = _ray_fixed_point(s, t, kappa)
        res = abs(trace_dynamic_ray(kappa, s, t, check=False) - kappa)
        cert = parameter_ray_certificate(kappa)
        if cert is None:
            raise CertificateFailure(f"no escape certificate at t={t}", t=t, kappa=kappa)
        tr.samples.append((t, kappa))
        tr.residuals.append(res)
        tr.certificates.append(cert)
    return tr


# -- randomized certificates -----------------------------------------------------

def random_kbounded_parameter(rng, n: int, re_range=(4.5, 6.5)):
    """A randomly placed parameter that is exponentially kappa-bounded for n steps.

    Returns (kappa, orbit, tail_log).  The orbit is produced by pulling a
    random deep point back along random admissible strips.  For n <= 4 the
    prescribed point is z_n itself with a random imaginary part; for larger n,
    z_{n-1} is put on a line im = 2 pi s so that z_n = e^Y + kappa is known
    exactly and the last step is carried in the log domain (tail_log = Y).
    """
    r = rng.uniform(*re_range)
    depth = n if n <= 4 else n - 1
    entries = []
    for k in range(1, depth):
        b = min(_bound_float(_F_bound(k - 1, r - 2.5)), 1e6)
        smax = int(min(3, b / TWO_PI - 1))
        entries.append(rng.randint(-max(smax, 0), max(smax, 0)))
    with mpmath.workdps(MP_DPS):
        X = F_iter_mp(depth - 1, r) * mpmath.mpf(rng.uniform(0.8, 1.2))
        if depth == n:
            lim = min(_bound_float(_F_bound(n - 1, r - 2.5)), 3.0)
            im = mpmath.mpf(rng.uniform(-lim, lim))
            target = mpmath.mpc(X, im)
            tail = None
        else:
            sm = rng.randint(-2, 2)
            target = mpmath.mpc(X, 2 * mpmath.pi * sm)
            tail = X
        kappa, chain = pullback_parameter(entries, target, mp=True, tol=mpmath.mpf(10) ** (-MP_DPS + 5))
        if tail is not None:
            # z_n = exp(z_{n-1}) + kappa with im z_{n-1} on a 2 pi multiple
            chain = chain + [mpmath.mpc(mpmath.inf, mpmath.im(kappa))]
    return kappa, chain, tail
