import cmath
import math
from fractions import Fraction

import pytest

from expobif.addresses import compare, parse_address, wake_contains
from expobif.dynamics import find_periodic_orbit
from expobif.errors import ValidationError
from expobif.internal import (
    child_address_numeric, child_component, land_internal_ray, land_internal_ray_full, trace_internal_ray,
)
from expobif.parameter import find_component_parameter, period_one_record

TWO_PI = 2 * math.pi


def psi(z):
    return z - cmath.exp(z)


@pytest.fixture(scope="module")
def p1():
    return period_one_record()


@pytest.fixture(scope="module")
def half():
    return find_component_parameter(parse_address("1/2 inf"), 10)


@pytest.mark.parametrize("h", [-2.0, -1.3, -0.5, 0.0, 0.25, 0.5, 1.0, 1.7])
def test_period_one_matches_closed_form(p1, h):
    tr = trace_internal_ray(p1, h, (-5.0, -0.1), 49)
    ts = [s[0] for s in tr.samples]
    assert all(a < b for a, b in zip(ts, ts[1:]))
    for t, kappa, a, mu in tr.samples:
        w = complex(t, TWO_PI * h)
        assert abs(kappa - psi(w)) < 1e-9
        assert abs(mu - cmath.exp(w)) < 1e-9
        assert abs(a - w) < 1e-9


def test_central_ray_value(p1):
    tr = trace_internal_ray(p1, 0.0, (-1.0, -0.5), 1)
    assert abs(tr.samples[0][1] - (-1 - math.exp(-1))) < 1e-12


def test_bad_t_range(p1):
    with pytest.raises(ValidationError):
        trace_internal_ray(p1, 0.0, (-0.1, -5.0), 10)


def test_period_two_trace_keeps_multiplier_contract(half):
    tr = trace_internal_ray(half, 0.3, (-4.0, -0.2), 19)
    for t, kappa, a, mu in tr.samples:
        assert abs(mu - cmath.exp(complex(t, TWO_PI * 0.3))) < 1e-9
        orb = find_periodic_orbit(kappa, 2, a)
        assert abs(orb.multiplier - mu) < 1e-8


# -- landing -----------------------------------------------------------------------

@pytest.mark.parametrize("h,expected", [(0.5, 1 + math.pi * 1j), (0, -1), (1, TWO_PI * 1j - 1), (-1, -TWO_PI * 1j - 1)])
def test_period_one_landing(p1, h, expected):
    assert abs(land_internal_ray(p1, h) - expected) < 1e-6


def test_landing_is_indifferent(p1, half):
    for rec, h in ((p1, 0.5), (p1, 0.25), (half, 0.5), (half, 0)):
        land = land_internal_ray_full(rec, h)
        expect = cmath.exp(TWO_PI * 1j * h)
        if land.period == rec.period:
            assert abs(land.multiplier - expect) < 1e-6
        else:
            # a cycle of lower period d, whose multiplier to the power n/d is indifferent
            assert abs(abs(land.multiplier) - 1) < 1e-6


def test_half_component_root_is_period_one_landing(p1, half):
    assert abs(land_internal_ray(half, 0) - land_internal_ray(p1, 0.5)) < 1e-6


# -- children ----------------------------------------------------------------------

@pytest.mark.parametrize("h,text", [("1/2", "1/2 inf"), ("3/2", "3/2 inf"), ("-1/2", "-1/2 inf"),
                                    ("1/3", "0 1/2 inf"), ("-1/3", "0 -1/2 inf")])
def test_children_of_period_one(p1, h, text):
    assert child_address_numeric(p1, Fraction(h)) == parse_address(text)


def test_child_addresses_increase_with_height(p1):
    hs = [Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4)]
    addrs = [child_address_numeric(p1, h) for h in hs]
    assert all(compare(a, b) < 0 for a, b in zip(addrs, addrs[1:]))


@pytest.mark.parametrize("h", ["1/2", "3/2", "-1/2"])
def test_children_of_half_component(half, h):
    res = child_component(half, Fraction(h))
    assert res.address.length == 4
    assert wake_contains(half.wake, res.address)
    assert abs(res.root - land_internal_ray(half, float(Fraction(h)))) < 1e-9
    assert abs(land_internal_ray(res.record, 0) - res.root) < 1e-6


def test_child_needs_fractional_height(p1):
    with pytest.raises(ValidationError):
        child_address_numeric(p1, 2)
