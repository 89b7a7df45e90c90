import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from expobif.addresses import (
    INF, STAR, TOP, Boundary, Infinite, Intermediate, Itinerary, characteristic_addresses,
    compare, format_address, internal_address_chain, is_exponentially_bounded, itinerary,
    kneading, negate, parse_address, per, shift, translate, verify_characteristic,
    wake_contains, wake_contains_by_itinerary, boundedness_threshold,
)
from expobif.errors import AddressParseError, BoundaryEntry, ShiftOfTop, UnsupportedBase

HALF = Fraction(1, 2)


# -- brute-force oracles -------------------------------------------------------
# These work on explicit finite words (long enough truncations), independent of
# the cycle-detecting implementation.

def word(a, n):
    """First n entries, with inf as +infinity and entries after inf dropped."""
    out = []
    for k in range(1, n + 1):
        try:
            e = a.entry(k)
        except IndexError:
            break
        out.append(math.inf if e is INF else Fraction(e))
        if e is INF:
            break
    return out


def brute_compare(a, b, n=60):
    wa, wb = word(a, n), word(b, n)
    for x, y in zip(wa, wb):
        if x != y:
            return -1 if x < y else 1
        if x == math.inf:
            return 0
    return 0


def _cmp_words(u, v):
    for p, q in zip(u, v):
        if p != q:
            return -1 if p < q else 1
        if p == math.inf:
            return 0
    return 0


def brute_itin_symbol(x, s, n=60):
    """Locate x among the addresses j s by scanning integers j."""
    if x is TOP:
        return STAR
    wx = word(x, n + 1)
    first = x.entry(1)
    for j in range(math.floor(first) - 2, math.ceil(first) + 3):
        lo = [Fraction(j)] + word(s, n)
        hi = [Fraction(j + 1)] + word(s, n)
        if _cmp_words(wx, lo) == 0:
            return Boundary(j)
        if _cmp_words(lo, wx) < 0 < _cmp_words(hi, wx):
            return j
    raise AssertionError("no symbol found")


# -- strategies -----------------------------------------------------------------

ints = st.integers(-3, 3)
infinite = st.builds(Infinite, st.lists(ints, max_size=3).map(tuple),
                     st.lists(ints, min_size=1, max_size=4).map(tuple))
inter = st.builds(Intermediate, st.lists(ints, max_size=3).map(tuple),
                  st.integers(-4, 3).map(lambda v: Fraction(2 * v + 1, 2)))
address = st.one_of(infinite, inter, st.just(TOP))


# -- compare ----------------------------------------------------------------------

def test_compare_examples():
    half = parse_address("1/2 inf")
    assert compare(per(0, 1), half) == -1
    assert compare(half, half) == 0
    assert compare(Intermediate((0,), Fraction(3, 2)), per(1, 0)) == -1


def test_top_is_maximum():
    for a in [per(10**9), parse_address("99 1/2 inf"), Infinite((5,), (7,))]:
        assert compare(a, TOP) == -1
    assert compare(TOP, TOP) == 0


@given(address, address)
def test_compare_matches_truncated_words(a, b):
    assert compare(a, b) == brute_compare(a, b)


@given(address, address)
def test_compare_antisymmetric(a, b):
    assert compare(a, b) == -compare(b, a)
    assert (compare(a, b) == 0) == (a == b)


@given(address, address, address)
def test_compare_transitive(a, b, c):
    if compare(a, b) <= 0 and compare(b, c) <= 0:
        assert compare(a, c) <= 0


def test_canonical_forms():
    assert Infinite((1, 0), (1, 0)) == per(1, 0)
    assert Infinite((), (0, 1, 0, 1)) == per(0, 1)
    assert Infinite((3, 0), (0,)) == Infinite((3,), (0,))


# -- shift --------------------------------------------------------------------------

def test_shift_examples():
    assert shift(per(0, 1)) == per(1, 0)
    assert shift(parse_address("1/2 inf")) is TOP
    assert shift(Infinite((3,), (0,))) == per(0)
    with pytest.raises(ShiftOfTop):
        shift(TOP)


# -- exponential boundedness ------------------------------------------------------

def test_exponentially_bounded_examples():
    assert is_exponentially_bounded(per(0), 1.0)
    assert not is_exponentially_bounded(per(5), 0.1)
    # the first entry alone needs x > 10 pi
    assert not is_exponentially_bounded(per(5), 3.0)
    assert is_exponentially_bounded(per(5), 10 * math.pi + 1e-9)


def test_boundedness_threshold_brute_force():
    for a in [per(0), per(1), per(0, 1), Infinite((4,), (0, -2)), per(3, 0, 0)]:
        x = boundedness_threshold(a)
        assert is_exponentially_bounded(a, x + 1e-9)
        if x > 0:
            assert not is_exponentially_bounded(a, x - 1e-9)


# -- itineraries and kneading --------------------------------------------------------

def test_kneading_examples():
    half = parse_address("1/2 inf")
    assert kneading(half) == Itinerary((0, STAR))
    assert kneading(TOP) == Itinerary((STAR,))
    # per(0) = 0 per(0) hits the boundary at every position
    assert kneading(per(0)) == Itinerary((), (Boundary(0),))


def test_itinerary_of_characteristic_pair():
    half = parse_address("1/2 inf")
    assert itinerary(per(0, 1), half) == itinerary(per(1, 0), half) == Itinerary((), (0,))


def test_itinerary_rejects_top_base():
    with pytest.raises(UnsupportedBase):
        itinerary(per(0), TOP)


@settings(max_examples=200)
@given(address, st.one_of(infinite, inter))
def test_itinerary_matches_brute_force(r, s):
    it = itinerary(r, s)
    x = r
    for k in range(1, 9):
        if isinstance(r, Intermediate) and k > r.length:
            break
        if r is TOP and k > 1:
            break
        assert it.entry(k) == brute_itin_symbol(x, s)
        if x is TOP:
            break
        x = shift(x)


@given(inter)
def test_kneading_of_intermediate_is_finite_with_terminal_star(s):
    k = kneading(s)
    assert k.finite and len(k) == s.length and k.entry(s.length) is STAR
    assert all(isinstance(u, int) for u in k.pre[:-1])


# -- characteristic addresses ---------------------------------------------------------

def test_characteristic_half():
    w = characteristic_addresses(parse_address("1/2 inf"))
    assert (w.s_minus, w.s_plus) == (per(0, 1), per(1, 0))


def test_characteristic_translation_symmetry():
    w = characteristic_addresses(parse_address("3/2 inf"))
    assert (w.s_minus, w.s_plus) == (per(1, 2), per(2, 1))
    for s in [parse_address("0 1/2 inf"), parse_address("1 -1/2 inf"), parse_address("0 1 1/2 inf")]:
        w0, w1 = characteristic_addresses(s), characteristic_addresses(translate(s, 1))
        assert (translate(w0.s_minus, 1), translate(w0.s_plus, 1)) == (w1.s_minus, w1.s_plus)


def test_characteristic_conjugation_symmetry():
    for s in [parse_address("0 1/2 inf"), parse_address("2 -1 3/2 inf")]:
        w, wn = characteristic_addresses(s), characteristic_addresses(negate(s))
        assert (negate(w.s_plus), negate(w.s_minus)) == (wn.s_minus, wn.s_plus)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_characteristic_exhaustive(n):
    tails = [Fraction(v, 2) for v in (-3, -1, 1, 3)]
    for head in itertools.product(range(-2, 3), repeat=n - 2):
        for tail in tails:
            s = Intermediate(head, tail)
            w = characteristic_addresses(s)
            assert verify_characteristic(s, w.s_minus, w.s_plus)
            assert w.s_minus.period == w.s_plus.period == n
            lo, hi = w.s_minus, w.s_plus
            for r in (lo, hi):
                x = r
                for _ in range(n):
                    assert not (compare(lo, x) < 0 < compare(hi, x))
                    x = shift(x)


# -- wakes -----------------------------------------------------------------------------

def test_wake_examples():
    w = characteristic_addresses(parse_address("1/2 inf"))
    assert wake_contains(w, per(0, 2, 0, 3, 0))
    assert not wake_contains(w, per(0, 1))
    assert wake_contains(w, parse_address("0 5/2 inf"))


def _wakes():
    out = []
    for n in (2, 3, 4):
        for head in itertools.product(range(-1, 2), repeat=n - 2):
            for tail in (Fraction(-1, 2), Fraction(1, 2)):
                out.append(characteristic_addresses(Intermediate(head, tail)))
    random.Random(7).shuffle(out)
    return out[:20]


def _random_address(rng, w):
    # half the samples start like an endpoint so that both outcomes occur
    if rng.random() < 0.5:
        base = rng.choice([w.s_minus, w.s_plus])
        pre = base.prefix(rng.randint(1, 2 * w.n))
    else:
        pre = ()
    pre = pre + tuple(rng.randint(-3, 3) for _ in range(rng.randint(0, 2)))
    return Infinite(pre, tuple(rng.randint(-3, 3) for _ in range(rng.randint(1, 4))))


def test_wake_dual_path():
    rng = random.Random(2024)
    inside = 0
    for w in _wakes():
        for _ in range(200):
            r = _random_address(rng, w)
            a = wake_contains(w, r)
            assert a == wake_contains_by_itinerary(w, r), (w.owner, r)
            inside += a
    assert inside > 200


# -- internal address chain ---------------------------------------------------------------

def test_chain_per02030():
    s = per(0, 2, 0, 3, 0)
    chain = internal_address_chain(s, 5)
    assert chain[0] == (1, (0,))
    w = characteristic_addresses(parse_address("1/2 inf"))
    assert wake_contains(w, s)
    assert itinerary(w.s_minus, w.owner) == Itinerary((), chain[0][1])
    assert chain.stopped == "boundary"


def test_chain_single_element_for_period_one_agreement():
    # K(per(-1)) = per(-1|-2): the first entry is already a boundary
    with pytest.raises(BoundaryEntry):
        internal_address_chain(per(-1), 3)
    chain = internal_address_chain(Infinite((0,), (5,)), 1)
    assert len(chain) == 1


@given(infinite)
def test_chain_monotone(s):
    try:
        chain = internal_address_chain(s, 6)
    except Exception:
        return
    ks = [k for k, _ in chain]
    assert ks == sorted(set(ks))
    for k, w in chain:
        assert len(w) == k


# -- grammar ---------------------------------------------------------------------------

@given(address)
def test_grammar_round_trip(a):
    assert parse_address(format_address(a)) == a


def test_grammar_errors_report_position():
    with pytest.raises(AddressParseError) as e:
        parse_address("0 1 inf")
    assert e.value.position == 2
    with pytest.raises(AddressParseError):
        parse_address("per[0 x]")
    with pytest.raises(AddressParseError):
        parse_address(f"per[{2**63}]")
    with pytest.raises(AddressParseError):
        parse_address("2/2 inf")
