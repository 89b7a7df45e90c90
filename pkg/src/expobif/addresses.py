"""Exact symbolic dynamics on external addresses.

Addresses come in three shapes:

* ``Infinite(pre, per)``  eventually periodic integer sequences,
* ``Intermediate(head, tail)``  finite words ``s1 ... s_{n-2} tail inf`` with
  ``tail`` a half-integer,
* ``TOP``  the length-one address ``inf``.

All values are immutable and hashable.  Comparison is the lexicographic
order in which a terminal ``inf`` beats every finite entry and ``TOP`` is
the largest element.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence, Union

from .errors import BoundaryEntry, NotFound, NotUnique, ShiftOfTop, UnsupportedBase
from .potential import F_inv, F_iter

TWO_PI = 2 * math.pi
HALF = Fraction(1, 2)


class _Inf:
    """Terminal symbol of finite addresses; larger than any number."""

    __slots__ = ()

    def __repr__(self):
        return "inf"

    def __reduce__(self):
        return (_inf_singleton, ())


INF = _Inf()


def _inf_singleton():
    return INF


Entry = Union[int, Fraction, _Inf]


def _cmp_entries(a: Entry, b: Entry) -> int:
    if a is INF:
        return 0 if b is INF else 1
    if b is INF:
        return -1
    return (a > b) - (a < b)


def canonical_periodic(pre: Sequence, per: Sequence) -> tuple[tuple, tuple]:
    """Minimal period, then minimal preperiod, of ``pre + per^inf``."""
    pre, per = tuple(pre), tuple(per)
    if not per:
        raise ValueError("period must be nonempty")
    p = len(per)
    for d in range(1, p + 1):
        if p % d == 0 and per == per[:d] * (p // d):
            per = per[:d]
            break
    while pre and pre[-1] == per[-1]:
        per = per[-1:] + per[:-1]
        pre = pre[:-1]
    return pre, per


class ExtAddress:
    """Common interface; see the three concrete classes."""

    length: float  # math.inf for Infinite

    def entry(self, k: int) -> Entry:
        raise NotImplementedError

    def entries(self) -> Iterator[Entry]:
        k = 1
        while k <= self.length:
            yield self.entry(k)
            k += 1

    def horizon(self) -> int:
        """Number of leading entries that determine the address."""
        raise NotImplementedError

    def __lt__(self, other):
        return compare(self, other) < 0

    def __le__(self, other):
        return compare(self, other) <= 0

    def __gt__(self, other):
        return compare(self, other) > 0

    def __ge__(self, other):
        return compare(self, other) >= 0

    def __str__(self):
        return format_address(self)


@dataclass(frozen=True, eq=True, order=False)
class Infinite(ExtAddress):
    pre: tuple[int, ...]
    per: tuple[int, ...]

    def __post_init__(self):
        pre, per = canonical_periodic(tuple(int(v) for v in self.pre), tuple(int(v) for v in self.per))
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "per", per)

    length = math.inf

    def entry(self, k: int) -> int:
        if k <= len(self.pre):
            return self.pre[k - 1]
        return self.per[(k - len(self.pre) - 1) % len(self.per)]

    def horizon(self) -> int:
        return len(self.pre) + len(self.per)

    @property
    def period(self) -> int:
        return len(self.per)

    @property
    def is_periodic(self) -> bool:
        return not self.pre

    def prefix(self, n: int) -> tuple[int, ...]:
        return tuple(self.entry(k) for k in range(1, n + 1))

    def __repr__(self):
        return f"Infinite({format_address(self)!r})"


@dataclass(frozen=True, eq=True, order=False)
class Intermediate(ExtAddress):
    head: tuple[int, ...]
    tail: Fraction

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(int(v) for v in self.head))
        tail = Fraction(self.tail)
        if tail.denominator != 2:
            raise ValueError(f"tail must lie in Z + 1/2, got {tail}")
        object.__setattr__(self, "tail", tail)

    @property
    def length(self) -> int:
        return len(self.head) + 2

    def entry(self, k: int) -> Entry:
        n = self.length
        if k < n - 1:
            return self.head[k - 1]
        if k == n - 1:
            return self.tail
        if k == n:
            return INF
        raise IndexError(k)

    def horizon(self) -> int:
        return self.length

    def __repr__(self):
        return f"Intermediate({format_address(self)!r})"


@dataclass(frozen=True, eq=True, order=False)
class Top(ExtAddress):
    length = 1

    def entry(self, k: int) -> Entry:
        if k == 1:
            return INF
        raise IndexError(k)

    def horizon(self) -> int:
        return 1

    def __repr__(self):
        return "TOP"


TOP = Top()


def per(*entries: int) -> Infinite:
    """``per(0, 1)`` is the periodic address 0 1 0 1 ..."""
    if len(entries) == 1 and isinstance(entries[0], (tuple, list)):
        entries = tuple(entries[0])
    return Infinite((), tuple(entries))


def intermediate(*head: int, tail) -> Intermediate:
    return Intermediate(tuple(head), Fraction(tail))


# -- order and shift ---------------------------------------------------------

def compare(a: ExtAddress, b: ExtAddress) -> int:
    """-1, 0 or 1 under the lexicographic order of the completed address space."""
    if isinstance(a, Infinite) and isinstance(b, Infinite):
        bound = max(len(a.pre), len(b.pre)) + math.lcm(len(a.per), len(b.per))
    else:
        bound = min(a.horizon() if not isinstance(a, Infinite) else math.inf,
                    b.horizon() if not isinstance(b, Infinite) else math.inf)
    k = 1
    while k <= bound:
        ea, eb = a.entry(k), b.entry(k)
        c = _cmp_entries(ea, eb)
        if c:
            return c
        if ea is INF:
            return 0
        k += 1
    return 0


def shift(a: ExtAddress) -> ExtAddress:
    if isinstance(a, Top):
        raise ShiftOfTop("the shift is undefined on inf")
    if isinstance(a, Intermediate):
        if not a.head:
            return TOP
        return Intermediate(a.head[1:], a.tail)
    if a.pre:
        return Infinite(a.pre[1:], a.per)
    return Infinite((), a.per[1:] + a.per[:1])


def shift_n(a: ExtAddress, n: int) -> ExtAddress:
    for _ in range(n):
        a = shift(a)
    return a


def prepend(j: int, a: ExtAddress) -> ExtAddress:
    """The address ``j a``."""
    if isinstance(a, Top):
        raise ValueError("cannot prepend to inf (use an Intermediate tail)")
    if isinstance(a, Intermediate):
        return Intermediate((j,) + a.head, a.tail)
    return Infinite((j,) + a.pre, a.per)


def negate(a: ExtAddress) -> ExtAddress:
    """Entrywise negation (the address of the complex-conjugate ray)."""
    if isinstance(a, Top):
        return a
    if isinstance(a, Intermediate):
        return Intermediate(tuple(-v for v in a.head), -a.tail)
    return Infinite(tuple(-v for v in a.pre), tuple(-v for v in a.per))


def translate(a: ExtAddress, j: int) -> ExtAddress:
    """Add ``j`` to every finite entry (vertical translation by 2 pi i j)."""
    if isinstance(a, Top):
        return a
    if isinstance(a, Intermediate):
        return Intermediate(tuple(v + j for v in a.head), a.tail + j)
    return Infinite(tuple(v + j for v in a.pre), tuple(v + j for v in a.per))


# -- exponential boundedness -----------------------------------------------

def is_exponentially_bounded(a: Infinite, x: float) -> bool:
    """True iff 2 pi |s_n| < F^{n-1}(x) for every n >= 1."""
    if x <= 0:
        raise ValueError("x must be positive")
    # F^{n-1}(x) increases with n and the entries repeat, so one pass suffices
    for n in range(1, a.horizon() + 1):
        bound = F_iter(n - 1, x)
        if not bound.saturated and TWO_PI * abs(a.entry(n)) >= bound.value:
            return False
    return True


def boundedness_threshold(a: Infinite) -> float:
    """Infimum of the x for which ``a`` is exponentially bounded (0 if all entries vanish)."""
    x = 0.0
    for n in range(1, a.horizon() + 1):
        v = TWO_PI * abs(a.entry(n))
        for _ in range(n - 1):
            v = F_inv(v)
        x = max(x, v)
    return x


# -- itineraries --------------------------------------------------------------

class _Star:
    __slots__ = ()

    def __repr__(self):
        return "*"

    def __reduce__(self):
        return (_star_singleton, ())


STAR = _Star()


def _star_singleton():
    return STAR


@dataclass(frozen=True)
class Boundary:
    """The itinerary symbol ``j|j-1``."""

    upper: int

    @property
    def lower(self) -> int:
        return self.upper - 1

    def __repr__(self):
        return f"{self.upper}|{self.lower}"


ItinEntry = Union[int, Boundary, _Star]


@dataclass(frozen=True)
class Itinerary:
    """Finite (``per == ()``) or eventually periodic itinerary."""

    pre: tuple
    per: tuple = ()

    def __post_init__(self):
        if self.per:
            pre, per_ = canonical_periodic(self.pre, self.per)
            object.__setattr__(self, "pre", pre)
            object.__setattr__(self, "per", per_)
        else:
            object.__setattr__(self, "pre", tuple(self.pre))

    @property
    def finite(self) -> bool:
        return not self.per

    def __len__(self):
        if self.per:
            raise TypeError("infinite itinerary has no len()")
        return len(self.pre)

    def entry(self, k: int) -> ItinEntry:
        if k <= len(self.pre):
            return self.pre[k - 1]
        if not self.per:
            raise IndexError(k)
        return self.per[(k - len(self.pre) - 1) % len(self.per)]

    def word(self, n: int) -> tuple:
        if self.finite:
            n = min(n, len(self.pre))
        return tuple(self.entry(k) for k in range(1, n + 1))

    def horizon(self) -> int:
        return len(self.pre) + len(self.per)

    def __str__(self):
        return format_itinerary(self)


def _itin_symbol(x: ExtAddress, s: ExtAddress) -> ItinEntry:
    """Where x sits relative to the partition {j s}."""
    if isinstance(x, Top):
        return STAR
    a = x.entry(1)
    if isinstance(a, Fraction) and a.denominator == 2:
        return math.floor(a)
    a = int(a)
    c = compare(shift(x), s)
    if c > 0:
        return a
    if c < 0:
        return a - 1
    return Boundary(a)


def itinerary(r: ExtAddress, s: ExtAddress) -> Itinerary:
    """The itinerary of ``r`` with respect to ``s``."""
    if isinstance(s, Top):
        raise UnsupportedBase("itineraries with respect to inf are not defined here")
    if isinstance(r, Infinite):
        symbols = []
        x: ExtAddress = r
        for _ in range(r.horizon()):
            symbols.append(_itin_symbol(x, s))
            x = shift(x)
        return Itinerary(tuple(symbols[: len(r.pre)]), tuple(symbols[len(r.pre):]))
    symbols = []
    x = r
    for _ in range(r.horizon()):
        symbols.append(_itin_symbol(x, s))
        if isinstance(x, Top):
            break
        x = shift(x)
    return Itinerary(tuple(symbols))


def kneading(s: ExtAddress) -> Itinerary:
    if isinstance(s, Top):
        return Itinerary((STAR,))
    return itinerary(s, s)


# -- characteristic addresses and wakes ---------------------------------------

@dataclass(frozen=True)
class WakeInterval:
    s_minus: Infinite
    s_plus: Infinite
    n: int
    forbidden_kneading: Itinerary
    owner: ExtAddress = field(default=TOP, compare=False)

    def __contains__(self, r: ExtAddress) -> bool:
        return wake_contains(self, r)


def verify_characteristic(s: Intermediate, lo: Infinite, hi: Infinite) -> bool:
    """The three defining properties of a characteristic pair, checked exactly."""
    n = s.length
    if lo.pre or hi.pre or lo.period != n or hi.period != n:
        return False
    if not (compare(lo, s) < 0 < compare(hi, s)):
        return False
    it_lo, it_hi = itinerary(lo, s), itinerary(hi, s)
    if it_lo != it_hi:
        return False
    if it_lo.word(n - 1) != kneading(s).word(n - 1):
        return False
    for r in (lo, hi):
        x: ExtAddress = r
        for _ in range(n):
            if compare(lo, x) < 0 < compare(hi, x):
                return False
            x = shift(x)
    return True


def _candidates(s: Intermediate) -> list[Infinite]:
    """Period-n addresses whose itinerary starts like the kneading sequence of s."""
    n = s.length
    knead = kneading(s).word(n - 1)
    choices = [(u, u + 1) for u in knead]
    finite = [int(v) for v in s.head] + [math.floor(s.tail), math.ceil(s.tail)] + list(knead)
    last = range(min(finite) - 3, max(finite) + 4)
    out = []
    for mask in range(2 ** (n - 1)):
        body = tuple(c[(mask >> i) & 1] for i, c in enumerate(choices))
        for e in last:
            r = Infinite((), body + (e,))
            if r.period != n:
                continue
            if itinerary(r, s).word(n - 1) == knead:
                out.append(r)
    return out


def characteristic_addresses(s: Intermediate) -> WakeInterval:
    """The unique characteristic pair (s-, s+) of an intermediate address.

    Found by exhaustive search over the sign patterns allowed by the
    kneading sequence, each candidate checked exactly.
    """
    if not isinstance(s, Intermediate):
        raise TypeError("characteristic addresses need an intermediate address")
    cands = _candidates(s)
    below = [r for r in cands if compare(r, s) < 0]
    above = [r for r in cands if compare(r, s) > 0]
    pairs = [(lo, hi) for lo in below for hi in above if verify_characteristic(s, lo, hi)]
    if not pairs:
        raise NotFound(f"no characteristic pair found for {format_address(s)}")
    if len(pairs) > 1:
        raise NotUnique(f"{len(pairs)} characteristic pairs for {format_address(s)}",
                        pairs=[(str(a), str(b)) for a, b in pairs])
    lo, hi = pairs[0]
    return WakeInterval(lo, hi, s.length, itinerary(lo, s), owner=s)


def wake_contains(w: WakeInterval, r: ExtAddress) -> bool:
    return compare(w.s_minus, r) < 0 < compare(w.s_plus, r)


def wake_contains_by_itinerary(w: WakeInterval, r: ExtAddress) -> bool:
    """Membership via itineraries of the characteristic addresses with respect to r."""
    if isinstance(r, Top):
        raise UnsupportedBase("r must not be inf")
    return itinerary(w.s_plus, r) == itinerary(w.s_minus, r)


class Chain(list):
    """List of (k, word) pairs; ``stopped`` records why the walk ended."""

    stopped: str = "depth"
    boundary_at: int | None = None


def internal_address_chain(s: Infinite, depth: int) -> Chain:
    """Successive (k, u_1...u_k) with K*(V) = per(u_1...u_k) and s in the wake of V.

    Starts from the period-one component (k = 1).  The walk ends after
    ``depth`` steps ("depth"), at a star ("star"), when the kneading sequence
    never leaves the current forbidden kneading sequence ("agreement"), or at
    a boundary symbol ("boundary", position in ``boundary_at``).  A boundary
    symbol before anything was emitted raises BoundaryEntry.
    """
    if isinstance(s, Top):
        raise UnsupportedBase("s must not be inf")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    u = kneading(s)
    horizon = u.horizon() + 1
    chain = Chain()
    k = 1
    while len(chain) < depth:
        if chain:
            forb = Itinerary((), chain[-1][1])
            limit = math.lcm(len(u.per) or 1, len(forb.per)) + horizon
            m = 0
            while m < limit and _entry_or_none(u, m + 1) == forb.entry(m + 1):
                m += 1
            if m >= limit:
                chain.stopped = "agreement"
                return chain
            k = m + 1
        uk = _entry_or_none(u, k)
        if uk is None or uk is STAR:
            chain.stopped = "star"
            return chain
        if isinstance(uk, Boundary):
            if not chain:
                raise BoundaryEntry(f"u_{k} = {uk!r} is not an integer", k=k)
            chain.stopped, chain.boundary_at = "boundary", k
            return chain
        chain.append((k, u.word(k)))
    return chain


def _entry_or_none(it: Itinerary, k: int):
    try:
        return it.entry(k)
    except IndexError:
        return None


# -- text grammar -------------------------------------------------------------

_INT64 = 2 ** 63


def _fmt_entry(v) -> str:
    if v is INF:
        return "inf"
    if isinstance(v, Fraction) and v.denominator == 2:
        return f"{v.numerator}/2"
    return str(int(v))


def format_address(a: ExtAddress) -> str:
    if isinstance(a, Top):
        return "inf"
    if isinstance(a, Intermediate):
        return " ".join([_fmt_entry(v) for v in a.head] + [_fmt_entry(a.tail), "inf"])
    body = "per[" + " ".join(map(str, a.per)) + "]"
    if a.pre:
        return "pre[" + " ".join(map(str, a.pre)) + "]" + body
    return body


def format_itin_entry(u: ItinEntry) -> str:
    return repr(u) if not isinstance(u, int) else str(u)


def format_word(word) -> str:
    return " ".join(format_itin_entry(u) for u in word)


def format_itinerary(it: Itinerary) -> str:
    if it.finite:
        return format_word(it.pre)
    body = "per[" + format_word(it.per) + "]"
    return ("pre[" + format_word(it.pre) + "]" + body) if it.pre else body


def _tokens(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "[]":
            yield c, i
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "[]":
            j += 1
        yield text[i:j], i
        i = j


def _parse_int(tok: str, pos: int, text: str) -> int:
    from .errors import AddressParseError

    try:
        v = int(tok)
    except ValueError:
        raise AddressParseError(f"expected an integer, got {tok!r}", pos, text) from None
    if abs(v) >= _INT64:
        raise AddressParseError("entry exceeds the 64-bit range", pos, text)
    return v


def parse_address(text: str) -> ExtAddress:
    """Parse ``inf``, ``pre[a b]per[c d]``, ``per[c d]`` or ``a b p/2 inf``."""
    from .errors import AddressParseError

    toks = list(_tokens(text))
    if not toks:
        raise AddressParseError("empty address", 0, text)
    if toks[0][0] in ("pre", "per"):
        groups: dict[str, list[int]] = {}
        i = 0
        while i < len(toks):
            kw, pos = toks[i]
            if kw not in ("pre", "per") or kw in groups:
                raise AddressParseError(f"unexpected {kw!r}", pos, text)
            if i + 1 >= len(toks) or toks[i + 1][0] != "[":
                raise AddressParseError("expected '['", toks[i + 1][1] if i + 1 < len(toks) else len(text), text)
            i += 2
            vals = []
            while i < len(toks) and toks[i][0] != "]":
                vals.append(_parse_int(toks[i][0], toks[i][1], text))
                i += 1
            if i >= len(toks):
                raise AddressParseError("missing ']'", len(text), text)
            groups[kw] = vals
            i += 1
        if "per" not in groups or not groups["per"]:
            raise AddressParseError("a nonempty per[...] group is required", len(text), text)
        if list(groups) == ["per", "pre"]:
            raise AddressParseError("pre[...] must come before per[...]", toks[0][1], text)
        return Infinite(tuple(groups.get("pre", ())), tuple(groups["per"]))
    if toks[-1][0] != "inf":
        raise AddressParseError("finite addresses must end with 'inf'", toks[-1][1], text)
    if len(toks) == 1:
        return TOP
    *head_toks, (tail_tok, tail_pos), _ = toks
    if not tail_tok.endswith("/2"):
        raise AddressParseError("penultimate entry must be a half-integer p/2", tail_pos, text)
    p = _parse_int(tail_tok[:-2], tail_pos, text)
    if p % 2 == 0:
        raise AddressParseError("half-integer numerator must be odd", tail_pos, text)
    head = tuple(_parse_int(t, pos, text) for t, pos in head_toks)
    return Intermediate(head, Fraction(p, 2))
