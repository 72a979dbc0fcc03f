"""Generators for the three counter / growth constructions.

* :func:`gen_counter_system` -- deterministic three-variable counter
  (outer ``a``, middle ``c``, inner ``b``), counter state encoded in sites
  ``(s_a, s_b)(s_c, s_a*)``.
* :func:`gen_fast_system` -- two-variable counter with competing guesses,
  state encoded as ``(s_f_p(a), s_f_p(b))(s_f_p(b)*, s_f_p(a)*)`` with
  ``p = b mod 2``.
* :func:`gen_doubling_system` -- two monomer types, every length >= 3.

Offset families ``f_i(n) = n + 2 i r^2`` keep the helper symbols of different
steps disjoint.  The symbol ``x`` gets the base right after the largest offset
used, so its complement never occurs on a monomer.
"""
from __future__ import annotations

from dataclasses import dataclass

from .core import (
    NEGATIVE,
    POSITIVE,
    Initiator,
    InsertionSystem,
    MonomerType,
    Polymer,
    Symbol,
)

REPLACEMENT_KINDS = (1, 2, 3, 4)


class PreconditionError(ValueError):
    """A construction or closure was asked for outside its preconditions."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def s(k: int) -> Symbol:
    return Symbol(k, False)


def t(k: int) -> Symbol:
    """Starred symbol s_k*."""
    return Symbol(k, True)


def _mono(quad, sign) -> MonomerType:
    return MonomerType(tuple(quad), sign, 1.0)


@dataclass(frozen=True)
class ReplacementSpec:
    """One replacement row: rewrites a single symbol of a site.

    ``a, b, c, d`` are base indices playing the roles of the row; ``u`` is the
    free helper symbol and ``x`` the blocked one (given as Symbols so callers
    can pass starred helpers).
    """

    kind: int
    a: int
    b: int
    c: int
    d: int
    u: Symbol
    x: Symbol

    def __post_init__(self):
        if self.kind not in REPLACEMENT_KINDS:
            raise ValueError(f"replacement kind must be one of {REPLACEMENT_KINDS}")


def compile_replacement(spec: ReplacementSpec) -> tuple[MonomerType, MonomerType]:
    """Monomer pair implementing one replacement step.

    kind 1: (s_a, s_b)(s_c, s_a*) -> (s_a, s_d)(s_c, s_a*)
    kind 2: (s_a, s_b)(s_c, s_a*) -> (s_a, s_b)(s_d, s_a*)
    kind 3: (s_b, s_a)(s_a*, s_c) -> (s_d, s_a)(s_a*, s_c)
    kind 4: (s_b, s_a)(s_a*, s_c) -> (s_b, s_a)(s_a*, s_d)
    """
    a, b, c, d = spec.a, spec.b, spec.c, spec.d
    u, x = spec.u, spec.x
    ubar = Symbol(u.base, not u.starred)
    if spec.kind == 1:
        return _mono((t(b), x, u, t(c)), POSITIVE), _mono((x, ubar, s(a), s(d)), NEGATIVE)
    if spec.kind == 2:
        return _mono((t(b), u, x, t(c)), POSITIVE), _mono((s(d), t(a), ubar, x), NEGATIVE)
    if spec.kind == 3:
        return _mono((x, t(b), t(c), u), NEGATIVE), _mono((ubar, x, s(d), s(a)), POSITIVE)
    return _mono((u, t(b), t(c), x), NEGATIVE), _mono((t(a), s(d), x, ubar), POSITIVE)


@dataclass(frozen=True)
class CounterParams:
    r: int
    top_family: int

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be a positive integer")

    def f(self, i: int, n: int) -> int:
        return n + 2 * i * self.r * self.r

    @property
    def x(self) -> int:
        # one past the largest f_i value any family can produce
        return self.f(self.top_family, self.r) + 1

    @property
    def symbol_count(self) -> int:
        return self.x + 1


def _finish(monomers, initiator, symbol_count, concentrations=None) -> InsertionSystem:
    unique: list[MonomerType] = []
    seen = set()
    for m in monomers:
        key = (m.quad, m.sign)
        if key not in seen:
            seen.add(key)
            unique.append(m)
    if concentrations is None:
        c = 1.0 / len(unique)
        unique = [MonomerType(m.quad, m.sign, c) for m in unique]
    sys = InsertionSystem(symbol_count, tuple(unique), initiator)
    if concentrations is not None:
        sys = sys.with_concentrations(concentrations(sys))
    return sys


def counter_monomers(r: int) -> dict[str, list[MonomerType]]:
    """Monomer families of the deterministic counter, keyed ``"inner.3"`` etc."""
    P = CounterParams(r, top_family=12)
    f = P.f
    X = s(P.x)
    fam: dict[str, list[MonomerType]] = {}

    def add(name, quad, sign):
        fam.setdefault(name, []).append(_mono(quad, sign))

    full = range(r + 1)
    for b in range(r):
        for a in full:
            for c in full:
                add("inner.1", (t(b), s(f(8, c)), s(f(8, b + 1)), t(c)), POSITIVE)
                add("inner.2", (s(f(8, c)), t(a), t(f(8, c)), X), NEGATIVE)
                add("inner.2", (X, t(f(8, b + 1)), s(a), s(b + 1)), NEGATIVE)
                add("inner.3", (t(b), X, s(f(10, b)), t(f(8, c))), POSITIVE)
                add("inner.3", (X, t(f(10, b)), s(a), s(f(9, b))), NEGATIVE)
                add("inner.4", (t(f(9, b)), s(f(11, c)), X, t(f(8, c))), POSITIVE)
                add("inner.4", (s(c), t(a), t(f(11, c)), X), NEGATIVE)
                add("inner.5", (t(f(9, b)), X, s(f(12, b + 1)), t(c)), POSITIVE)
                add("inner.5", (X, t(f(12, b + 1)), s(a), s(b + 1)), NEGATIVE)
    for c in range(r):
        for a in full:
            add("middle.1", (t(r), s(f(2, c)), X, t(c)), POSITIVE)
            add("middle.1", (s(f(1, c)), t(a), t(f(2, c)), X), NEGATIVE)
            add("middle.2", (t(r), X, s(f(3, c)), t(f(1, c))), POSITIVE)
            add("middle.2", (X, t(f(3, c)), s(a), s(0)), NEGATIVE)
            add("middle.3", (t(0), s(f(4, c + 1)), X, t(f(1, c))), POSITIVE)
            add("middle.3", (s(c + 1), t(a), t(f(4, c + 1)), X), NEGATIVE)
    for a in range(r):
        add("outer.1", (t(r), X, s(f(6, r)), t(r)), POSITIVE)
        add("outer.1", (X, t(f(6, r)), s(a), s(f(5, a))), NEGATIVE)
        add("outer.2", (t(f(5, a)), t(f(7, r)), X, t(r)), POSITIVE)
        add("outer.2", (t(f(5, a)), t(a), s(f(7, r)), X), NEGATIVE)
        add("outer.3", (t(f(5, a)), X, s(a + 1), s(f(5, a))), POSITIVE)
        add("outer.3", (s(0), t(a + 1), s(a), X), NEGATIVE)
        add("outer.4", (t(f(5, a)), X, s(f(7, r)), t(0)), POSITIVE)
        add("outer.4", (X, t(f(7, r)), s(a + 1), s(0)), NEGATIVE)
    return fam


def gen_counter_system(r: int) -> InsertionSystem:
    """Deterministic counter over (a, b, c) in [0, r]^3 with equal concentrations."""
    P = CounterParams(r, top_family=12)
    monomers = [m for ms in counter_monomers(r).values() for m in ms]
    init = Initiator((s(0), s(0)), (s(0), t(0)))
    return _finish(monomers, init, P.symbol_count)


def counter_monomer_bound(r: int) -> int:
    return 12 * r * r + 24 * r + 3


def fast_monomers(r: int) -> dict[str, list[MonomerType]]:
    """Monomer families of the fast finite counter, keyed ``"even.1"`` etc."""
    if r < 1 or r % 2 == 0:
        raise ValueError("the fast construction needs a positive odd r")
    P = CounterParams(r, top_family=3)
    f = P.f
    X = s(P.x)
    fam: dict[str, list[MonomerType]] = {}

    def add(name, quad, sign):
        fam.setdefault(name, []).append(_mono(quad, sign))

    full = range(r + 1)
    for b in range(0, r, 2):
        for a in full:
            add("even.1", (t(f(1, b + 1)), t(f(0, a)), s(f(0, a)), X), NEGATIVE)
            add("even.1", (t(f(0, b)), X, s(f(1, a)), s(f(1, b + 1))), POSITIVE)
            add("even.1", (t(f(1, b + 1)), t(f(1, a)), s(f(0, a)), s(f(2, b + 2))), NEGATIVE)
            if b + 2 > r:
                # the by-2 copy would leave the counter range: leave that site dead
                continue
            add("even.2", (t(f(2, b + 2)), t(f(2, a)), X, s(f(1, b + 1))), POSITIVE)
            add("even.2", (t(f(0, b + 2)), t(f(0, a)), s(f(2, a)), X), NEGATIVE)
            add("even.3", (t(f(2, b + 2)), X, s(f(3, a)), s(f(0, b + 2))), POSITIVE)
            add("even.3", (X, t(f(3, a)), s(f(0, a)), s(f(0, b + 2))), NEGATIVE)
    for b in range(1, r, 2):
        for a in full:
            add("odd.1", (t(f(0, b + 1)), t(f(1, a)), s(f(1, a)), X), NEGATIVE)
            add("odd.1", (t(f(1, b)), X, s(f(0, a)), s(f(0, b + 1))), POSITIVE)
            add("odd.1", (t(f(0, b + 1)), t(f(0, a)), s(f(1, a)), X), NEGATIVE)
    for a in range(r):
        add("outer.1", (t(f(1, r)), X, s(f(3, a + 1)), s(f(1, r))), POSITIVE)
        add("outer.1", (t(f(0, 0)), t(f(3, a + 1)), s(f(1, a)), X), NEGATIVE)
        add("outer.2", (t(f(1, r)), X, s(f(0, a + 1)), s(f(0, 0))), POSITIVE)
        add("outer.2", (t(f(0, 0)), t(f(0, a + 1)), s(f(3, a + 1)), X), NEGATIVE)
    return fam


def insertion_set_concentrations(sys: InsertionSystem) -> list[float]:
    """Equal total concentration per insertion set, split equally inside each set."""
    from .analyzer import insertion_sets

    part = insertion_sets(sys)
    share = 1.0 / len(part.sets)
    conc = [0.0] * sys.size
    for group in part.sets:
        for mid in group:
            conc[mid] = share / len(group)
    return conc


def gen_fast_system(r: int) -> InsertionSystem:
    """Finite non-deterministic counter over (a, b) in [0, r]^2, r odd."""
    if r < 1 or r % 2 == 0:
        raise ValueError("the fast construction needs a positive odd r")
    P = CounterParams(r, top_family=3)
    monomers = [m for ms in fast_monomers(r).values() for m in ms]
    init = Initiator((s(0), s(0)), (t(0), t(0)))
    return _finish(monomers, init, P.symbol_count, insertion_set_concentrations)


def gen_doubling_system() -> InsertionSystem:
    """Initiator (s1,s2)(s2*,s1*); types (s2*,s1*,s1,s2)+ and (s2*,x,x,s2)+ with x = s0."""
    x = s(0)
    monomers = (
        MonomerType((t(2), t(1), s(1), s(2)), POSITIVE, 0.5),
        MonomerType((t(2), x, x, s(2)), POSITIVE, 0.5),
    )
    return InsertionSystem(3, monomers, Initiator((s(1), s(2)), (t(2), t(1))))


def equal_concentrations(sys: InsertionSystem) -> InsertionSystem:
    c = 1.0 / sys.size
    return sys.with_concentrations([c] * sys.size)


def fast_forward(sys: InsertionSystem, max_monomers: int = 50_000_000) -> Polymer:
    """Deterministic closure: fill every live site with its unique type, left to right.

    Raises PreconditionError (witness = the site key) at a site accepting two or
    more types.
    """
    from .enumerator import fill_sites

    ids = fill_sites(sys, _unique_choice, max_monomers=max_monomers)
    return Polymer(sys, tuple(ids))


def _unique_choice(sys: InsertionSystem, key, types):
    if len(types) > 1:
        raise PreconditionError(
            f"site {key} accepts {len(types)} monomer types", witness=key)
    return types[0]
