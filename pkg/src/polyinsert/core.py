"""Insertion-system model: symbols, monomers, polymers, sites and the two insertion rules.

Symbols are ``(base, starred)`` pairs.  Internally every symbol is also encoded
as the integer ``2 * base + starred`` so that complementing is ``code ^ 1`` and
a site is a plain 4-tuple of ints, which is what the enumerator and the
simulator hash on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

POSITIVE = "+"
NEGATIVE = "-"

CONCENTRATION_TOLERANCE = 1e-9


class InsertionError(ValueError):
    """Raised when a monomer cannot be inserted at the requested site."""


class Symbol(NamedTuple):
    base: int
    starred: bool = False

    @property
    def code(self) -> int:
        return 2 * self.base + int(self.starred)

    @classmethod
    def from_code(cls, code: int) -> "Symbol":
        return cls(code >> 1, bool(code & 1))

    def __str__(self) -> str:
        return f"s{self.base}*" if self.starred else f"s{self.base}"


def complement(s: Symbol) -> Symbol:
    return Symbol(s.base, not s.starred)


def sym(text: str) -> Symbol:
    """Parse ``s3`` / ``s3*`` into a Symbol."""
    text = text.strip()
    starred = text.endswith("*")
    body = text[:-1] if starred else text
    if not body.startswith("s") or not body[1:].isdigit():
        raise ValueError(f"bad symbol {text!r}")
    return Symbol(int(body[1:]), starred)


def _codes(symbols: Iterable[Symbol]) -> tuple[int, ...]:
    return tuple(s.code for s in symbols)


@dataclass(frozen=True)
class MonomerType:
    quad: tuple[Symbol, Symbol, Symbol, Symbol]
    sign: str
    concentration: float
    id: int = -1

    def __post_init__(self):
        if self.sign not in (POSITIVE, NEGATIVE):
            raise ValueError(f"sign must be '+' or '-', got {self.sign!r}")
        if len(self.quad) != 4:
            raise ValueError("a monomer has exactly four symbols")

    @property
    def codes(self) -> tuple[int, int, int, int]:
        return _codes(self.quad)  # type: ignore[return-value]

    @property
    def positive(self) -> bool:
        return self.sign == POSITIVE

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.quad)) + ")" + self.sign


class InsertionSite(NamedTuple):
    left: tuple[Symbol, Symbol]
    right: tuple[Symbol, Symbol]

    @property
    def key(self) -> tuple[int, int, int, int]:
        (a, b), (c, d) = self.left, self.right
        return (a.code, b.code, c.code, d.code)

    @classmethod
    def from_key(cls, key: Sequence[int]) -> "InsertionSite":
        a, b, c, d = (Symbol.from_code(k) for k in key)
        return cls((a, b), (c, d))

    def is_valid(self) -> bool:
        return site_key_valid(self.key)

    def __str__(self) -> str:
        (a, b), (c, d) = self.left, self.right
        return f"({a},{b})({c},{d})"


def site_key_valid(key: Sequence[int]) -> bool:
    a, b, c, d = key
    return a ^ 1 == d or b ^ 1 == c


@dataclass(frozen=True)
class Initiator:
    q: tuple[Symbol, Symbol]
    r: tuple[Symbol, Symbol]

    @property
    def site(self) -> InsertionSite:
        return InsertionSite(self.q, self.r)


@dataclass(frozen=True, eq=False)
class InsertionSystem:
    """The 4-tuple (symbols, monomer types, Q, R).

    Monomer ids are positions in ``monomers``; the constructor re-stamps them
    so callers may pass types built with the default ``id=-1``.
    """

    symbol_count: int
    monomers: tuple[MonomerType, ...]
    initiator: Initiator
    _pos_index: dict = field(init=False, repr=False, compare=False)
    _neg_index: dict = field(init=False, repr=False, compare=False)
    _site_cache: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        stamped = tuple(
            m if m.id == i else MonomerType(tuple(m.quad), m.sign, m.concentration, i)
            for i, m in enumerate(self.monomers)
        )
        object.__setattr__(self, "monomers", stamped)
        pos: dict[tuple[int, int], list[int]] = {}
        neg: dict[tuple[int, int], list[int]] = {}
        for m in stamped:
            p, q, r, s = m.codes
            if m.positive:
                pos.setdefault((p, s), []).append(m.id)
            else:
                neg.setdefault((q, r), []).append(m.id)
        object.__setattr__(self, "_pos_index", {k: tuple(v) for k, v in pos.items()})
        object.__setattr__(self, "_neg_index", {k: tuple(v) for k, v in neg.items()})
        object.__setattr__(self, "_site_cache", {})

    def __eq__(self, other):
        if not isinstance(other, InsertionSystem):
            return NotImplemented
        return (
            self.symbol_count == other.symbol_count
            and self.initiator == other.initiator
            and self.monomers == other.monomers
        )

    def __hash__(self):
        return hash((self.symbol_count, self.initiator, self.monomers))

    @property
    def size(self) -> int:
        return len(self.monomers)

    @property
    def initiator_key(self) -> tuple[int, int, int, int]:
        return self.initiator.site.key

    def types_at(self, key: tuple[int, int, int, int]) -> tuple[int, ...]:
        """Ids of the monomer types insertable at the site with this key (cached)."""
        cached = self._site_cache.get(key)
        if cached is not None:
            return cached
        a, b, c, d = key
        ids: tuple[int, ...] = ()
        if a ^ 1 == d:
            ids += self._pos_index.get((b ^ 1, c ^ 1), ())
        if b ^ 1 == c:
            ids += self._neg_index.get((a ^ 1, d ^ 1), ())
        self._site_cache[key] = ids
        return ids

    def site_rate(self, key: tuple[int, int, int, int]) -> float:
        return sum(self.monomers[i].concentration for i in self.types_at(key))

    def children(self, key, mid: int):
        """The (left, right) site keys created by inserting type ``mid`` at ``key``."""
        p, q, r, s = self.monomers[mid].codes
        a, b, c, d = key
        return (a, b, p, q), (r, s, c, d)

    def with_concentrations(self, concentrations: Sequence[float]) -> "InsertionSystem":
        if len(concentrations) != len(self.monomers):
            raise ValueError("one concentration per monomer type required")
        return InsertionSystem(
            self.symbol_count,
            tuple(MonomerType(m.quad, m.sign, float(c), m.id)
                  for m, c in zip(self.monomers, concentrations)),
            self.initiator,
        )


@dataclass(frozen=True, eq=False)
class Polymer:
    """Q m1 ... mn R, stored as the tuple of inserted monomer ids."""

    system: InsertionSystem
    ids: tuple[int, ...] = ()

    def __eq__(self, other):
        if not isinstance(other, Polymer):
            return NotImplemented
        return self.ids == other.ids and self.system.initiator == other.system.initiator

    def __hash__(self):
        return hash((self.ids, self.system.initiator))

    def __len__(self) -> int:
        return len(self.ids) + 2

    @property
    def length(self) -> int:
        return len(self.ids) + 2

    @property
    def site_count(self) -> int:
        return len(self.ids) + 1

    def site_keys(self) -> list[tuple[int, int, int, int]]:
        return site_keys(self.system, self.ids)

    def sites(self) -> list[InsertionSite]:
        return [InsertionSite.from_key(k) for k in self.site_keys()]

    def __str__(self) -> str:
        q, r = self.system.initiator.q, self.system.initiator.r
        parts = [f"({q[0]},{q[1]})"]
        parts += [str(self.system.monomers[i]).rstrip("+-") for i in self.ids]
        parts.append(f"({r[0]},{r[1]})")
        return "".join(parts)


def initial_polymer(sys: InsertionSystem) -> Polymer:
    return Polymer(sys, ())


def site_keys(sys: InsertionSystem, ids: Sequence[int]) -> list[tuple[int, int, int, int]]:
    q0, q1 = _codes(sys.initiator.q)
    r0, r1 = _codes(sys.initiator.r)
    keys = []
    left = (q0, q1)
    for i in ids:
        p, q, r, s = sys.monomers[i].codes
        keys.append((left[0], left[1], p, q))
        left = (r, s)
    keys.append((left[0], left[1], r0, r1))
    return keys


def site_key_at(sys: InsertionSystem, ids: Sequence[int], i: int) -> tuple[int, int, int, int]:
    n = len(ids)
    if not 0 <= i <= n:
        raise IndexError(f"site index {i} out of range for polymer with {n + 1} sites")
    if i == 0:
        left = _codes(sys.initiator.q)
    else:
        left = sys.monomers[ids[i - 1]].codes[2:]
    if i == n:
        right = _codes(sys.initiator.r)
    else:
        right = sys.monomers[ids[i]].codes[:2]
    return (left[0], left[1], right[0], right[1])


def site_at(p: Polymer, i: int) -> InsertionSite:
    """The site between ends ``i`` and ``i + 1`` (end 0 is Q)."""
    return InsertionSite.from_key(site_key_at(p.system, p.ids, i))


def _complementary(x: Symbol, y: Symbol) -> bool:
    return x[0] == y[0] and x[1] != y[1]


def insertable(site: InsertionSite, m: MonomerType) -> bool:
    (a, b), (c, d) = site
    p, q, r, s = m.quad
    if m.sign == POSITIVE:
        return _complementary(a, d) and _complementary(p, b) and _complementary(s, c)
    return _complementary(b, c) and _complementary(q, a) and _complementary(r, d)


def insert(p: Polymer, i: int, m: MonomerType) -> Polymer:
    site = site_at(p, i)
    if not insertable(site, m):
        raise InsertionError(f"{m} is not insertable at site {i} {site}")
    mid = m.id
    if mid < 0:
        # unstamped type: look it up by symbols and sign
        mid = next((x.id for x in p.system.monomers if x.quad == m.quad and x.sign == m.sign), -1)
    if not 0 <= mid < p.system.size or p.system.monomers[mid].quad != m.quad \
            or p.system.monomers[mid].sign != m.sign:
        raise InsertionError(f"{m} is not a monomer type of this system")
    return Polymer(p.system, p.ids[:i] + (mid,) + p.ids[i:])


def insertable_types(sys: InsertionSystem, site: InsertionSite) -> set[MonomerType]:
    return {sys.monomers[i] for i in sys.types_at(site.key)}


def string_representation(p: Polymer) -> list[Symbol]:
    out = list(p.system.initiator.q)
    for i in p.ids:
        out.extend(p.system.monomers[i].quad)
    out.extend(p.system.initiator.r)
    return out


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_system(sys: InsertionSystem) -> ValidationReport:
    report = ValidationReport()
    total = 0.0
    for m in sys.monomers:
        if not m.concentration > 0:
            report.violations.append(f"monomer {m.id} {m}: non-positive concentration {m.concentration}")
        if m.concentration > 1:
            report.violations.append(f"monomer {m.id} {m}: concentration {m.concentration} > 1")
        total += m.concentration
        for s in m.quad:
            if not 0 <= s.base < sys.symbol_count:
                report.violations.append(f"monomer {m.id} {m}: symbol {s} outside 0..{sys.symbol_count - 1}")
    if total > 1 + CONCENTRATION_TOLERANCE:
        report.violations.append(f"concentration sum {total:.12g} > 1")
    init = sys.initiator
    for s in (*init.q, *init.r):
        if not 0 <= s.base < sys.symbol_count:
            report.violations.append(f"initiator symbol {s} outside 0..{sys.symbol_count - 1}")
    if not init.site.is_valid():
        report.violations.append(
            f"initiator {init.site}: neither complement(a) = d nor complement(b) = c")
    return report
