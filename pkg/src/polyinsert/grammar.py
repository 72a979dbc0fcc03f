"""Context-free grammars and their compilation into insertion systems.

Pipeline: text grammar -> Chomsky normal form -> integer-pair grammar ->
insertion system plus the symbol map ``g`` that reads terminal strings back off
terminal polymers.  Terminal strings are tuples of terminal tokens.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, NamedTuple, Optional, Sequence

from .core import Initiator, InsertionSystem, MonomerType, Symbol, NEGATIVE, POSITIVE

EPSILON_TOKENS = ("eps", "ε")
KAPPA = 16

Rule = tuple[str, tuple[str, ...]]


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Grammar:
    terminals: frozenset
    nonterminals: tuple[str, ...]
    rules: tuple[Rule, ...]
    start: str

    def __post_init__(self):
        nts = set(self.nonterminals)
        if self.start not in nts:
            raise GrammarError(f"start symbol {self.start!r} is not a nonterminal")
        for lhs, rhs in self.rules:
            if lhs not in nts:
                raise GrammarError(f"rule lhs {lhs!r} is not a nonterminal")
            for s in rhs:
                if s not in nts and s not in self.terminals:
                    raise GrammarError(f"unknown symbol {s!r} in rule for {lhs}")

    @property
    def size(self) -> int:
        return len(self.rules)

    @classmethod
    def from_rules(cls, rules: Iterable[Rule], start: str) -> "Grammar":
        rules = tuple(dict.fromkeys((lhs, tuple(rhs)) for lhs, rhs in rules))
        nts = list(dict.fromkeys([start] + [lhs for lhs, _ in rules]))
        terms = frozenset(s for _, rhs in rules for s in rhs if s not in nts)
        return cls(terms, tuple(nts), rules, start)

    def is_cnf(self) -> bool:
        nts = set(self.nonterminals)
        for _, rhs in self.rules:
            if len(rhs) == 1 and rhs[0] in self.terminals:
                continue
            if len(rhs) == 2 and rhs[0] in nts and rhs[1] in nts:
                continue
            return False
        return True

    def to_text(self) -> str:
        lines = [f"start: {self.start}"]
        for nt in self.nonterminals:
            alts = [" ".join(rhs) if rhs else "eps" for lhs, rhs in self.rules if lhs == nt]
            if alts:
                lines.append(f"{nt} -> " + " | ".join(alts))
        return "\n".join(lines) + "\n"


def parse_grammar(text: str) -> Grammar:
    """Parse ``start: S`` plus lines ``A -> a B | c``; ``eps`` is the empty string.

    Nonterminals are exactly the symbols that appear on a left-hand side.
    """
    start = None
    raw: list[tuple[str, list[str]]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"start\s*:\s*(\S+)", line)
        if m:
            start = m.group(1)
            continue
        if "->" not in line:
            raise GrammarError(f"line {lineno}: expected 'A -> ...' or 'start: A'")
        lhs, rhs = line.split("->", 1)
        lhs = lhs.strip()
        if not lhs or len(lhs.split()) != 1:
            raise GrammarError(f"line {lineno}: bad left-hand side {lhs!r}")
        for alt in rhs.split("|"):
            toks = [t for t in alt.split() if t not in EPSILON_TOKENS]
            raw.append((lhs, toks))
    if not raw:
        raise GrammarError("grammar has no rules")
    if start is None:
        start = raw[0][0]
    if start not in {lhs for lhs, _ in raw}:
        raise GrammarError(f"start symbol {start!r} has no rules")
    return Grammar.from_rules([(lhs, tuple(rhs)) for lhs, rhs in raw], start)


# --- languages ---------------------------------------------------------------

def derive_strings(g: Grammar, max_len: int) -> set[tuple[str, ...]]:
    """All terminal strings of length <= max_len derivable from the start symbol."""
    lang: dict[str, set] = {nt: set() for nt in g.nonterminals}
    changed = True
    while changed:
        changed = False
        for lhs, rhs in g.rules:
            partial = {()}
            for s in rhs:
                options = lang[s] if s in lang else {(s,)}
                partial = {p + o for p in partial for o in options if len(p) + len(o) <= max_len}
                if not partial:
                    break
            new = partial - lang[lhs]
            if new:
                lang[lhs] |= new
                changed = True
    return lang[g.start]


def cyk_member(g: Grammar, w: Sequence[str]) -> bool:
    if not g.is_cnf():
        raise GrammarError("CYK needs a grammar in Chomsky normal form")
    w = tuple(w)
    n = len(w)
    if n == 0:
        raise GrammarError("CYK is defined for nonempty strings")
    unit: dict[str, set] = {}
    binary = [(lhs, rhs[0], rhs[1]) for lhs, rhs in g.rules if len(rhs) == 2]
    for lhs, rhs in g.rules:
        if len(rhs) == 1:
            unit.setdefault(rhs[0], set()).add(lhs)
    table = [[set() for _ in range(n)] for _ in range(n)]
    for i, t in enumerate(w):
        table[i][i] = set(unit.get(t, ()))
    for span in range(2, n + 1):
        for i in range(n - span + 1):
            j = i + span - 1
            cell = table[i][j]
            for k in range(i, j):
                left, right = table[i][k], table[k + 1][j]
                if left and right:
                    for lhs, b, c in binary:
                        if b in left and c in right:
                            cell.add(lhs)
    return g.start in table[0][n - 1]


# --- Chomsky normal form -----------------------------------------------------

def _fresh(base: str, taken: set) -> str:
    name = base
    while name in taken:
        name += "'"
    taken.add(name)
    return name


def _nullable(rules) -> set:
    null: set = set()
    changed = True
    while changed:
        changed = False
        for lhs, rhs in rules:
            if lhs not in null and all(s in null for s in rhs):
                null.add(lhs)
                changed = True
    return null


def _prune(rules, start, terminals) -> list[Rule]:
    """Drop non-generating and unreachable nonterminals."""
    gen: set = set()
    changed = True
    while changed:
        changed = False
        for lhs, rhs in rules:
            if lhs not in gen and all(s in gen or s in terminals for s in rhs):
                gen.add(lhs)
                changed = True
    if start not in gen:
        raise GrammarError("grammar generates the empty language")
    rules = [(l, r) for l, r in rules if l in gen and all(s in gen or s in terminals for s in r)]
    reach = {start}
    changed = True
    while changed:
        changed = False
        for lhs, rhs in rules:
            if lhs in reach:
                for s in rhs:
                    if s not in terminals and s not in reach:
                        reach.add(s)
                        changed = True
    return [(l, r) for l, r in rules if l in reach]


def to_cnf(g: Grammar) -> Grammar:
    """Chomsky normal form via START, TERM, BIN, DEL, UNIT, then pruning.

    Grammars whose language contains the empty string are rejected.  A grammar
    already in CNF is returned unchanged apart from pruning.
    """
    if not g.rules:
        raise GrammarError("grammar has no rules")
    terminals = set(g.terminals)
    if g.start in _nullable(g.rules):
        raise GrammarError("the language contains the empty string; not expressible")
    if g.is_cnf():
        return Grammar.from_rules(_prune(list(g.rules), g.start, terminals), g.start)
    taken = set(g.nonterminals) | terminals
    rules = list(g.rules)

    # START
    start = _fresh(g.start + "0", taken)
    rules.insert(0, (start, (g.start,)))

    # TERM
    term_nt: dict[str, str] = {}
    out = []
    for lhs, rhs in rules:
        if len(rhs) >= 2:
            new = []
            for s in rhs:
                if s in terminals:
                    if s not in term_nt:
                        term_nt[s] = _fresh("T_" + s, taken)
                    s = term_nt[s]
                new.append(s)
            rhs = tuple(new)
        out.append((lhs, rhs))
    out += [(nt, (t,)) for t, nt in term_nt.items()]
    rules = out

    # BIN
    out = []
    counter = 0
    for lhs, rhs in rules:
        while len(rhs) > 2:
            counter += 1
            nt = _fresh(f"X{counter}", taken)
            out.append((lhs, (rhs[0], nt)))
            lhs, rhs = nt, rhs[1:]
        out.append((lhs, rhs))
    rules = out

    # DEL
    null = _nullable(rules)
    out = []
    for lhs, rhs in rules:
        opts = [((s,), ()) if s in null else ((s,),) for s in rhs]
        for combo in product(*opts):
            new = tuple(x for part in combo for x in part)
            if new:
                out.append((lhs, new))
    rules = list(dict.fromkeys(out))

    # UNIT
    nts = {lhs for lhs, _ in rules}
    unit_of = {nt: {nt} for nt in nts}
    changed = True
    while changed:
        changed = False
        for lhs, rhs in rules:
            if len(rhs) == 1 and rhs[0] in nts:
                for a in nts:
                    if lhs in unit_of[a] and rhs[0] not in unit_of[a]:
                        unit_of[a].add(rhs[0])
                        changed = True
    out = []
    for a in [lhs for lhs in dict.fromkeys(l for l, _ in rules)]:
        for lhs, rhs in rules:
            if lhs in unit_of[a] and not (len(rhs) == 1 and rhs[0] in nts):
                out.append((a, rhs))
    rules = list(dict.fromkeys(out))
    return Grammar.from_rules(_prune(rules, start, terminals), start)


# --- integer-pair grammars -----------------------------------------------------

Pair = tuple[int, int]


@dataclass(frozen=True)
class IntegerPairGrammar:
    n: int
    terminals: frozenset
    binary: tuple[tuple[Pair, Pair, Pair], ...]
    unary: tuple[tuple[Pair, str], ...]
    start: Pair = (0, 0)

    def __post_init__(self):
        for lhs, left, right in self.binary:
            if left[0] != lhs[0] or right[1] != lhs[1]:
                raise GrammarError(f"rule {lhs} -> {left} {right} does not share outer components")
            for p in (lhs, left, right):
                if not all(0 <= v < self.n for v in p):
                    raise GrammarError(f"pair {p} outside [0, {self.n})")

    @property
    def rules(self):
        return [(l, (a, b)) for l, a, b in self.binary] + [(l, (t,)) for l, t in self.unary]

    def as_grammar(self) -> Grammar:
        name = lambda p: f"({p[0]},{p[1]})"
        rules = [(name(l), (name(a), name(b))) for l, a, b in self.binary]
        rules += [(name(l), (t,)) for l, t in self.unary]
        return Grammar.from_rules(rules, name(self.start))


def relabel(g: Grammar) -> dict[str, int]:
    """First-occurrence order of nonterminals with the start symbol forced to 0."""
    order = [g.start]
    for lhs, rhs in g.rules:
        for s in (lhs, *rhs):
            if s in g.nonterminals and s not in order:
                order.append(s)
    return {nt: i for i, nt in enumerate(order)}


def to_integer_pair(g: Grammar) -> IntegerPairGrammar:
    if not g.is_cnf():
        raise GrammarError("integer-pair conversion needs a grammar in Chomsky normal form")
    index = relabel(g)
    n = len(index)
    binary, unary = [], []
    for lhs, rhs in g.rules:
        i = index[lhs]
        for a in range(n):
            d = (i - a) % n
            if len(rhs) == 2:
                b = (index[rhs[0]] - a) % n
                c = (index[rhs[1]] - d) % n
                binary.append(((a, d), (a, b), (c, d)))
            else:
                unary.append(((a, d), rhs[0]))
    return IntegerPairGrammar(n, g.terminals, tuple(binary), tuple(unary), (0, 0))


# --- compilation into an insertion system ----------------------------------

@dataclass(frozen=True)
class ExpressionMap:
    per_symbol: dict = field(hash=False)
    kappa: int = KAPPA

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa must be at least 1")

    def image(self, s: Symbol) -> Optional[str]:
        return self.per_symbol.get(s)


@dataclass(frozen=True)
class SymbolLayout:
    pairs: int
    u: int
    x: int
    terminal_base: dict

    def family(self, m: MonomerType) -> int:
        """Which of the four compiled monomer families (1..4) ``m`` belongs to."""
        p, q, r, _ = m.quad
        if m.sign == NEGATIVE:
            if q == Symbol(self.u):
                return 1
            if p == Symbol(self.x):
                return 3
        elif r == Symbol(self.x):
            return 4
        elif p.base < self.pairs:
            return 2
        raise ValueError(f"{m} is not a compiled monomer")


class Compiled(NamedTuple):
    system: InsertionSystem
    expression: ExpressionMap
    layout: SymbolLayout


def to_insertion_system(g: IntegerPairGrammar) -> Compiled:
    """Emit the four monomer families, initiator and expression map for ``g``.

    Symbols: pair values 0..n-1, then u, x, then terminals in sorted order.
    """
    n = g.n
    u, x = n, n + 1
    terms = sorted(g.terminals)
    tbase = {t: n + 2 + i for i, t in enumerate(terms)}
    S = lambda k: Symbol(k)
    T = lambda k: Symbol(k, True)
    fam1, fam2, fam3, fam4 = [], [], [], []
    for (a, d), (_, b), (c, _) in g.binary:
        fam1.append(((S(b), S(u), T(b), S(x)), NEGATIVE))
        fam2.append(((S(a), S(b), T(c), T(d)), POSITIVE))
        fam3.append(((S(x), S(c), T(u), T(c)), NEGATIVE))
    for (a, d), t in g.unary:
        fam4.append(((S(a), S(tbase[t]), S(x), T(d)), POSITIVE))
    quads = list(dict.fromkeys(fam1 + fam2 + fam3 + fam4))
    conc = 1.0 / len(quads) if quads else 0.0
    monos = tuple(MonomerType(q, sign, conc) for q, sign in quads)
    a, b = g.start
    init = Initiator((T(u), T(a)), (S(b), S(u)))
    system = InsertionSystem(n + 2 + len(terms), monos, init)
    expr = ExpressionMap({S(tbase[t]): t for t in terms}, KAPPA)
    return Compiled(system, expr, SymbolLayout(n, u, x, tbase))


def compile_grammar(g: Grammar) -> Compiled:
    return to_insertion_system(to_integer_pair(to_cnf(g)))


def apply_expression(emap: ExpressionMap, s: Sequence[Symbol]) -> tuple[str, ...]:
    return tuple(t for t in (emap.per_symbol.get(sym) for sym in s) if t is not None)


def kappa_check(emap: ExpressionMap, strings: Iterable[Sequence[Symbol]]) -> bool:
    """Every window of ``kappa`` consecutive symbols holds a symbol with non-empty image.

    A string shorter than the window is checked as a whole.
    """
    k = emap.kappa
    for s in strings:
        hits = [sym in emap.per_symbol for sym in s]
        if not any(hits):
            return False
        if len(hits) <= k:
            continue
        run = 0
        for h in hits:
            run = 0 if h else run + 1
            if run >= k:
                return False
    return True


def expression_pattern(emap: ExpressionMap, s: Sequence[Symbol]) -> tuple[int, ...]:
    """Lengths of the empty-image runs around each terminal: (lead, gap, ..., tail)."""
    runs, run = [], 0
    for sym in s:
        if sym in emap.per_symbol:
            runs.append(run)
            run = 0
        else:
            run += 1
    runs.append(run)
    return tuple(runs)


EXAMPLE_GRAMMARS = {
    "anbn": "start: S\nS -> a S b | a b\n",
    "parens": "start: S\nS -> S S | ( S ) | ( )\n",
    "palindromes": (
        "start: S\n"
        "S -> A X | B Y | A A | B B\n"
        "X -> S A\n"
        "Y -> S B\n"
        "A -> a\n"
        "B -> b\n"
    ),
}
