"""Exploration of constructible polymers and reachable insertion sites.

Two levels of exploration are offered:

* polymer level (:func:`enumerate_polymers`) -- the breadth-first closure of
  ``insert`` over all sites and types, deduplicated by monomer-id sequence.
  With ``strategy="leftmost"`` only the leftmost live site of each polymer is
  expanded.  Insertions at different sites commute and never disable each
  other, so every terminal polymer is still reached; only the interleavings
  are pruned.
* site level (:func:`site_graph`) -- the closure over insertion-site keys.
  Every polymer is a tree of independent site histories, so most structural
  questions (determinism of large counters, finiteness, longest polymer,
  number of derivations) are answered on this much smaller graph.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import (
    InsertionSystem,
    Polymer,
    Symbol,
    site_key_at,
    site_keys,
    string_representation,
)

DEFAULT_MAX_LEN = 10_000
DEFAULT_MAX_COUNT = 1_000_000
DEFAULT_MAX_SITES = 1_000_000

SiteKey = tuple[int, int, int, int]


def is_terminal(sys: InsertionSystem, p: Polymer) -> bool:
    return all(not sys.types_at(k) for k in site_keys(sys, p.ids))


def _live_sites(sys, ids):
    return [i for i, k in enumerate(site_keys(sys, ids)) if sys.types_at(k)]


@dataclass
class ReachableSet:
    polymers: set[Polymer]
    terminals: set[Polymer]
    truncated: bool
    max_len: int
    max_count: int
    strategy: str = "full"

    def __len__(self):
        return len(self.polymers)

    def terminal_lengths(self) -> list[int]:
        return sorted(p.length for p in self.terminals)


def enumerate_polymers(
    sys: InsertionSystem,
    max_len: int = DEFAULT_MAX_LEN,
    max_count: int = DEFAULT_MAX_COUNT,
    strategy: str = "full",
) -> ReachableSet:
    """Breadth-first closure of insertion from the initiator.

    ``max_len`` bounds polymer length (including Q and R), ``max_count`` the
    number of stored polymers.  ``truncated`` is set iff some successor was
    dropped because of either bound.
    """
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    if strategy not in ("full", "leftmost"):
        raise ValueError(f"unknown strategy {strategy!r}")
    start: tuple[int, ...] = ()
    seen = {start}
    terminals = set()
    frontier = deque([start])
    truncated = False
    while frontier:
        ids = frontier.popleft()
        keys = site_keys(sys, ids)
        live = [(i, sys.types_at(k)) for i, k in enumerate(keys) if sys.types_at(k)]
        if not live:
            terminals.add(ids)
            continue
        if strategy == "leftmost":
            live = live[:1]
        if len(ids) + 3 > max_len:
            truncated = True
            continue
        for i, types in live:
            for mid in types:
                nxt = ids[:i] + (mid,) + ids[i:]
                if nxt in seen:
                    continue
                if len(seen) >= max_count:
                    truncated = True
                    continue
                seen.add(nxt)
                frontier.append(nxt)
    return ReachableSet(
        polymers={Polymer(sys, ids) for ids in seen},
        terminals={Polymer(sys, ids) for ids in terminals},
        truncated=truncated,
        max_len=max_len,
        max_count=max_count,
        strategy=strategy,
    )


def fill_sites(
    sys: InsertionSystem,
    choose: Callable[[InsertionSystem, SiteKey, tuple[int, ...]], int],
    max_monomers: int = 50_000_000,
) -> list[int]:
    """Grow a terminal polymer by filling live sites left to right.

    ``choose(sys, key, types)`` picks the type inserted at each live site.
    Returns the monomer-id sequence of the resulting terminal polymer.
    """
    out: list[int] = []
    # stack items: site keys (tuples) or monomer ids (ints) waiting to be emitted
    stack: list = [sys.initiator_key]
    monos = sys.monomers
    while stack:
        item = stack.pop()
        if isinstance(item, int):
            out.append(item)
            if len(out) > max_monomers:
                raise RuntimeError(f"polymer exceeds {max_monomers} monomers")
            continue
        types = sys.types_at(item)
        if not types:
            continue
        mid = choose(sys, item, types)
        p, q, r, s = monos[mid].codes
        a, b, c, d = item
        stack.append((r, s, c, d))
        stack.append(mid)
        stack.append((a, b, p, q))
    return out


@dataclass
class SiteGraph:
    root: SiteKey
    nodes: set[SiteKey]
    edges: dict[tuple[SiteKey, int], tuple[SiteKey, SiteKey]]
    truncated: bool
    insertions: int = 0

    def types(self, sys: InsertionSystem, key: SiteKey) -> tuple[int, ...]:
        return sys.types_at(key)

    def successors(self, key: SiteKey) -> list[SiteKey]:
        return [kid for (k, _), pair in self.edges.items() if k == key for kid in pair]

    def is_acyclic(self) -> bool:
        return find_cycle(self) is None


def site_graph(sys: InsertionSystem, max_sites: int = DEFAULT_MAX_SITES) -> SiteGraph:
    root = sys.initiator_key
    nodes = {root}
    edges = {}
    queue = deque([root])
    truncated = False
    insertions = 0
    while queue:
        key = queue.popleft()
        for mid in sys.types_at(key):
            left, right = sys.children(key, mid)
            edges[(key, mid)] = (left, right)
            insertions += 1
            for kid in (left, right):
                if kid in nodes:
                    continue
                if len(nodes) >= max_sites:
                    truncated = True
                    continue
                nodes.add(kid)
                queue.append(kid)
    return SiteGraph(root, nodes, edges, truncated, insertions)


def _adjacency(graph: SiteGraph) -> dict[SiteKey, list[SiteKey]]:
    adj: dict[SiteKey, list[SiteKey]] = {k: [] for k in graph.nodes}
    for (k, _), (left, right) in graph.edges.items():
        adj[k].extend(kid for kid in (left, right) if kid in graph.nodes)
    return adj


def find_cycle(graph: SiteGraph) -> Optional[list[SiteKey]]:
    """A directed cycle of the site graph (a site that can recreate itself), or None."""
    adj = _adjacency(graph)
    color = dict.fromkeys(adj, 0)
    for start in adj:
        if color[start]:
            continue
        path = [start]
        iters = [iter(adj[start])]
        color[start] = 1
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                color[path.pop()] = 2
                iters.pop()
                continue
            if color[nxt] == 1:
                return path[path.index(nxt):] + [nxt]
            if color[nxt] == 0:
                color[nxt] = 1
                path.append(nxt)
                iters.append(iter(adj[nxt]))
    return None


def _postorder(graph: SiteGraph) -> list[SiteKey]:
    adj = _adjacency(graph)
    order, done = [], set()
    for start in adj:
        if start in done:
            continue
        stack = [(start, iter(adj[start]))]
        done.add(start)
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                order.append(node)
                stack.pop()
            elif nxt not in done:
                done.add(nxt)
                stack.append((nxt, iter(adj[nxt])))
    return order


@dataclass
class SiteSummary:
    """Exact per-site quantities of a finite acyclic site graph.

    ``max_monomers[k]``  -- most monomers a history starting at site k can insert
    ``min_monomers[k]``  -- fewest monomers any terminal history from site k inserts
    ``derivations[k]``   -- number of terminal insertion trees rooted at k
    ``depth[k]``         -- longest insertion sequence (lineage) starting at k
    """

    max_monomers: dict[SiteKey, int]
    min_monomers: dict[SiteKey, int]
    derivations: dict[SiteKey, int]
    depth: dict[SiteKey, int]

    def root_values(self, root):
        return (self.max_monomers[root], self.min_monomers[root],
                self.derivations[root], self.depth[root])


def summarize_sites(sys: InsertionSystem, graph: SiteGraph) -> SiteSummary:
    if graph.truncated:
        raise ValueError("site graph is truncated")
    cycle = find_cycle(graph)
    if cycle is not None:
        raise ValueError(f"site graph has a cycle through {cycle[0]}")
    mx, mn, der, dep = {}, {}, {}, {}
    for key in _postorder(graph):
        types = sys.types_at(key)
        if not types:
            mx[key], mn[key], der[key], dep[key] = 0, 0, 1, 0
            continue
        best, worst, count, deep = -1, None, 0, 0
        for mid in types:
            left, right = sys.children(key, mid)
            best = max(best, 1 + mx[left] + mx[right])
            low = 1 + mn[left] + mn[right]
            worst = low if worst is None else min(worst, low)
            count += der[left] * der[right]
            deep = max(deep, 1 + dep[left], 1 + dep[right])
        mx[key], mn[key], der[key], dep[key] = best, worst, count, deep
    return SiteSummary(mx, mn, der, dep)


@dataclass
class Verdict:
    status: str  # "deterministic" | "not-deterministic" | "inconclusive"
    polymer: Optional[Polymer] = None
    witness: Optional[object] = None
    level: str = "polymer"
    detail: str = ""

    @property
    def deterministic(self) -> bool:
        return self.status == "deterministic"

    def __str__(self):
        head = f"{self.status} ({self.level} level)"
        if self.polymer is not None:
            head += f": terminal length {self.polymer.length}"
        if self.detail:
            head += f"; {self.detail}"
        return head


def check_deterministic(
    sys: InsertionSystem,
    max_len: int = DEFAULT_MAX_LEN,
    max_count: int = DEFAULT_MAX_COUNT,
    level: str = "polymer",
    strategy: str = "leftmost",
) -> Verdict:
    """Decide deterministic construction within bounds.

    ``level="polymer"`` enumerates polymers (``strategy`` as in
    :func:`enumerate_polymers`).  A second terminal polymer is a definitive
    witness even when the bounds were hit; otherwise hitting a bound yields
    ``inconclusive``.

    ``level="site"`` checks that every reachable site accepts at most one type
    and that the site graph is finite and acyclic, which forces a unique
    terminal polymer; the polymer itself is not materialised.
    """
    if level == "site":
        return _check_det_sites(sys, max_count)
    if strategy == "full":
        reach = enumerate_polymers(sys, max_len, max_count, "full")
        return _det_verdict_from_reach(reach)
    return _check_det_leftmost(sys, max_len, max_count)


def _det_verdict_from_reach(reach: ReachableSet) -> Verdict:
    terms = sorted(reach.terminals, key=lambda p: (p.length, p.ids))
    if len(terms) >= 2:
        return Verdict("not-deterministic", witness=(terms[0], terms[1]),
                       detail=f"terminal polymers of lengths {terms[0].length} and {terms[1].length}")
    if reach.truncated:
        return Verdict("inconclusive", detail="enumeration bounds reached")
    if not terms:
        return Verdict("not-deterministic", detail="no terminal polymer")
    P = terms[0]
    longer = [q for q in reach.polymers if q != P and q.length >= P.length]
    if longer:
        return Verdict("not-deterministic", witness=longer[0],
                       detail="non-terminal polymer at least as long as the terminal")
    return Verdict("deterministic", polymer=P, detail=f"{len(reach.polymers)} polymers")


def _check_det_leftmost(sys, max_len, max_count) -> Verdict:
    # depth-first over the leftmost-reduced state space; stops at the second terminal
    stack: list[tuple[int, ...]] = [()]
    seen = {()}
    terminal = None
    truncated = False
    while stack:
        ids = stack.pop()
        keys = site_keys(sys, ids)
        live = next(((i, sys.types_at(k)) for i, k in enumerate(keys) if sys.types_at(k)), None)
        if live is None:
            if terminal is not None and terminal != ids:
                a, b = Polymer(sys, terminal), Polymer(sys, ids)
                return Verdict("not-deterministic", witness=(a, b),
                               detail=f"terminal polymers of lengths {a.length} and {b.length}")
            terminal = ids
            continue
        if len(ids) + 3 > max_len:
            truncated = True
            continue
        i, types = live
        for mid in reversed(types):
            nxt = ids[:i] + (mid,) + ids[i:]
            if nxt in seen:
                continue
            if len(seen) >= max_count:
                truncated = True
                continue
            seen.add(nxt)
            stack.append(nxt)
    if truncated:
        return Verdict("inconclusive", detail="enumeration bounds reached")
    if terminal is None:
        return Verdict("not-deterministic", detail="no terminal polymer")
    # every polymer extends to a terminal one; with a unique terminal P all others are shorter
    return Verdict("deterministic", polymer=Polymer(sys, terminal),
                   detail=f"{len(seen)} leftmost-reduced states")


def _check_det_sites(sys, max_sites) -> Verdict:
    graph = site_graph(sys, max_sites)
    for key in graph.nodes:
        types = sys.types_at(key)
        if len(types) > 1:
            return Verdict("not-deterministic", witness=key, level="site",
                           detail=f"site {key} accepts {len(types)} types")
    if graph.truncated:
        return Verdict("inconclusive", level="site", detail="site bound reached")
    cycle = find_cycle(graph)
    if cycle is not None:
        return Verdict("not-deterministic", witness=cycle, level="site",
                       detail="a site recreates itself: unbounded growth")
    summary = summarize_sites(sys, graph)
    length = summary.max_monomers[graph.root] + 2
    return Verdict("deterministic", level="site",
                   detail=f"{len(graph.nodes)} sites, unique terminal length {length}",
                   witness=length)


@dataclass
class GrowthVerdict:
    ok: bool
    violations: list[SiteKey] = field(default_factory=list)
    branching_sites: int = 0
    # branching sites where every accepted type ends growth (the counter's final state)
    stopping_sites: list[SiteKey] = field(default_factory=list)
    acyclic: bool = True
    truncated: bool = False

    def __bool__(self):
        return self.ok


def growing_types(sys: InsertionSystem, key: SiteKey) -> list[int]:
    """Types at ``key`` after whose insertion some created site still accepts a monomer."""
    return [mid for mid in sys.types_at(key)
            if any(sys.types_at(kid) for kid in sys.children(key, mid))]


def check_growth_deterministic(sys: InsertionSystem, max_sites: int = DEFAULT_MAX_SITES) -> GrowthVerdict:
    """Every reachable site accepting >= 2 types lets at most one of them keep growing.

    Sites where no accepted type keeps growing are allowed and listed in
    ``stopping_sites``; any other choice there simply ends the lineage.
    """
    graph = site_graph(sys, max_sites)
    violations, stopping = [], []
    branching = 0
    for key in sorted(graph.nodes):
        if len(sys.types_at(key)) < 2:
            continue
        branching += 1
        growing = growing_types(sys, key)
        if len(growing) > 1:
            violations.append(key)
        elif not growing:
            stopping.append(key)
    return GrowthVerdict(
        ok=not violations and not graph.truncated,
        violations=violations,
        branching_sites=branching,
        stopping_sites=stopping,
        acyclic=find_cycle(graph) is None if not graph.truncated else False,
        truncated=graph.truncated,
    )


def language(sys: InsertionSystem, max_len: int, max_count: int = DEFAULT_MAX_COUNT,
             strategy: str = "leftmost") -> set[tuple[Symbol, ...]]:
    """String representations of all terminal polymers of length <= max_len.

    The leftmost reduction preserves the terminal set (see module docstring);
    ``strategy="full"`` gives the literal closure for cross-checking.
    """
    reach = enumerate_polymers(sys, max_len, max_count, strategy)
    if reach.truncated and len(reach.polymers) >= max_count:
        raise RuntimeError("language enumeration hit max_count; result would be incomplete")
    return {tuple(string_representation(p)) for p in reach.terminals}


def polymer_site_key(sys: InsertionSystem, p: Polymer, i: int) -> SiteKey:
    return site_key_at(sys, p.ids, i)
