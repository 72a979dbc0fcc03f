"""Structural analysis: site classes, insertion sets and lineage statistics of traces."""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .core import InsertionSite, InsertionSystem, site_key_valid

SiteKey = tuple[int, int, int, int]


class SiteClass(str, Enum):
    POSITIVE = "positive"
    MIXED = "mixed"
    NEGATIVE = "negative"


def classify_key(key: SiteKey) -> SiteClass:
    a, b, c, d = key
    first = a ^ 1 == d
    second = b ^ 1 == c
    if first and second:
        return SiteClass.MIXED
    if first:
        return SiteClass.POSITIVE
    if second:
        return SiteClass.NEGATIVE
    raise ValueError(f"invalid site {InsertionSite.from_key(key)}: no complementary pair")


def classify_site(site: InsertionSite) -> SiteClass:
    return classify_key(site.key)


@dataclass
class InsertionSetPartition:
    sets: list[tuple[int, ...]]
    set_of: dict[int, int]
    signatures: list[tuple[str, int, int]] = field(default_factory=list)

    def __len__(self):
        return len(self.sets)

    def sizes(self) -> list[int]:
        return [len(g) for g in self.sets]


def acceptance_signature(sys: InsertionSystem, mid: int) -> tuple[str, int, int]:
    """Symbolic description of the sites a type accepts.

    (p,q,r,s)+ fits exactly the sites (a, p*)(s*, a*); (p,q,r,s)- exactly the
    sites (q*, b)(b*, r*).  The two fixed symbols are the signature.
    """
    m = sys.monomers[mid]
    p, q, r, s = m.codes
    if m.positive:
        return ("+", p ^ 1, s ^ 1)
    return ("-", q ^ 1, r ^ 1)


def insertion_sets(sys: InsertionSystem) -> InsertionSetPartition:
    groups: dict[tuple[str, int, int], list[int]] = {}
    for m in sys.monomers:
        groups.setdefault(acceptance_signature(sys, m.id), []).append(m.id)
    sets, set_of, sigs = [], {}, []
    for sig, ids in groups.items():
        for mid in ids:
            set_of[mid] = len(sets)
        sets.append(tuple(ids))
        sigs.append(sig)
    return InsertionSetPartition(sets, set_of, sigs)


@dataclass
class SequenceReport:
    class_counts: dict[str, int]
    lineages: int
    repeated_lineages: int
    max_nonpositive_run: int
    # one row per lineage: (leaf event, length, max non-positive run, repeated?)
    rows: list[tuple[int, int, int, bool]] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "count"])
        for name in (c.value for c in SiteClass):
            w.writerow([name, self.class_counts.get(name, 0)])
        w.writerow([])
        w.writerow(["lineage", "length", "max_nonpositive_run", "repeated_sites"])
        for leaf, length, run, rep in self.rows:
            w.writerow([leaf, length, run, int(rep)])
        return buf.getvalue()


class TraceMismatch(ValueError):
    pass


def replay_sites(sys: InsertionSystem, events: Sequence[tuple[int, int]]) -> tuple[list[SiteKey], list[int]]:
    """Site key and parent event of each (site_index, monomer_id) event.

    The parent of an event is the event that created its site (-1 for the
    initiator site).
    """
    # gaps[i] = (site key, creating event) for the site between ends i and i+1
    gaps: list[tuple[SiteKey, int]] = [(sys.initiator_key, -1)]
    keys, parents = [], []
    for n, (idx, mid) in enumerate(events):
        if not 0 <= idx < len(gaps):
            raise TraceMismatch(f"event {n}: site index {idx} out of range")
        key, parent = gaps[idx]
        if mid not in sys.types_at(key):
            raise TraceMismatch(f"event {n}: monomer {mid} not insertable at site {key}")
        keys.append(key)
        parents.append(parent)
        left, right = sys.children(key, mid)
        gaps[idx:idx + 1] = [(left, n), (right, n)]
    return keys, parents


def sequence_stats(trace, sys: InsertionSystem) -> SequenceReport:
    """Per-class counts and lineage statistics of a trace.

    A lineage is a root-to-leaf chain of events in which each event's site was
    created by the previous event; the initiator site is its first element.
    """
    events = [(e.site_index, e.monomer_id) for e in trace.events]
    keys, parents = replay_sites(sys, events)
    classes = [classify_key(k) for k in keys]
    counts = Counter(c.value for c in classes)

    children: list[list[int]] = [[] for _ in events]
    roots = []
    for n, par in enumerate(parents):
        (roots if par < 0 else children[par]).append(n)

    rows = []
    repeated = 0
    best = 0
    # iterative DFS keeping the multiset of keys on the current path
    on_path: Counter = Counter()
    dup = 0
    for root in roots:
        stack = [(root, False)]
        while stack:
            n, leaving = stack.pop()
            if leaving:
                on_path[keys[n]] -= 1
                if on_path[keys[n]] >= 1:
                    dup -= 1
                continue
            on_path[keys[n]] += 1
            if on_path[keys[n]] >= 2:
                dup += 1
            stack.append((n, True))
            if not children[n]:
                length, max_run = _path_stats(n, parents, classes)
                rows.append((n, length, max_run, dup > 0))
                if dup > 0:
                    repeated += 1
                else:
                    best = max(best, max_run)
            for kid in children[n]:
                stack.append((kid, False))
    rows.sort()
    return SequenceReport(dict(counts), len(rows), repeated, best, rows)


def _path_stats(leaf, parents, classes) -> tuple[int, int]:
    length = 0
    run = best = 0
    n = leaf
    while n >= 0:
        length += 1
        if classes[n] is SiteClass.POSITIVE:
            run = 0
        else:
            run += 1
            best = max(best, run)
        n = parents[n]
    return length, best


def site_valid(key: SiteKey) -> bool:
    return site_key_valid(key)
