"""Continuous-time stochastic growth of polymers.

Every monomer type insertable at a site fires after an exponential time with
rate equal to its concentration; the race over all (site, type) pairs is
simulated with Gillespie's direct method.  Monomer supply is an infinite bath:
concentrations never change.

RNG contract: numpy ``PCG64``.  A run seeded with ``seed`` uses
``np.random.default_rng(seed)``; trial ``i`` of a batch with master seed ``m``
uses ``SeedSequence(m, spawn_key=(i,))``.  Uniforms are drawn in blocks of
:data:`UNIFORM_BLOCK` and each event consumes exactly three of them (waiting
time by inverse CDF, site, type), so traces are bit-reproducible.  Blocks
start small and double up to the cap; every double costs one 64-bit draw, so
the stream of uniforms does not depend on the block sizes.
"""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import InsertionSystem, Polymer, site_keys, validate_system
from .enumerator import find_cycle, site_graph

UNIFORM_BLOCK = 4096
_FIRST_BLOCK = 16
DEFAULT_MAX_EVENTS = 10_000_000


class TerminalPolymerError(RuntimeError):
    """No monomer can be inserted: the polymer is terminal."""


def trial_rng(master: int, i: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master, spawn_key=(i,))))


def total_rate(sys: InsertionSystem, p: Polymer) -> float:
    return sum(sys.site_rate(k) for k in site_keys(sys, p.ids))


def step(sys: InsertionSystem, p: Polymer, rng: np.random.Generator) -> tuple[float, int, int]:
    """One Gillespie step from ``p``: (waiting time, site index, monomer type id)."""
    keys = site_keys(sys, p.ids)
    choices = [(i, mid, sys.monomers[mid].concentration)
               for i, k in enumerate(keys) for mid in sys.types_at(k)]
    total = sum(c for _, _, c in choices)
    if total <= 0:
        raise TerminalPolymerError("polymer is terminal")
    dt = -math.log1p(-rng.random()) / total
    target = rng.random() * total
    for i, mid, c in choices:
        if target < c:
            return dt, i, mid
        target -= c
    i, mid, _ = choices[-1]
    return dt, i, mid


@dataclass
class SimConfig:
    seed: int = 0
    target_length: Optional[int] = None
    max_events: Optional[int] = None
    max_time: Optional[float] = None
    record_trace: bool = True
    event_cap: int = DEFAULT_MAX_EVENTS

    def __post_init__(self):
        active = [v is not None for v in (self.target_length, self.max_events, self.max_time)]
        if sum(active) > 1:
            raise ValueError("at most one of target_length / max_events / max_time may be set")
        if self.target_length is not None and self.target_length < 2:
            raise ValueError("target_length must be at least 2")

    @property
    def stop(self) -> str:
        if self.target_length is not None:
            return "target"
        if self.max_events is not None:
            return "events"
        if self.max_time is not None:
            return "time"
        return "terminal"


class TraceEvent(tuple):
    """(time, site_index, monomer_id, parent)."""

    __slots__ = ()

    def __new__(cls, time, site_index, monomer_id, parent=-1):
        return tuple.__new__(cls, (time, site_index, monomer_id, parent))

    time = property(lambda self: self[0])
    site_index = property(lambda self: self[1])
    monomer_id = property(lambda self: self[2])
    parent = property(lambda self: self[3])


@dataclass
class Trace:
    events: list[TraceEvent]
    final_polymer: Optional[Polymer]
    outcome: str
    time: float
    n_events: int
    length: int

    @property
    def completed(self) -> bool:
        return self.outcome in ("target", "terminal")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["event", "time", "site_index", "monomer_id"])
        for n, e in enumerate(self.events):
            w.writerow([n, f"{e.time:.9f}", e.site_index, e.monomer_id])
        return buf.getvalue()


def read_trace_csv(text: str) -> list[TraceEvent]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [TraceEvent(float(r["time"]), int(r["site_index"]), int(r["monomer_id"])) for r in rows]


class _Uniforms:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf: list[float] = []
        self.pos = 0
        self.size = _FIRST_BLOCK

    def __call__(self) -> float:
        if self.pos >= len(self.buf):
            self.buf = self.rng.random(self.size).tolist()
            self.size = min(2 * self.size, UNIFORM_BLOCK)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u


class _Bucket:
    """Live sites sharing one total rate; O(1) add/remove by swap."""

    __slots__ = ("rate", "items", "where")

    def __init__(self, rate):
        self.rate = rate
        self.items: list[int] = []
        self.where: dict[int, int] = {}

    def add(self, node):
        self.where[node] = len(self.items)
        self.items.append(node)

    def remove(self, node):
        i = self.where.pop(node)
        last = self.items.pop()
        if last != node:
            self.items[i] = last
            self.where[last] = i


def simulate(sys: InsertionSystem, cfg: SimConfig, rng: Optional[np.random.Generator] = None) -> Trace:
    """Run one trajectory until the configured stop (or a terminal polymer).

    A terminal polymer reached before ``target_length`` is reported through
    ``Trace.outcome == "terminal"`` with the target unmet, not raised.
    """
    _require_valid(sys)
    return _simulate(sys, cfg, rng)


def _require_valid(sys: InsertionSystem) -> None:
    report = validate_system(sys)
    if not report.ok:
        raise ValueError("invalid system: " + "; ".join(report.violations))


def _simulate(sys: InsertionSystem, cfg: SimConfig, rng: Optional[np.random.Generator]) -> Trace:
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    uniform = _Uniforms(rng)
    monos = sys.monomers
    conc = [m.concentration for m in monos]
    codes = [m.codes for m in monos]

    # node 0 = Q, node 1 = R; site "at" node n lies between n and nxt[n]
    nxt = [1, -1]
    site_key: list = [sys.initiator_key, None]
    creator = [-1, -1]
    site_types: dict = {}
    buckets: dict[float, _Bucket] = {}
    in_bucket: dict[int, _Bucket] = {}

    def info(key):
        got = site_types.get(key)
        if got is None:
            types = sys.types_at(key)
            got = (types, sum(conc[m] for m in types))
            site_types[key] = got
        return got

    def activate(node):
        types, rate = info(site_key[node])
        if types:
            b = buckets.get(rate)
            if b is None:
                b = buckets[rate] = _Bucket(rate)
            b.add(node)
            in_bucket[node] = b

    activate(0)
    record = cfg.record_trace
    ev_time: list[float] = []
    ev_left: list[int] = []
    ev_type: list[int] = []
    ev_parent: list[int] = []

    t = 0.0
    n_events = 0
    length = 2
    outcome = "terminal"
    event_limit = cfg.max_events if cfg.max_events is not None else cfg.event_cap
    target = cfg.target_length
    if target is not None and length >= target:
        outcome = "target"
    else:
        while True:
            if n_events >= event_limit:
                outcome = "events" if cfg.max_events is not None else "event_cap"
                break
            total = 0.0
            for b in buckets.values():
                if b.items:
                    total += b.rate * len(b.items)
            if total <= 0.0:
                outcome = "terminal"
                break
            dt = -math.log1p(-uniform()) / total
            u_site = uniform() * total
            u_type = uniform()
            if cfg.max_time is not None and t + dt > cfg.max_time:
                t = cfg.max_time
                outcome = "time"
                break
            t += dt
            chosen = None
            for b in buckets.values():
                w = b.rate * len(b.items)
                if u_site < w:
                    idx = min(int(u_site / b.rate), len(b.items) - 1)
                    chosen = b.items[idx]
                    break
                u_site -= w
            if chosen is None:  # float round-off at the upper edge
                chosen = next(b.items[-1] for b in reversed(buckets.values()) if b.items)
            key = site_key[chosen]
            types, rate = info(key)
            pick = u_type * rate
            mid = types[-1]
            for m in types:
                c = conc[m]
                if pick < c:
                    mid = m
                    break
                pick -= c

            in_bucket.pop(chosen).remove(chosen)
            p_, q_, r_, s_ = codes[mid]
            a, b_, c, d = key
            new = len(nxt)
            nxt.append(nxt[chosen])
            nxt[chosen] = new
            site_key[chosen] = (a, b_, p_, q_)
            site_key.append((r_, s_, c, d))
            if record:
                ev_time.append(t)
                ev_left.append(chosen)
                ev_type.append(mid)
                ev_parent.append(creator[chosen])
            creator[chosen] = n_events
            creator.append(n_events)
            activate(chosen)
            activate(new)
            n_events += 1
            length += 1
            if target is not None and length >= target:
                outcome = "target"
                break

    order = []
    node = nxt[0]
    while node != 1:
        order.append(node)
        node = nxt[node]
    events: list[TraceEvent] = []
    final = None
    if record:
        # node n >= 2 was created by event n - 2 with monomer ev_type[n - 2]
        final = Polymer(sys, tuple(ev_type[n - 2] for n in order))
        idx = _site_indices(order, ev_left)
        events = [TraceEvent(ev_time[k], idx[k], ev_type[k], ev_parent[k]) for k in range(n_events)]
    return Trace(events, final, outcome, t, n_events, length)


def _site_indices(order: Sequence[int], ev_left: Sequence[int]) -> list[int]:
    """Positional site index of every event, from the final left-to-right node order.

    Relative order of ends never changes, so the index of the site at node L at
    event k is the number of ends present at k that finish left of L.
    """
    pos = {0: 0}
    for i, node in enumerate(order, start=1):
        pos[node] = i
    size = len(order) + 2
    tree = [0] * (size + 1)

    def add(i):
        i += 1
        while i <= size:
            tree[i] += 1
            i += i & -i

    def count_below(i):
        s = 0
        while i > 0:
            s += tree[i]
            i -= i & -i
        return s

    add(0)
    out = []
    for k, left in enumerate(ev_left):
        out.append(count_below(pos[left]))
        add(pos[k + 2])
    return out


def replay(sys: InsertionSystem, events: Sequence[TraceEvent]) -> Polymer:
    """Apply trace events through the model's insert operation."""
    from .core import insert, initial_polymer

    p = initial_polymer(sys)
    for e in events:
        p = insert(p, e.site_index, sys.monomers[e.monomer_id])
    return p


@dataclass
class TrialStats:
    n: int
    completed: int
    mean: float
    variance: Optional[float]
    median: float
    quantiles: dict[float, float]
    length_histogram: dict[int, int]
    outcomes: dict[str, int]
    times: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    @property
    def std_error(self) -> Optional[float]:
        if self.variance is None:
            return None
        return math.sqrt(self.variance / self.completed)

    def tail_fraction(self, multiple: float) -> float:
        """Fraction of completed trials slower than ``multiple`` x median."""
        if self.completed == 0:
            return float("nan")
        return float(np.mean(self.times > multiple * self.median))


QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def summarize(times: Sequence[float], lengths: Sequence[int], outcomes: Sequence[str], n: int) -> TrialStats:
    arr = np.asarray(times, dtype=float)
    k = len(arr)
    if k:
        qs = {q: float(np.quantile(arr, q)) for q in QUANTILES}
        mean = float(arr.mean())
        median = float(np.median(arr))
    else:
        qs = {q: float("nan") for q in QUANTILES}
        mean = median = float("nan")
    var = float(arr.var(ddof=1)) if k >= 2 else None
    return TrialStats(n, k, mean, var, median, qs,
                      dict(sorted(Counter(lengths).items())), dict(Counter(outcomes)), arr)


def _run_trial(args):
    sys, cfg, master, i = args
    tr = _simulate(sys, cfg, trial_rng(master, i))
    return tr.outcome, tr.time, tr.length


def trials(sys: InsertionSystem, cfg: SimConfig, n_trials: int, jobs: int = 1,
           method: str = "gillespie") -> TrialStats:
    """Independent seeded runs aggregated into completion-time statistics.

    Completion means the stop criterion was met: the target length, or a
    terminal polymer when no target is set.  ``method="lineage"`` samples
    completion-to-terminal times with :func:`lineage_completion_times` instead
    of simulating whole polymers.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    if method == "lineage":
        if cfg.stop != "terminal":
            raise ValueError("the lineage sampler only measures time to a terminal polymer")
        times, length = lineage_completion_times(sys, n_trials, cfg.seed)
        return summarize(times, [length] * n_trials, ["terminal"] * n_trials, n_trials)
    if method != "gillespie":
        raise ValueError(f"unknown method {method!r}")
    _require_valid(sys)
    cfg = SimConfig(cfg.seed, cfg.target_length, cfg.max_events, cfg.max_time, False, cfg.event_cap)
    work = [(sys, cfg, cfg.seed, i) for i in range(n_trials)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_run_trial, work, chunksize=max(1, n_trials // (4 * jobs))))
    else:
        results = [_run_trial(w) for w in work]
    goal = "target" if cfg.stop == "target" else "terminal"
    times = [t for o, t, _ in results if o == goal]
    lengths = [ln for o, _, ln in results if o == goal]
    return summarize(times, lengths, [o for o, _, _ in results], n_trials)


# --- lineage decomposition -------------------------------------------------
#
# Distinct live sites hold independent exponential clocks, so for a system
# whose reachable sites accept at most one type the time to finish the
# history of a site k is  T(k) = Exp(rate_k) + max(T(left), T(right)),  with
# T(dead site) = 0.  Chains of single-child sites collapse into Gamma draws
# and only branch sites (two live children) need explicit maxima.

@dataclass
class _Segment:
    rates: dict[float, int]
    branch: Optional[tuple]


def _segment(sys, key, cache):
    start = key
    if start in cache:
        return cache[start]
    rates: Counter = Counter()
    branch = None
    while True:
        types = sys.types_at(key)
        if not types:
            break
        rates[sys.site_rate(key)] += 1
        kids = [k for k in sys.children(key, types[0]) if sys.types_at(k)]
        if len(kids) == 2:
            branch = key
            break
        if not kids:
            break
        key = kids[0]
    seg = _Segment(dict(rates), branch)
    cache[start] = seg
    return seg


def lineage_plan(sys: InsertionSystem):
    """Compressed branch DAG: (root segment, {branch: (left seg, right seg)}, topo order)."""
    graph = site_graph(sys)
    if graph.truncated or find_cycle(graph) is not None:
        raise ValueError("lineage sampling needs a finite acyclic site graph")
    for k in graph.nodes:
        if len(sys.types_at(k)) > 1:
            raise ValueError(f"site {k} accepts several types; lineage sampling needs a deterministic system")
    cache: dict = {}
    root = _segment(sys, sys.initiator_key, cache)
    branches: dict = {}
    todo = [root.branch] if root.branch else []
    while todo:
        b = todo.pop()
        if b in branches:
            continue
        left, right = sys.children(b, sys.types_at(b)[0])
        segs = (_segment(sys, left, cache), _segment(sys, right, cache))
        branches[b] = segs
        todo.extend(s.branch for s in segs if s.branch and s.branch not in branches)
    # topological order: parents before children
    order, seen = [], set()

    def visit(b):
        stack = [(b, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if node in seen:
                continue
            seen.add(node)
            stack.append((node, True))
            for s in branches[node]:
                if s.branch and s.branch not in seen:
                    stack.append((s.branch, False))

    if root.branch:
        visit(root.branch)
    order.reverse()
    return root, branches, order


def _gamma_sum(rng, rates: dict[float, int], size: int) -> np.ndarray:
    out = np.zeros(size)
    for rate, count in sorted(rates.items()):
        out += rng.gamma(count, 1.0 / rate, size)
    return out


def lineage_completion_times(sys: InsertionSystem, n_trials: int, seed: int,
                             batch: Optional[int] = None) -> tuple[np.ndarray, int]:
    """Exact samples of the time to reach the terminal polymer, plus its length."""
    root, branches, order = lineage_plan(sys)
    # occurrences of each branch site per polymer, and monomers per segment
    occ: Counter = Counter()
    if root.branch:
        occ[root.branch] = 1
    for b in order:
        for s in branches[b]:
            if s.branch:
                occ[s.branch] += occ[b]
    inserted = sum(root.rates.values()) + sum(
        occ[b] * sum(sum(s.rates.values()) for s in branches[b]) for b in order)
    total_occ = sum(occ.values()) or 1
    if batch is None:
        batch = max(1, min(n_trials, 4_000_000 // total_occ))
    rng = np.random.default_rng(seed)
    out = []
    done = 0
    while done < n_trials:
        m = min(batch, n_trials - done)
        out.append(_lineage_batch(rng, root, branches, order, occ, m))
        done += m
    return np.concatenate(out), inserted + 2


def _lineage_batch(rng, root, branches, order, occ, m):
    samples: dict = {}
    cursor: Counter = Counter()

    def take(seg, size):
        vals = _gamma_sum(rng, seg.rates, size)
        if seg.branch:
            start = cursor[seg.branch]
            vals += samples[seg.branch][start:start + size]
            cursor[seg.branch] = start + size
        return vals

    for b in reversed(order):
        size = occ[b] * m
        left, right = branches[b]
        samples[b] = np.maximum(take(left, size), take(right, size))
        # children are fully consumed once every parent has drawn; free early
        for s in (left, right):
            if s.branch and cursor[s.branch] >= occ[s.branch] * m:
                samples.pop(s.branch, None)
    return take(root, m)
