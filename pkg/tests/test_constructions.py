import pytest

from conftest import GOLDEN
from oracles import counter_length
from polyinsert.analyzer import SiteClass, classify_key, insertion_sets, sequence_stats
from polyinsert.constructions import (
    CounterParams, ReplacementSpec, compile_replacement, counter_monomer_bound, counter_monomers,
    gen_counter_system, gen_doubling_system, gen_fast_system, s, t,
)
from polyinsert.core import (
    Initiator, InsertionSite, InsertionSystem, MonomerType, Symbol, validate_system,
)
from polyinsert.enumerator import enumerate_polymers, find_cycle, is_terminal, site_graph, summarize_sites
from polyinsert.io import parse_system, serialize_system
from polyinsert.kinetics import Trace, TraceEvent, replay


def quads(system):
    return {(tuple(str(x) for x in m.quad), m.sign) for m in system.monomers}


def Q(text, sign):
    return (tuple(text.split()), sign)


# --- replacement gadgets ------------------------------------------------------

U, X = Symbol(8), Symbol(9)


def test_replacement_rows_emit_table_pairs():
    a, b, c, d = 1, 2, 3, 4
    row1 = compile_replacement(ReplacementSpec(1, a, b, c, d, U, X))
    assert [(str(m), m.sign) for m in row1] == [("(s2*,s9,s8,s3*)+", "+"), ("(s9,s8*,s1,s4)-", "-")]
    row4 = compile_replacement(ReplacementSpec(4, a, b, c, d, U, X))
    assert [str(m) for m in row4] == ["(s8,s2*,s3*,s9)-", "(s1*,s4,s9,s8*)+"]
    with pytest.raises(ValueError):
        ReplacementSpec(5, a, b, c, d, U, X)


@pytest.mark.parametrize("kind, start, target", [
    (1, ((1, 0), (2, 0), (3, 0), (1, 1)), ((1, 0), (4, 0), (3, 0), (1, 1))),
    (2, ((1, 0), (2, 0), (3, 0), (1, 1)), ((1, 0), (2, 0), (4, 0), (1, 1))),
    (3, ((2, 0), (1, 0), (1, 1), (3, 0)), ((4, 0), (1, 0), (1, 1), (3, 0))),
    (4, ((2, 0), (1, 0), (1, 1), (3, 0)), ((2, 0), (1, 0), (1, 1), (4, 0))),
])
def test_replacement_rewrites_one_symbol(kind, start, target):
    a, b, c, d = 1, 2, 3, 4
    pair = compile_replacement(ReplacementSpec(kind, a, b, c, d, U, X))
    sa, sb, sc, sd = (Symbol(*x) for x in start)
    system = InsertionSystem(10, tuple(MonomerType(m.quad, m.sign, 0.5) for m in pair),
                             Initiator((sa, sb), (sc, sd)))
    reach = enumerate_polymers(system, 10)
    assert not reach.truncated and len(reach.terminals) == 1
    (final,) = reach.terminals
    assert final.length == 4
    target_site = InsertionSite((Symbol(*target[0]), Symbol(*target[1])),
                                (Symbol(*target[2]), Symbol(*target[3])))
    sites = final.sites()
    assert target_site in sites
    # the by-products all expose the blocked symbol x
    others = [st for st in sites if st != target_site]
    assert all(X in (*st.left, *st.right) for st in others)
    assert not any(Symbol(X.base, True) in m.quad for m in pair)


# --- deterministic counter ----------------------------------------------------

def test_counter_golden_file_r1():
    assert serialize_system(gen_counter_system(1), ["counter system, r=1"]) == \
        (GOLDEN / "counter_r1.txt").read_text()


def test_counter_table_spot_checks_r1():
    # hand expansion of the table for r = 1: f_i(n) = n + 2i, x = s26
    got = quads(gen_counter_system(1))
    expected = [
        Q("s0* s17 s17 s1*", "+"),            # inner 1, b=0 c=1
        Q("s16 s1* s16* s26", "-"),           # inner 2, a=1 c=0
        Q("s26 s17* s1 s1", "-"),             # inner 2, a=1 b=0
        Q("s0* s26 s20 s16*", "+"),           # inner 3
        Q("s26 s20* s0 s18", "-"),
        Q("s18* s23 s26 s17*", "+"),          # inner 4, c=1
        Q("s1 s0* s23* s26", "-"),
        Q("s18* s26 s25 s0*", "+"),           # inner 5
        Q("s26 s25* s1 s1", "-"),
        Q("s1* s4 s26 s0*", "+"),             # middle 1
        Q("s2 s1* s4* s26", "-"),
        Q("s1* s26 s6 s2*", "+"),             # middle 2
        Q("s26 s6* s0 s0", "-"),
        Q("s0* s9 s26 s2*", "+"),             # middle 3
        Q("s1 s0* s9* s26", "-"),
        Q("s1* s26 s13 s1*", "+"),            # outer 1
        Q("s26 s13* s0 s10", "-"),
        Q("s10* s15* s26 s1*", "+"),          # outer 2
        Q("s10* s0* s15 s26", "-"),
        Q("s10* s26 s1 s10", "+"),            # outer 3
        Q("s0 s1* s0 s26", "-"),
        Q("s10* s26 s15 s0*", "+"),           # outer 4
        Q("s26 s15* s1 s0", "-"),
    ]
    missing = [e for e in expected if e not in got]
    assert not missing


@pytest.mark.parametrize("r", [1, 2, 3])
def test_counter_monomer_count_and_validity(r):
    system = gen_counter_system(r)
    assert system.size <= counter_monomer_bound(r) <= 39 * r * r
    assert validate_system(system).ok
    x = CounterParams(r, 12).x
    assert system.symbol_count == x + 1
    assert not any(Symbol(x, True) in m.quad for m in system.monomers)
    assert len({m.concentration for m in system.monomers}) == 1
    families = counter_monomers(r)
    assert set(families) == {f"inner.{i}" for i in range(1, 6)} | {f"middle.{i}" for i in (1, 2, 3)} \
        | {f"outer.{i}" for i in (1, 2, 3, 4)}


@pytest.mark.parametrize("r", [1, 2])
def test_counter_reachable_sites_and_mixed_form(r):
    system = gen_counter_system(r)
    g = site_graph(system)
    assert not g.truncated and find_cycle(g) is None
    assert all(len(system.types_at(k)) <= 1 for k in g.nodes)
    P = CounterParams(r, 12)
    forms = {InsertionSite((s(a), s(P.f(5, a))), (t(P.f(5, a)), t(a))).key for a in range(r + 1)}
    mixed = {k for k in g.nodes if classify_key(k) is SiteClass.MIXED}
    assert mixed and mixed <= forms


def test_counter_lengths_pinned():
    # frozen before the build from the step oracle; the site DP must reproduce them
    pinned = {1: 245, 2: 3_154_033, 3: 3_056_151_505_374_633}
    for r, length in pinned.items():
        assert counter_length(r) == length
        system = gen_counter_system(r)
        g = site_graph(system)
        assert summarize_sites(system, g).max_monomers[g.root] + 2 == length
    assert pinned[2] / pinned[1] > 8


def test_counter_r2_length_in_recurrence_window():
    r = 2
    n = counter_length(r)
    assert 2 ** (((r + 1) ** 3 - 2) / 2) <= n <= 2 ** ((r + 1) ** 3)


# --- fast counter ------------------------------------------------------------

def test_fast_golden_file_r1_matches_hand_expansion():
    text = (GOLDEN / "fast_r1.txt").read_text()
    assert serialize_system(gen_fast_system(1), ["fast system, r=1"]) == text
    # r = 1: f_i(n) = n + 2i, x = s8; the b+2 > r copies are absent
    assert quads(gen_fast_system(1)) == {
        Q("s3* s0* s0 s8", "-"), Q("s0* s8 s2 s3", "+"), Q("s3* s2* s0 s6", "-"),
        Q("s3* s1* s1 s8", "-"), Q("s0* s8 s3 s3", "+"), Q("s3* s3* s1 s6", "-"),
        Q("s3* s8 s7 s3", "+"), Q("s0* s7* s2 s8", "-"),
        Q("s3* s8 s1 s0", "+"), Q("s0* s1* s7 s8", "-"),
    }


@pytest.mark.parametrize("r", [0, 2, 4, -1])
def test_fast_rejects_even_r(r):
    with pytest.raises(ValueError):
        gen_fast_system(r)


@pytest.mark.parametrize("r", [1, 3, 5])
def test_fast_insertion_sets(r):
    system = gen_fast_system(r)
    part = insertion_sets(system)
    assert len(part) <= 20 * r
    assert max(part.sizes()) >= 2
    share = 1.0 / len(part)
    for group in part.sets:
        assert sum(system.monomers[m].concentration for m in group) == pytest.approx(share)
    assert sum(m.concentration for m in system.monomers) == pytest.approx(1.0)
    if r >= 3:
        assert max(part.sizes()) in (r, r + 1)


def test_fast_state_trace_lexicographic():
    r = 3
    system = gen_fast_system(r)
    g = site_graph(system)
    P = CounterParams(r, 3)
    state = {}
    for a in range(r + 1):
        for b in range(r + 1):
            fa, fb = P.f(b % 2, a), P.f(b % 2, b)
            state[InsertionSite((s(fa), s(fb)), (t(fb), t(fa))).key] = (a, b)
    assert set(state) <= set(g.nodes)
    succ = {}
    for (key, _), kids in g.edges.items():
        succ.setdefault(key, set()).update(kids)
    # the next states reachable from each state are strictly later in lexicographic order
    for key, ab in state.items():
        seen, stack, nxt = set(), list(succ.get(key, ())), set()
        while stack:
            k = stack.pop()
            if k in seen:
                continue
            seen.add(k)
            if k in state:
                nxt.add(state[k])
                continue
            stack.extend(succ.get(k, ()))
        assert all(n > ab for n in nxt)
        if ab != (r, r):
            assert nxt


# --- doubling ----------------------------------------------------------------

def test_doubling_system():
    d = gen_doubling_system()
    assert serialize_system(d, ["doubling system"]) == (GOLDEN / "doubling.txt").read_text()
    assert parse_system((GOLDEN / "doubling.txt").read_text()) == d
    assert [m.concentration for m in d.monomers] == [0.5, 0.5]
    assert d.types_at(d.initiator_key) == (0, 1)


@pytest.mark.parametrize("k", [1, 3, 6])
def test_doubling_balanced_schedule_has_logarithmic_depth(k):
    system = gen_doubling_system()
    events, live = [], 1
    # k rounds of the self-copying type at every site, then close every site
    for mid in [0] * k + [1]:
        for i in reversed(range(live)):
            events.append(TraceEvent(0.0, i, mid))
        live = 2 * live if mid == 0 else 0
    p = replay(system, events)
    assert p.length == 2 ** (k + 1) + 1 and is_terminal(system, p)
    report = sequence_stats(Trace(events, p, "terminal", 0.0, len(events), p.length), system)
    assert max(length for _, length, _, _ in report.rows) == k + 1
    assert report.lineages == 2 ** k
