"""Command-line front end: ``polyinsert <command> ...``.

Exit codes: 0 success, 1 verdict failure (e.g. not deterministic), 2 usage or
parse error.  Every file written with ``--out`` gets a sibling
``<file>.manifest.json``.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analyzer import TraceMismatch, sequence_stats
from .constructions import gen_counter_system, gen_doubling_system, gen_fast_system
from .enumerator import (
    DEFAULT_MAX_COUNT, DEFAULT_MAX_LEN, check_deterministic, check_growth_deterministic,
    enumerate_polymers, site_graph,
)
from .grammar import GrammarError, compile_grammar, parse_grammar
from .io import RunManifest, SystemParseError, load_system, manifest_path, serialize_system, sha256_file
from .kinetics import QUANTILES, SimConfig, Trace, read_trace_csv, simulate, trials

SEED_ENV = "INSERTION_SEED"


class UsageError(Exception):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _emit(args, text: str, inputs: Sequence[str] = (), seed: Optional[int] = None) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.write_text(text)
    manifest = RunManifest(
        command=args.command,
        arguments=list(args.argv),
        seed=seed,
        inputs={str(p): sha256_file(p) for p in inputs},
        outputs={str(out): sha256_file(out)},
    )
    manifest_path(out).write_text(manifest.to_json())


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_generate(args) -> int:
    if args.family == "doubling":
        system, header = gen_doubling_system(), ["doubling system"]
    else:
        if args.r is None:
            raise UsageError(f"generate {args.family} needs --r")
        gen = gen_counter_system if args.family == "counter" else gen_fast_system
        system, header = gen(args.r), [f"{args.family} system, r={args.r}"]
    _emit(args, serialize_system(system, header))
    return 0


def cmd_compile(args) -> int:
    compiled = compile_grammar(parse_grammar(Path(args.grammar).read_text()))
    header = ["compiled from " + Path(args.grammar).name, f"kappa {compiled.expression.kappa}"]
    header += [f"g {s} -> {t}" for s, t in sorted(compiled.expression.per_symbol.items())]
    _emit(args, serialize_system(compiled.system, header), [args.grammar])
    return 0


def cmd_enumerate(args) -> int:
    system = load_system(args.system)
    reach = enumerate_polymers(system, args.max_len, args.max_count, args.strategy)
    polys = sorted(reach.polymers, key=lambda p: (p.length, p.ids))
    rows = [(p.length, int(p in reach.terminals), str(p)) for p in polys]
    _emit(args, _csv(rows, ["length", "terminal", "polymer"]), [args.system])
    note = " (truncated)" if reach.truncated else ""
    print(f"{len(reach.polymers)} polymers, {len(reach.terminals)} terminal{note}", file=sys.stderr)
    return 0


def cmd_check(args) -> int:
    system = load_system(args.system)
    if args.property == "growth-det":
        v = check_growth_deterministic(system, args.max_count)
        status = "growth-deterministic" if v.ok else "not growth-deterministic"
        line = (f"{status}: {v.branching_sites} branching sites, {len(v.violations)} violations, "
                f"{'acyclic' if v.acyclic else 'cyclic'} site graph")
        if v.truncated:
            line += ", site bound reached"
        print(line)
        for key in v.violations[:10]:
            print(f"violation at site {key}")
        return 0 if v.ok else 1
    level = args.level
    if level == "auto":
        # the site-level proof needs every reachable site to accept at most one type
        graph = site_graph(system, args.max_count)
        level = "polymer" if any(len(system.types_at(k)) > 1 for k in graph.nodes) else "site"
    v = check_deterministic(system, args.max_len, args.max_count, level=level)
    print(v)
    if v.witness is not None and not v.deterministic:
        witnesses = v.witness if isinstance(v.witness, tuple) and hasattr(v.witness[0], "ids") else (v.witness,)
        for w in witnesses:
            print(f"witness: {w}")
    return 0 if v.deterministic else 1


def _config(args, seed, record=True) -> SimConfig:
    return SimConfig(seed=seed, target_length=args.target_length, max_events=args.max_events,
                     max_time=args.max_time, record_trace=record)


def cmd_simulate(args) -> int:
    system = load_system(args.system)
    seed = _seed(args)
    tr = simulate(system, _config(args, seed))
    _emit(args, tr.to_csv(), [args.system], seed)
    print(f"outcome {tr.outcome}, length {tr.length}, events {tr.n_events}, time {tr.time:.9f}",
          file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    system = load_system(args.system)
    seed = _seed(args)
    targets = args.target_length or [None]
    header = ["system", "target", "trials", "completed", "mean", "variance", "median"]
    header += [f"q{int(q * 100):02d}" for q in QUANTILES] + ["tail_3x_median"]
    rows = []
    name = Path(args.system).name
    for target in targets:
        cfg = SimConfig(seed=seed, target_length=target, max_events=args.max_events,
                        max_time=args.max_time, record_trace=False)
        st = trials(system, cfg, args.trials, jobs=args.jobs, method=args.method)
        fmt = lambda v: "" if v is None else f"{v:.9f}"
        rows.append([name, target if target is not None else "terminal", st.n, st.completed,
                     fmt(st.mean), fmt(st.variance), fmt(st.median)]
                    + [fmt(st.quantiles[q]) for q in QUANTILES] + [fmt(st.tail_fraction(3.0))])
    _emit(args, _csv(rows, header), [args.system], seed)
    return 0


def cmd_analyze(args) -> int:
    system = load_system(args.system)
    events = read_trace_csv(Path(args.trace).read_text())
    report = sequence_stats(Trace(events, None, "replayed", 0.0, len(events), len(events) + 2), system)
    _emit(args, report.to_csv(), [args.system, args.trace])
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyinsert", description="Insertion-system toolkit.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def out(p):
        p.add_argument("--out", help="write output to this file (plus a manifest)")

    def bounds(p):
        p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)
        p.add_argument("--max-count", type=int, default=DEFAULT_MAX_COUNT)

    def stop(p):
        p.add_argument("--seed", type=int, help=f"master seed (fallback: ${SEED_ENV}, then 0)")
        p.add_argument("--max-events", type=int)
        p.add_argument("--max-time", type=float)

    p = sub.add_parser("generate", help="emit a constructed system file")
    p.add_argument("family", choices=["counter", "fast", "doubling"])
    p.add_argument("--r", type=int)
    out(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("compile-grammar", help="compile a context-free grammar file")
    p.add_argument("grammar")
    out(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("enumerate", help="list constructible polymers as CSV")
    p.add_argument("system")
    bounds(p)
    p.add_argument("--strategy", choices=["full", "leftmost"], default="full")
    out(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("check", help="determinism verdicts")
    p.add_argument("property", choices=["det", "growth-det"])
    p.add_argument("system")
    bounds(p)
    p.add_argument("--level", choices=["auto", "site", "polymer"], default="auto")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="one stochastic run; trace CSV")
    p.add_argument("system")
    p.add_argument("--target-length", type=int)
    stop(p)
    out(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="seeded trials; stats CSV")
    p.add_argument("system")
    p.add_argument("--target-length", type=int, nargs="+")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--method", choices=["gillespie", "lineage"], default="gillespie")
    stop(p)
    out(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze", help="site classes and lineage statistics of a trace")
    p.add_argument("system")
    p.add_argument("trace")
    out(p)
    p.set_defaults(func=cmd_analyze)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        return args.func(args)
    except (UsageError, SystemParseError, GrammarError, TraceMismatch, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
