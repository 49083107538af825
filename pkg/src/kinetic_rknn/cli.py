"""Command-line front end.

Subcommands: ``gen`` (random datasets), ``build`` (static graph + neighbor
table), ``query`` (reverse-kNN queries, static or kinetic), ``simulate``
(kinetic run with event report and statistics), ``validate`` (oracle
comparison suite) and ``bench`` (micro-benchmarks).

Result files are byte-deterministic for identical inputs and flags; timings
go to the statistics stream (stdout key/value rows or stderr), never into
result files.  Exit codes: 0 success, 1 usage, 2 parse error, 3 validation
mismatch, 4 runtime error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .cone_geometry import build_cone_family
from .dataset import (
    Dataset,
    generate_dataset,
    load_dataset,
    load_queries,
    write_dataset,
)
from .errors import (
    InvalidInputError,
    InvalidParameterError,
    KineticRknnError,
    ParseError,
    TimeTravelError,
)
from .kinetic_engine import initialize
from .ksyg_knn import all_knn, build_ksyg, knng_subgraph_check
from .oracle import brute_knn, brute_ksyg, brute_rknn
from .range_tree import build_range_tree, first_k
from .rknn_query import rknn_kinetic, rknn_static
from .trajectories import positions_at

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_MISMATCH = 3
EXIT_RUNTIME = 4

ORACLE_POINT_LIMIT = 4096  # brute-force validation stays desk-scale


class UsageError(Exception):
    pass


class MismatchError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _stat(key, value):
    print(f"{key}\t{value}")


def _build_static(ds: Dataset, k: int, t: float):
    family = build_cone_family(ds.dimension)
    positions = positions_at(ds.trajectories, t)
    indexed = list(enumerate(positions))
    trees = [build_range_tree(indexed, family, l) for l in range(family.cone_count)]
    graph = build_ksyg(positions, k, family, trees=trees)
    table = all_knn(graph, positions, k)
    return family, positions, trees, graph, table


def _check_k(k: int, n: int):
    if not 1 <= k <= n - 1:
        raise UsageError(f"k must be in [1, n-1]; got k={k} for n={n}")


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_gen(args) -> int:
    ds = generate_dataset(args.n, args.d, args.s, args.seed, k=args.k)
    write_dataset(ds, args.out)
    _stat("written", args.out)
    _stat("n", ds.n)
    _stat("dimension", ds.dimension)
    _stat("degree", ds.degree)
    _stat("k", ds.default_k)
    return EXIT_OK


def cmd_build(args) -> int:
    ds = load_dataset(args.input)
    k = args.k if args.k is not None else ds.default_k
    _check_k(k, ds.n)
    t0 = time.perf_counter()
    _family, positions, _trees, graph, table = _build_static(ds, k, args.time)
    elapsed = time.perf_counter() - t0
    lines = []
    for a, b in graph.edges():
        lines.append(f"edge\t{a}\t{b}")
    for p in range(ds.n):
        ids = ",".join(str(nid) for nid, _ in table.rows[p])
        dists = ",".join(repr(dist) for _, dist in table.rows[p])
        lines.append(f"knn\t{p}\t{ids}\t{dists}")
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _stat("edges", graph.edge_count)
    _stat("points", ds.n)
    _stat("k", k)
    _stat("build_seconds", f"{elapsed:.6f}")
    return EXIT_OK


def cmd_query(args) -> int:
    ds = load_dataset(args.input)
    queries = load_queries(args.queries, ds.dimension)
    k_default = args.k if args.k is not None else ds.default_k
    records = []
    mismatches = 0
    t_total = 0.0
    if args.kinetic:
        _check_k(k_default, ds.n)
        family = build_cone_family(ds.dimension)
        state = initialize(ds.trajectories, k_default, family, args.time)
        for i, q in enumerate(queries):
            if q.k != state.k:
                raise InvalidParameterError(
                    f"query {i}: kinetic state maintains k={state.k}, query asks k={q.k}"
                )
            t0 = time.perf_counter()
            ans = rknn_kinetic(state, q.point, q.k, q.time)
            t_total += time.perf_counter() - t0
            records.append((i, q, ans))
            if args.validate:
                ref = brute_rknn(state.current_positions(), q.point, q.k)
                if ans.members != ref.members:
                    mismatches += 1
    else:
        by_time: dict[float, tuple] = {}
        for i, q in enumerate(queries):
            _check_k(q.k, ds.n)
            if q.time not in by_time:
                positions = positions_at(ds.trajectories, q.time)
                family = build_cone_family(ds.dimension)
                indexed = list(enumerate(positions))
                trees = [
                    build_range_tree(indexed, family, l)
                    for l in range(family.cone_count)
                ]
                by_time[q.time] = (positions, trees, {})
            positions, trees, tables = by_time[q.time]
            if q.k not in tables:
                graph = build_ksyg(positions, q.k, family, trees=trees)
                tables[q.k] = all_knn(graph, positions, q.k)
            t0 = time.perf_counter()
            ans = rknn_static(positions, tables[q.k], trees, q.point, q.k, time=q.time)
            t_total += time.perf_counter() - t0
            records.append((i, q, ans))
            if args.validate:
                ref = brute_rknn(positions, q.point, q.k)
                if ans.members != ref.members:
                    mismatches += 1
    lines = []
    for i, q, ans in records:
        members = ",".join(str(m) for m in ans.members)
        flags = "coincident" if ans.coincident else "-"
        lines.append(f"{i}\t{q.time!r}\t{q.k}\t{members}\t{ans.candidates_examined}\t{flags}")
    payload = ("\n".join(lines) + "\n") if lines else ""
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    print(f"queries\t{len(records)}", file=sys.stderr)
    print(f"query_seconds_total\t{t_total:.6f}", file=sys.stderr)
    if args.validate:
        print(f"mismatches\t{mismatches}", file=sys.stderr)
        if mismatches:
            raise MismatchError(f"{mismatches} query answers disagree with brute force")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if not args.t_from < args.t_to:
        raise UsageError("--from must be strictly less than --to")
    ds = load_dataset(args.input)
    k = args.k if args.k is not None else ds.default_k
    _check_k(k, ds.n)
    family = build_cone_family(ds.dimension)
    state = initialize(ds.trajectories, k, family, args.t_from)
    reports = []
    mismatches = 0
    if args.sample and args.sample > 0:
        if ds.n > ORACLE_POINT_LIMIT:
            raise UsageError(
                f"--sample uses brute-force oracles, limited to n <= {ORACLE_POINT_LIMIT}"
            )
        for t in np.linspace(args.t_from, args.t_to, args.sample):
            reports.extend(state.advance(float(t)))
            upcoming = state.peek_event_time()
            if upcoming is not None and upcoming <= state.time + 1e-6:
                # an event within root-refinement tolerance of the sample
                # makes the instantaneous order ambiguous; check just past it
                reports.extend(state.advance(min(upcoming + 1e-6, args.t_to)))
            positions = state.current_positions()
            if state.candidate_snapshot() != brute_ksyg(positions, k, family).candidates:
                mismatches += 1
                continue
            ref = brute_knn(positions, k)
            mine = state.knn_snapshot()
            if any(
                mine.neighbor_ids(p) != ref.neighbor_ids(p) for p in range(ds.n)
            ):
                mismatches += 1
    else:
        reports.extend(state.advance(args.t_to))
    if args.report:
        lines = []
        for r in reports:
            added = ";".join(f"{a}-{b}" for a, b in r.edges_added)
            removed = ";".join(f"{a}-{b}" for a, b in r.edges_removed)
            lines.append(
                f"{r.time!r}\t{r.kind}\t{r.line_index}\t{r.a}\t{r.b}\t{added}\t{removed}"
            )
        Path(args.report).write_text(
            ("\n".join(lines) + "\n") if lines else "", encoding="utf-8"
        )
        from .plotting import render_event_timeline

        fig_path = Path(args.report).with_suffix(".png")
        render_event_timeline(reports, state.current_positions(), fig_path)
        _stat("report", args.report)
        _stat("figure", fig_path)
    st = state.stats
    _stat("events", st.events)
    _stat("u_swap_updates", st.u_role_updates)
    _stat("x_swap_updates", st.x_role_updates)
    _stat("knn_swaps", st.knn_swaps)
    _stat("chi_k", st.chi_k)
    _stat("touched_mean", f"{st.touched_mean:.2f}")
    _stat("touched_max", st.touched_max)
    if args.sample and args.sample > 0:
        _stat("samples", args.sample)
        _stat("mismatches", mismatches)
        if mismatches:
            raise MismatchError(f"{mismatches} oracle mismatches during sampling")
    return EXIT_OK


def _validate_one(label: str, ds: Dataset, k: int, rng: np.random.Generator):
    """Run the property suite on one dataset; returns list of (name, ok, info)."""
    family = build_cone_family(ds.dimension)
    positions = positions_at(ds.trajectories, 0.0)
    results = []
    indexed = list(enumerate(positions))
    trees = [build_range_tree(indexed, family, l) for l in range(family.cone_count)]
    graph = build_ksyg(positions, k, family, trees=trees)
    ref_graph = brute_ksyg(positions, k, family)
    results.append(("ksyg_matches_brute", graph.candidates == ref_graph.candidates, ""))
    table = all_knn(graph, positions, k)
    ref_table = brute_knn(positions, k)
    results.append(("all_knn_matches_brute", table.rows == ref_table.rows, ""))
    results.append(("knng_subgraph", knng_subgraph_check(graph, positions, k), ""))
    results.append(
        ("edge_bound", graph.edge_count <= family.cone_count * k * ds.n, "")
    )
    ok = True
    for _ in range(30):
        apex = positions[int(rng.integers(0, ds.n))] + rng.normal(scale=0.2, size=ds.dimension)
        l = int(rng.integers(0, family.cone_count))
        got = first_k(trees[l], apex, k).point_ids
        u = family.u_coords_many(l, positions)
        x = family.axis_coords_many(l, positions)
        ua = family.u_coords_many(l, apex[None])[0]
        members = [q for q in range(ds.n) if np.all(u[q] >= ua)]
        members.sort(key=lambda q: (x[q], q))
        if list(got) != members[:k]:
            ok = False
            break
    results.append(("first_k_matches_scan", ok, ""))
    ok = True
    for _ in range(30):
        q = rng.uniform(-1.5, 1.5, size=ds.dimension)
        ans = rknn_static(positions, table, trees, q, k)
        ref = brute_rknn(positions, q, k)
        if ans.members != ref.members or len(ans.members) > family.cone_count * k:
            ok = False
            break
    results.append(("rknn_matches_brute", ok, ""))
    if not ds.is_static and ds.n <= 256:
        state = initialize(ds.trajectories, k, family, 0.0)
        ok = True
        for t in np.linspace(0.0, 0.25, 6):
            state.advance(float(t))
            pts = state.current_positions()
            if state.candidate_snapshot() != brute_ksyg(pts, k, family).candidates:
                ok = False
                break
            ref = brute_knn(pts, k)
            mine = state.knn_snapshot()
            if any(mine.neighbor_ids(p) != ref.neighbor_ids(p) for p in range(ds.n)):
                ok = False
                break
        limit = len(state.lines) * max(1, state.s_max) * ds.n * (ds.n - 1) // 2
        results.append(("kinetic_matches_static", ok, ""))
        results.append(("event_count_envelope", state.stats.events <= limit, ""))
    return results


def cmd_validate(args) -> int:
    ds = load_dataset(args.input)
    if ds.n > ORACLE_POINT_LIMIT:
        raise UsageError(f"validate is limited to n <= {ORACLE_POINT_LIMIT} points")
    k = args.k if args.k is not None else ds.default_k
    _check_k(k, ds.n)
    suites = [("input", ds, k)]
    for seed in range(args.seeds):
        gen = generate_dataset(24, 2, 1, seed=seed, k=min(3, 23))
        suites.append((f"seed{seed}", gen, gen.default_k))
    first_failure = None
    for label, data, kk in suites:
        rng = np.random.default_rng(17)
        for name, ok, _info in _validate_one(label, data, kk, rng):
            print(f"check\t{label}\t{name}\t{'pass' if ok else 'FAIL'}")
            if not ok and first_failure is None:
                first_failure = (label, data.n, kk, name)
    if first_failure is not None:
        label, n, kk, name = first_failure
        print(
            f"first failure: dataset={label} n={n} k={kk} check={name}",
            file=sys.stderr,
        )
        raise MismatchError(f"validation failed: {name} on {label}")
    return EXIT_OK


def cmd_bench(args) -> int:
    ds = load_dataset(args.input)
    k = args.k if args.k is not None else ds.default_k
    _check_k(k, ds.n)
    family = build_cone_family(ds.dimension)
    rows = []
    positions = positions_at(ds.trajectories, 0.0)
    indexed = list(enumerate(positions))
    t0 = time.perf_counter()
    for _ in range(args.repeat):
        trees = [build_range_tree(indexed, family, l) for l in range(family.cone_count)]
        graph = build_ksyg(positions, k, family, trees=trees)
        table = all_knn(graph, positions, k)
    build_s = (time.perf_counter() - t0) / args.repeat
    rows.append(("static_build", "seconds", f"{build_s:.6f}"))
    rows.append(("static_build", "edges", str(graph.edge_count)))
    if ds.n <= ORACLE_POINT_LIMIT:
        t0 = time.perf_counter()
        for _ in range(args.repeat):
            brute_ksyg(positions, k, family)
        rows.append(
            ("brute_ksyg", "seconds", f"{(time.perf_counter() - t0) / args.repeat:.6f}")
        )
    rng = np.random.default_rng(23)
    queries = rng.uniform(-1.5, 1.5, size=(100, ds.dimension))
    t0 = time.perf_counter()
    for q in queries:
        rknn_static(positions, table, trees, q, k)
    rows.append(("static_query", "seconds_per_query",
                 f"{(time.perf_counter() - t0) / len(queries):.6f}"))
    if not ds.is_static:
        t0 = time.perf_counter()
        state = initialize(ds.trajectories, k, family, 0.0)
        rows.append(("kinetic_init", "seconds", f"{time.perf_counter() - t0:.6f}"))
        t0 = time.perf_counter()
        state.advance(float("inf"), max_events=args.events)
        dt = time.perf_counter() - t0
        st = state.stats
        processed = st.events + st.knn_swaps
        rows.append(("kinetic_events", "processed", str(processed)))
        rows.append(("kinetic_events", "seconds", f"{dt:.6f}"))
        rows.append(("kinetic_events", "touched_mean", f"{st.touched_mean:.2f}"))
        rows.append(("kinetic_events", "touched_max", str(st.touched_max)))
        rows.append(("kinetic_events", "chi_k", str(st.chi_k)))
    for phase, metric, value in rows:
        print(f"{phase}\t{metric}\t{value}")
    if args.out:
        Path(args.out).write_text(
            "\n".join(f"{p}\t{m}\t{v}" for p, m, v in rows) + "\n", encoding="utf-8"
        )
        from .plotting import render_bench_table

        fig_path = Path(args.out).with_suffix(".png")
        render_bench_table(rows, fig_path)
        print(f"figure\t{fig_path}")
    return EXIT_OK


# ----------------------------------------------------------------------
# wiring
# ----------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="kinetic-rknn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="static build: graph edges and kNN table")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--time", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="answer reverse-kNN queries")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--time", type=float, default=0.0,
                   help="kinetic start time (static mode uses each query's own time)")
    p.add_argument("--queries", required=True)
    p.add_argument("--kinetic", action="store_true")
    p.add_argument("--validate", action="store_true",
                   help="cross-check every answer against brute force")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("simulate", help="run the kinetic engine over a time window")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--from", dest="t_from", type=float, required=True)
    p.add_argument("--to", dest="t_to", type=float, required=True)
    p.add_argument("--sample", type=int, default=0,
                   help="cross-check against brute force at N evenly spaced times")
    p.add_argument("--report", default=None,
                   help="write the event stream here (figure lands alongside)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="run the oracle comparison suite")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seeds", type=int, default=0,
                   help="also validate this many generated datasets")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="micro-benchmarks")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--events", type=int, default=2000,
                   help="kinetic event budget for the per-event cost measurement")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except MismatchError as exc:
        print(f"validation mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (TimeTravelError, InvalidParameterError, InvalidInputError, KineticRknnError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
