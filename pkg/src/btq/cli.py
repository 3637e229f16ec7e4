"""Command line: btq fundom | reduce | tabulate | bench | check.

Exit codes: 0 success, 1 internal failure (including a failed --verify),
2 invalid input, 3 genus limit exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import random
import statistics
import sys
import time
from pathlib import Path

from .bttree import TreeError, normalize_edge, normalize_vertex, parse_matrix, random_vertex
from .equiv import is_equivalent
from .field import FIELD_TABLE_ENV, FieldError, reset_table_cache
from .fundom import LimitExceeded, QuotientGraph, ReduceStats, edge_distance, fundamental_domain, reduce_edge, reduce_vertex
from .problem import ConfigError, Problem, build, load_config
from .tabulate import TabConfig, run_tabulation

log = logging.getLogger("btq")

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_LIMIT = 0, 1, 2, 3


class VerificationError(RuntimeError):
    pass


def _problem(path: str) -> Problem:
    cfg = load_config(path)
    return build(cfg)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def verify_graph(P: Problem, G: QuotientGraph) -> int:
    """Re-check every stored pairing: gamma lies in Gamma and moves outer onto inner."""
    ctx = P.context
    n = 0
    for pr in list(G.vertex_pairings) + list(G.edge_pairings) + list(G.boundary.values()):
        if not ctx.in_gamma(pr.gamma):
            raise VerificationError(f"pairing element for {pr.outer} has the wrong reduced norm")
        if ctx.act(pr.gamma, pr.outer) != pr.inner:
            raise VerificationError(f"pairing element does not map {pr.outer} to {pr.inner}")
        n += 1
    return n


# ---------------------------------------------------------------- commands


def cmd_fundom(args) -> int:
    P = _problem(args.config)
    max_genus = args.max_genus if args.max_genus is not None else P.config.options.max_genus
    try:
        G = fundamental_domain(P.context, max_genus=max_genus)
    except LimitExceeded as exc:
        print(f"btq: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    out = {"problem": P.describe(), "order": P.order.to_json(), "graph": G.to_json()}
    if args.verify:
        out["verified_pairings"] = verify_graph(P, G)
    if args.deterministic:
        out["graph"]["stats"]["time_ms"] = 0
    _write(args.out, _dumps(out))
    if args.dot:
        _write(args.dot, G.to_dot())
    print(f"vertices {G.n_vertices}  edges {G.n_edges}  genus {G.genus}", file=sys.stderr)
    return EXIT_OK


def _load_graph(P: Problem, path: str) -> QuotientGraph:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read graph {path}: {exc}") from exc
    if data.get("order") is not None and data["order"] != P.order.to_json():
        raise ConfigError("graph was computed for a different order than this config builds")
    G = QuotientGraph.from_json(data["graph"])
    if G.p != P.context.p:
        raise ConfigError("graph prime differs from the config prime")
    if not G.boundary:
        raise ConfigError("graph file has no boundary data")
    return G


def cmd_reduce(args) -> int:
    P = _problem(args.config)
    G = _load_graph(P, args.graph)
    ctx = P.context
    m = parse_matrix(args.matrix)
    stats = ReduceStats()
    if args.vertex:
        x = normalize_vertex(m, ctx.p)
        y, gamma = reduce_vertex(ctx, G, x, stats)
        dist = None
    else:
        x = normalize_edge(m, ctx.p)
        y, gamma = reduce_edge(ctx, G, x, stats)
        dist = edge_distance(x)
    out = {
        "input": x.matrix(),
        "reduced": y.matrix(),
        "gamma": gamma.to_json(),
        "gamma_quaternion": ctx.R.element(gamma.coords).to_json(),
        "lookups": stats.lookups,
        "steps": stats.steps,
    }
    if dist is not None:
        out["distance"] = dist
    if args.verify:
        ok = ctx.in_gamma(gamma) and ctx.act(gamma, x) == y
        w = is_equivalent(ctx, x, y)
        out["verified"] = bool(ok and w is not None and ctx.act(w, x) == y)
        if not out["verified"]:
            print(json.dumps(out, sort_keys=True))
            return EXIT_FAIL
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def cmd_tabulate(args) -> int:
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
            cfg = TabConfig.model_validate(raw)
        except Exception as exc:
            raise ConfigError(f"invalid tabulation config: {exc}") from exc
    else:
        cfg = TabConfig()
    updates = {
        "degrees": tuple(args.degrees) if args.degrees else None,
        "g_max": args.max_genus,
        "zeta_bound": args.zeta_bound,
        "field_table": args.field_table,
        "labels": args.labels,
        "output": args.out,
        "summary": args.summary,
        "jobs": args.jobs,
    }
    data = cfg.model_dump()
    data.update({k: v for k, v in updates.items() if v is not None})
    data["resume"] = cfg.resume or args.resume
    data["deterministic"] = cfg.deterministic or args.deterministic
    try:
        cfg = TabConfig.model_validate(data)
    except Exception as exc:
        raise ConfigError(str(exc)) from exc

    def progress(k: int, n: int, row: dict) -> None:
        log.info("%d/%d %s %s genus=%s", k, n, row["field"], row["status"], row["genus"])

    summary = run_tabulation(cfg, progress)
    counts = summary["counts"]
    print(f"computed {summary['computed']} of {summary['candidates']} data", file=sys.stderr)
    for deg in sorted(counts, key=int):
        print(f"degree {deg}: " + " ".join(str(c) for c in counts[deg]))
    if summary["check_failures"]:
        print(f"btq: {len(summary['check_failures'])} rows violate the area invariants", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def bench_rows(P: Problem, samples: int, distances: list[int], seed: int) -> list[dict]:
    """Per distance: timing quartiles of equivalence queries between two random vertices at that distance."""
    ctx = P.context
    rng = random.Random(seed)
    rows = []
    if samples <= 0:
        return rows
    for k in distances:
        times = []
        for _ in range(samples):
            u = random_vertex(ctx.p, k, rng)
            v = random_vertex(ctx.p, k, rng)
            t0 = time.perf_counter()
            is_equivalent(ctx, u, v)
            times.append(1000 * (time.perf_counter() - t0))
        if len(times) > 1:
            q1, med, q3 = statistics.quantiles(times, n=4, method="inclusive")
        else:
            q1 = med = q3 = times[0]
        rows.append({"distance": k, "min_ms": min(times), "q1": q1, "median": med, "q3": q3, "max_ms": max(times)})
    return rows


BENCH_COLUMNS = ["distance", "min_ms", "q1", "median", "q3", "max_ms"]


def cmd_bench(args) -> int:
    P = _problem(args.config)
    seed = args.seed if args.seed is not None else P.config.options.seed
    distances = [int(x) for x in args.distances.split(",") if x.strip()]
    rows = bench_rows(P, args.samples, distances, seed)
    fh = open(args.out, "w", newline="") if args.out and args.out != "-" else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (r[k] if k == "distance" else f"{r[k]:.3f}") for k in BENCH_COLUMNS})
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_check(args) -> int:
    P = _problem(args.config)
    info = P.describe()
    info["order_discriminant"] = repr(P.order.discriminant)
    if args.graph:
        G = _load_graph(P, args.graph)
        info["verified_pairings"] = verify_graph(P, G)
        info["genus"] = G.genus
    print(_dumps(info), end="")
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="btq", description="Quotients of Bruhat-Tits trees by quaternionic groups.")
    ap.add_argument("-v", "--verbose", action="store_true", help="progress logging on stderr")
    ap.add_argument("--field-tables", help=f"directory or file of extra field tables (also ${FIELD_TABLE_ENV})")
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fundom", help="compute a fundamental domain")
    f.add_argument("config")
    f.add_argument("--out", "-o", help="JSON output (default stdout)")
    f.add_argument("--dot", help="also write the quotient graph in DOT format")
    f.add_argument("--max-genus", type=int)
    f.add_argument("--verify", action="store_true", help="re-check every pairing element")
    f.add_argument("--deterministic", action="store_true", help="zero the timing fields")
    f.set_defaults(func=cmd_fundom)

    r = sub.add_parser("reduce", help="move an edge (or vertex) into a computed domain")
    r.add_argument("config")
    r.add_argument("graph", help="JSON written by 'btq fundom'")
    r.add_argument("matrix", help="'[[a,b],[c,d]]'")
    r.add_argument("--vertex", action="store_true", help="treat the matrix as a vertex")
    r.add_argument("--verify", action="store_true", help="confirm the result with an independent equivalence test")
    r.set_defaults(func=cmd_reduce)

    t = sub.add_parser("tabulate", help="tabulate curves of bounded genus")
    t.add_argument("--config", help="JSON tabulation config")
    t.add_argument("--degrees", type=int, nargs=2, metavar=("LO", "HI"))
    t.add_argument("--max-genus", type=int)
    t.add_argument("--zeta-bound", type=int)
    t.add_argument("--field-table")
    t.add_argument("--labels", nargs="+")
    t.add_argument("--out", "-o")
    t.add_argument("--summary")
    t.add_argument("--resume", action="store_true")
    t.add_argument("--jobs", type=int)
    t.add_argument("--deterministic", action="store_true", help="zero the timing fields")
    t.set_defaults(func=cmd_tabulate)

    b = sub.add_parser("bench", help="time equivalence queries by distance")
    b.add_argument("config")
    b.add_argument("--samples", type=int, default=100)
    b.add_argument("--distances", default="10,20,30,40,50,60")
    b.add_argument("--out", "-o", help="CSV output (default stdout)")
    b.add_argument("--seed", type=int)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("check", help="validate a config (and optionally a graph file)")
    c.add_argument("config")
    c.add_argument("--graph")
    c.set_defaults(func=cmd_check)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    if args.field_tables:
        import os

        os.environ[FIELD_TABLE_ENV] = args.field_tables
        reset_table_cache()
    try:
        return args.func(args)
    except (ConfigError, TreeError, FieldError) as exc:
        print(f"btq: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except VerificationError as exc:
        print(f"btq: verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
