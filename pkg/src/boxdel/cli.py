"""Command-line front end.

Exit codes: 0 success, 1 an invariant check failed, 2 usage error or
parameters out of range, 3 input/output error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .graphs import Graph, build_boxdel, build_boxdel_bruteforce, build_hasse
from .points import PointSet, read_points, sample_poissonised, sample_uniform, write_points
from .processes import (
    ParamsOutOfRange,
    RecursionAborted,
    check_suitable_pairs,
    default_cap,
    empty_box_census,
    interval_census_2d,
    suitable_pairs,
    sweep_exploration,
    verify_cover_claim,
)
from .seeding import rng_for
from .stats import (
    CliqueBudgetExceeded,
    EdgeClassPolicy,
    caro_wei_bound,
    classify_edges,
    degree_stats,
    dsatur_coloring,
    independent_set,
    max_clique_upto,
    total_triangles,
    triangles_per_vertex,
)

OK, FAILED, USAGE, IO_ERROR = 0, 1, 2, 3
_TAG_MARKS = 0x4D4B


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, n_list: bool = False) -> None:
    if n_list:
        p.add_argument("--n", type=_int_list, help="comma-separated n grid")
    else:
        p.add_argument("--n", type=int, default=None, help="number of points (or intensity)")
    p.add_argument("--d", type=int, default=None, help="dimension")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="master seed (default: $BOXDEL_SEED or 0)")
    p.add_argument("--in", dest="inp", default=None, help="input point file")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boxdel", description="Box-Delaunay graphs of random point sets.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="write a random point file")
    _common(p)
    p.add_argument("--poisson", action="store_true", help="Poisson number of points with intensity n")

    p = sub.add_parser("build", help="build a graph and write its edge list")
    _common(p)
    p.add_argument("--kind", choices=("boxdel", "hasse"), default="boxdel")
    p.add_argument("--orientation", type=_int_list, default=None, help="axis signs, e.g. 1,-1")
    p.add_argument("--oracle", action="store_true", help="use the brute-force builder")
    p.add_argument("--method", default="auto", help="builder for box-Delaunay graphs")

    p = sub.add_parser("stats", help="graph statistics")
    _common(p)
    p.add_argument("--kind", choices=("boxdel", "hasse"), default="boxdel")
    p.add_argument("--clique-cap", type=int, default=8)

    p = sub.add_parser("sweep", help="sweep exploration and cover-claim check")
    _common(p)
    p.add_argument("--cap", type=int, default=None, help="exploration cap m")

    p = sub.add_parser("census", help="empty and viable dyadic box census")
    _common(p)

    p = sub.add_parser("pairs", help="suitable-pairs search with transcript")
    _common(p)
    p.add_argument("--k", type=int, default=None, help="number of marked points (default n/8)")
    p.add_argument("--r", type=int, default=None, help="working dimension (default d)")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--Q", type=int, default=1)
    p.add_argument("--L", type=int, default=None, help="digit base override")

    p = sub.add_parser("intervals", help="planar interval census")
    _common(p)
    p.add_argument("--k", type=int, default=None, help="number of marked points (default n/4)")
    p.add_argument("--r", type=int, default=None)

    p = sub.add_parser("experiment", help="run the Monte Carlo harness")
    _common(p, n_list=True)
    p.add_argument("--config", default=None, help="JSON file mirroring ExperimentConfig")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--stats", default=None, help="comma-separated statistics to collect")
    p.add_argument("--builder", default=None)
    p.add_argument("--oracle-samples", type=int, default=None)
    p.add_argument("--timing", action="store_true", default=None)
    return parser


# helpers -----------------------------------------------------------------------


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("BOXDEL_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"BOXDEL_SEED is not an integer: {env!r}") from None


def _points(args, default_n: int = 100, default_d: int = 2, poisson: bool = False) -> PointSet:
    if args.inp:
        return read_points(args.inp, seed=_seed(args))
    n = default_n if args.n is None else args.n
    d = default_d if args.d is None else args.d
    if poisson:
        return sample_poissonised(n, d, _seed(args))
    return sample_uniform(n, d, _seed(args))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n"


def _plain(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def _rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def _graph(P: PointSet, kind: str, orientation=None, oracle: bool = False, method: str = "auto") -> Graph:
    if kind == "hasse":
        return build_hasse(P, orientation)
    if oracle:
        return build_boxdel_bruteforce(P)
    return build_boxdel(P, method)


def _marks(n: int, k: int, seed: int) -> np.ndarray:
    if not 1 <= k <= n:
        raise ParamsOutOfRange(f"need 1 <= k <= n, got k={k}, n={n}")
    return np.sort(rng_for(seed, _TAG_MARKS, n, k).choice(n, size=k, replace=False) + 1)


# subcommands ---------------------------------------------------------------------


def cmd_sample(args) -> int:
    P = _points(args, poisson=args.poisson)
    if args.out:
        write_points(P, args.out)
    else:
        buf = io.StringIO()
        buf.write(f"{P.d} {P.n}\n")
        for row in P.coords.tolist():
            buf.write(" ".join(f"{x:.17g}" for x in row) + "\n")
        sys.stdout.write(buf.getvalue())
    return OK


def cmd_build(args) -> int:
    P = _points(args)
    G = _graph(P, args.kind, args.orientation, args.oracle, args.method)
    if args.format == "json":
        text = _json({"n": G.n, "m": G.num_edges, "edges": G.edges().tolist()})
    elif args.format == "csv":
        text = _rows_csv([{"a": a, "b": b} for a, b in G.edges().tolist()]) or "a,b\n"
    else:
        text = G.to_text()
    _emit(text, args.out)
    return OK


def cmd_stats(args) -> int:
    P = _points(args)
    G = _graph(P, args.kind)
    ds = degree_stats(G)
    tri = triangles_per_vertex(G)
    out = {
        "n": G.n,
        "d": P.d,
        "edges": G.num_edges,
        "max_degree": ds.max_degree,
        "mean_degree": ds.mean_degree,
        "triangles": total_triangles(G),
        "max_triangles_vertex": int(tri.max()) if tri.size else 0,
        "dsatur_colors": dsatur_coloring(G).count,
        "greedy_is_size": independent_set(G).size,
        "caro_wei_bound": caro_wei_bound(G),
    }
    if P.n >= 3:
        cls = classify_edges(P, G, EdgeClassPolicy(P.d, P.n))
        out["far_edges"] = int(cls.far.shape[0])
        out["close_edges"] = int(cls.close.shape[0])
        out["max_far_edges_vertex"] = cls.max_far_per_vertex
    try:
        out["clique_number"] = max_clique_upto(G, args.clique_cap)
    except CliqueBudgetExceeded:
        out["clique_number"] = f">{args.clique_cap}"
    if args.format == "csv":
        _emit(_rows_csv([out]), args.out)
    else:
        _emit(_json(out), args.out)
    return OK


def cmd_sweep(args) -> int:
    n = 1000 if args.n is None else args.n
    P = _points(args, default_n=n, poisson=True)
    cap = default_cap(n) if args.cap is None else args.cap
    trace = sweep_exploration(P, cap)
    violations = verify_cover_claim(trace, P)
    out = {
        "intensity": n,
        "points": P.n,
        "d": P.d,
        "cap": cap,
        "cap_breach": trace.cap_breach,
        "witnesses": int(trace.witness_labels().size),
        "cover_violations": [int(v) for v in violations],
    }
    _emit(_json(out), args.out)
    return FAILED if violations else OK


def cmd_census(args) -> int:
    n = 10**4 if args.n is None else args.n
    P = _points(args, default_n=n, poisson=True)
    census = empty_box_census(P, n)
    rows = [
        {
            "weight": r.weight,
            "total": r.total,
            "empty": r.empty,
            "viable": r.viable,
            "shifted_empty": r.shifted_empty,
            "threshold": r.threshold,
            "over_threshold": r.over_threshold,
        }
        for r in census.rows
    ]
    bad = census.violations() or census.shift_mismatches()
    if args.format == "csv":
        _emit(_rows_csv(rows), args.out)
    else:
        out = {
            "intensity": n,
            "points": P.n,
            "d": P.d,
            "checked_limit": census.checked_limit,
            "violations": census.violations(),
            "shift_mismatches": census.shift_mismatches(),
            "rows": rows,
        }
        _emit(_json(out), args.out)
    return FAILED if bad else OK


def cmd_pairs(args) -> int:
    P = _points(args, default_n=4096, default_d=2)
    k = args.k if args.k is not None else max(1, P.n // 8)
    X = _marks(P.n, k, _seed(args))
    f = np.zeros(P.n, dtype=np.int64)
    if args.Q > 1:
        f = rng_for(_seed(args), _TAG_MARKS, P.n, args.Q).integers(0, args.Q, size=P.n)
    try:
        res = suitable_pairs(P, f, X, T=args.T, Q=args.Q, r=args.r, L=args.L)
    except RecursionAborted as exc:
        out = {
            "aborted": True,
            "stage": exc.stage,
            "dimension": exc.r,
            "found": exc.found,
            "needed": exc.needed,
            "transcript": [vars(s) for s in exc.transcript],
        }
        _emit(_json(out), args.out)
        return OK
    problems = check_suitable_pairs(P, f, X, res)
    out = res.to_dict()
    out["transcript"] = [vars(s) for s in res.transcript]
    out["aborted"] = False
    out["problems"] = problems
    _emit(_json(out), args.out)
    return FAILED if problems else OK


def cmd_intervals(args) -> int:
    P = _points(args, default_n=2**12, default_d=2)
    k = args.k if args.k is not None else max(1, P.n // 4)
    census = interval_census_2d(P, _marks(P.n, k, _seed(args)), r=args.r)
    if args.format == "csv":
        rows = [{"i": rec["i"], "score": rec["score"], **{f"I{l}": c for l, c in enumerate(rec["counts"])}} for rec in census.to_records()]
        _emit(_rows_csv(rows), args.out)
    else:
        out = {
            "n": census.n,
            "k": census.k,
            "r": census.r,
            "s": census.s,
            "t": census.t,
            "gamma": census.gamma,
            "multiset_sizes": census.multiset_sizes,
            "bounds": census.bounds,
            "base_bound_holds": census.base_bound_holds(),
            "bits": census.to_records(),
        }
        _emit(_json(out), args.out)
    return OK if census.base_bound_holds() else FAILED


def cmd_experiment(args) -> int:
    cfg = ex.ExperimentConfig.from_json(args.config) if args.config else ex.ExperimentConfig()
    seed = args.seed
    if seed is None and "BOXDEL_SEED" in os.environ:
        seed = _seed(args)
    cfg = cfg.override(
        d=args.d,
        n_grid=args.n,
        trials=args.trials,
        seed=seed,
        workers=args.workers,
        stats=args.stats.split(",") if args.stats else None,
        builder=args.builder,
        oracle_samples=args.oracle_samples,
        timing=args.timing,
    )
    cfg.validate()
    if args.out:
        if args.format == "json":
            cfg = cfg.override(json_path=args.out)
        else:
            cfg = cfg.override(csv_path=args.out)
    records, summary = ex.run_experiment(cfg)
    if not args.out and not cfg.csv_path and not cfg.json_path:
        if args.format == "json":
            if summary is None:
                raise ex.InsufficientGrid("a JSON summary needs at least 3 distinct n")
            sys.stdout.write(_json(summary))
        else:
            sys.stdout.write(ex.records_to_csv(records))
    elif args.out and args.format == "json" and summary is None:
        raise ex.InsufficientGrid("a JSON summary needs at least 3 distinct n")
    return OK


COMMANDS = {
    "sample": cmd_sample,
    "build": cmd_build,
    "stats": cmd_stats,
    "sweep": cmd_sweep,
    "census": cmd_census,
    "pairs": cmd_pairs,
    "intervals": cmd_intervals,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return USAGE
    except (ParamsOutOfRange, ex.InsufficientGrid, ValueError) as exc:
        print(f"boxdel: {exc}", file=sys.stderr)
        return USAGE
    except OSError as exc:
        print(f"boxdel: {exc}", file=sys.stderr)
        return IO_ERROR
    except ex.AuditMismatch as exc:
        print(f"boxdel: {exc}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())
