"""Monte Carlo trials, edge-count references and scaling summaries."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from .graphs import build_boxdel, build_boxdel_bruteforce, build_hasse
from .points import sample_poissonised, sample_uniform
from .processes.census import empty_box_census
from .seeding import derive_seed, rng_for
from .stats import (
    EdgeClassPolicy,
    caro_wei_bound,
    classify_edges,
    degree_stats,
    dsatur_coloring,
    independent_set,
    triangles_per_vertex,
)

SUMMARY_SCHEMA = "boxdel.scaling/1"
EULER_GAMMA = 0.5772156649015329
_TAG_AUDIT = 0x415544
_TAG_ORACLE = 0x4F5243
_TAG_BATCH = 0x424154

CSV_COLUMNS = (
    "n",
    "d",
    "trial",
    "seed",
    "edges",
    "max_degree",
    "mean_degree",
    "max_triangles_vertex",
    "max_far_edges_vertex",
    "dsatur_colors",
    "greedy_is_size",
    "caro_wei_bound",
    "census_violations",
    "wall_ms",
)

BUILDERS = ("auto", "brute", "fast2d", "grid2d", "sweep", "path", "hasse")
ALL_STATS = ("degrees", "triangles", "far", "dsatur", "greedy_is", "caro_wei", "census")


# reference expectations ------------------------------------------------------


def expected_edges_leading(n: int, d: int) -> float:
    """Leading-order expected edge count.

    ``C(n,2) 2^d int_0^1 (1-u)^(n-2) (ln 1/u)^(d-1) / (d-1)! du``, evaluated
    after substituting ``u = exp(-s)`` so the integrand is a smooth bump near
    ``s = ln n``.
    """
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    lg = math.lgamma(d)

    def g(s: float) -> float:
        if s <= 0.0:
            return 0.0
        logv = (n - 2) * math.log1p(-math.exp(-s)) - s - lg
        if d > 1:
            logv += (d - 1) * math.log(s)
        return math.exp(logv)

    a = math.log(n)
    cuts = [0.0, max(a - 10.0, 0.0) / 2, max(a - 10.0, 0.0), a, a + 5.0, a + 40.0]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi > lo:
            total += integrate.quad(g, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)[0]
    total += integrate.quad(g, cuts[-1], np.inf, epsabs=0.0, epsrel=1e-11, limit=200)[0]
    return math.comb(n, 2) * 2.0**d * total


def expected_edges_oracle(n: int, d: int, samples: int = 10**6, seed: int = 0, chunk: int = 10**6) -> tuple[float, float]:
    """Monte Carlo estimate of the exact expected edge count, with its standard error.

    A pair is adjacent iff none of the other ``n - 2`` points falls in its
    rectangle, so ``E|E| = C(n,2) E[(1 - prod_k |U_k - V_k|)^(n-2)]``.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if n == 2:
        return 1.0, 0.0
    if samples < 10**4:
        raise ValueError("need at least 10^4 samples")
    rng = rng_for(seed, _TAG_ORACLE, n, d)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        uv = rng.random((size, 2, d))  # one draw per chunk keeps the stream chunk-independent
        vol = np.prod(np.abs(uv[:, 0] - uv[:, 1]), axis=1)
        val = np.exp((n - 2) * np.log1p(-vol))
        total += float(val.sum())
        total_sq += float((val * val).sum())
        done += size
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    pairs = math.comb(n, 2)
    return pairs * mean, pairs * math.sqrt(var / samples)


def batch_uniform_points(n: int, d: int, trials: int, seed: int) -> np.ndarray:
    """``trials`` independent uniform samples as one ``(trials, n, d)`` array."""
    return rng_for(seed, _TAG_BATCH, n, d).random((trials, n, d))


def batch_edge_counts(xs: np.ndarray) -> np.ndarray:
    """Box-Delaunay edge count of every sample in a ``(trials, n, d)`` batch.

    Pairs are tested directly: ``(a, b)`` is an edge iff no third point lies
    strictly inside their rectangle.  Meant for small ``n`` and many trials.
    """
    trials, n, _ = xs.shape
    counts = np.zeros(trials, dtype=np.int64)
    for a in range(n):
        for b in range(a + 1, n):
            lo = np.minimum(xs[:, a], xs[:, b])[:, None, :]
            hi = np.maximum(xs[:, a], xs[:, b])[:, None, :]
            inside = np.all((xs > lo) & (xs < hi), axis=2)
            counts += ~inside.any(axis=1)
    return counts


# configuration and records ----------------------------------------------------


@dataclass
class ExperimentConfig:
    d: int = 2
    n_grid: list = field(default_factory=lambda: [64, 128, 256])
    trials: int = 10
    seed: int = 0
    stats: list = field(default_factory=lambda: list(ALL_STATS))
    builder: str = "auto"
    poissonised: bool = False
    audit_fraction: float = 0.01
    audit_max_n: int = 200
    timing: bool = False
    workers: int = 1
    csv_path: str | None = None
    json_path: str | None = None
    oracle_samples: int = 0

    def __post_init__(self):
        self.n_grid = [int(v) for v in self.n_grid]
        self.stats = list(self.stats)
        self.validate()

    def validate(self) -> None:
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n grid must be non-empty and strictly increasing")
        if self.n_grid[0] < 0:
            raise ValueError("n must be non-negative")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.builder not in BUILDERS:
            raise ValueError(f"unknown builder {self.builder!r}")
        unknown = set(self.stats) - set(ALL_STATS)
        if unknown:
            raise ValueError(f"unknown statistics: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def override(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


@dataclass(frozen=True)
class TrialRecord:
    n: int
    d: int
    trial: int
    seed: int
    edges: int
    max_degree: int | None = None
    mean_degree: float | None = None
    max_triangles_vertex: int | None = None
    max_far_edges_vertex: int | None = None
    dsatur_colors: int | None = None
    greedy_is_size: int | None = None
    caro_wei_bound: float | None = None
    census_violations: int | None = None
    wall_ms: float | None = None


class AuditMismatch(AssertionError):
    """The fast builder disagreed with the brute-force builder."""


def trial_seed(master: int, n: int, trial: int) -> int:
    return derive_seed(master, n, trial)


def audited(master: int, n: int, trial: int, fraction: float, max_n: int) -> bool:
    """Deterministic selection of roughly ``fraction`` of the trials with ``n <= max_n``."""
    if n > max_n or fraction <= 0:
        return False
    u = derive_seed(master, _TAG_AUDIT, n, trial) / 2.0**64
    return u < fraction


def run_trial(cfg: ExperimentConfig, n: int, trial: int) -> TrialRecord:
    start = time.perf_counter()
    seed = trial_seed(cfg.seed, n, trial)
    P = sample_poissonised(n, cfg.d, seed) if cfg.poissonised else sample_uniform(n, cfg.d, seed)
    if cfg.builder == "hasse":
        G = build_hasse(P)
    else:
        G = build_boxdel(P, cfg.builder)
    if cfg.builder != "hasse" and audited(cfg.seed, n, trial, cfg.audit_fraction, cfg.audit_max_n):
        if build_boxdel_bruteforce(P) != G:
            raise AuditMismatch(f"builder mismatch at n={n}, trial={trial}, seed={seed}")
    want = set(cfg.stats)
    out: dict = {"n": n, "d": cfg.d, "trial": trial, "seed": seed, "edges": G.num_edges}
    if "degrees" in want:
        ds = degree_stats(G)
        out["max_degree"] = ds.max_degree
        out["mean_degree"] = ds.mean_degree
    if "triangles" in want:
        tri = triangles_per_vertex(G)
        out["max_triangles_vertex"] = int(tri.max()) if tri.size else 0
    if "far" in want and n >= 3:
        out["max_far_edges_vertex"] = classify_edges(P, G, EdgeClassPolicy(cfg.d, n)).max_far_per_vertex
    if "dsatur" in want:
        out["dsatur_colors"] = dsatur_coloring(G).count
    if "greedy_is" in want:
        out["greedy_is_size"] = independent_set(G, "min-degree-greedy").size
    if "caro_wei" in want:
        out["caro_wei_bound"] = caro_wei_bound(G)
    if "census" in want and n >= 3:
        out["census_violations"] = len(empty_box_census(P, n).violations())
    if cfg.timing:
        out["wall_ms"] = (time.perf_counter() - start) * 1000.0
    return TrialRecord(**out)


def _run_one(args):
    cfg, n, trial = args
    return run_trial(cfg, n, trial)


def run_trials(cfg: ExperimentConfig) -> list[TrialRecord]:
    """All ``(n, trial)`` combinations of ``cfg``, sorted by ``(n, trial)``."""
    jobs = [(cfg, n, t) for n in cfg.n_grid for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        records = [_run_one(job) for job in jobs]
    return sorted(records, key=lambda r: (r.n, r.trial))


# serialization ---------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(records: Iterable[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in records:
        row = asdict(rec)
        w.writerow([_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def emit_csv(records: Iterable[TrialRecord], path: str | Path) -> None:
    Path(path).write_text(records_to_csv(records))


_FLOAT_COLUMNS = {"mean_degree", "caro_wei_bound", "wall_ms"}


def parse_csv(text: str) -> list[TrialRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError("unexpected CSV header")
    out = []
    for row in reader:
        vals = {}
        for c in CSV_COLUMNS:
            cell = row[c]
            vals[c] = None if cell == "" else float(cell) if c in _FLOAT_COLUMNS else int(cell)
        out.append(TrialRecord(**vals))
    return out


def read_csv(path: str | Path) -> list[TrialRecord]:
    return parse_csv(Path(path).read_text())


def emit_json(summary: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


# scaling summary ---------------------------------------------------------------


class InsufficientGrid(ValueError):
    """Scaling summaries need records at three or more sizes."""


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return math.nan, math.nan
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else math.nan
    return float(arr.mean()), se


def scaling_report(records: Sequence[TrialRecord], oracle_samples: int = 0, oracle_seed: int = 0) -> dict:
    """Per-size means and normalized ratios.

    Ratios use natural logarithms: max degree over ``(ln n)^(d-1)``, mean
    degree over ``2^d (ln n)^(d-1) / (d-1)!``, DSatur colours times
    ``ln ln n / (ln n)^(d-1)`` and independent-set size times
    ``(ln n)^(d-1) / (n ln ln n)``.  With ``oracle_samples > 0`` each row also
    carries the Monte Carlo expected edge count and whether the measured
    mean lies within three combined standard errors of it.
    """
    dims = {r.d for r in records}
    if len(dims) > 1:
        raise ValueError("records mix dimensions")
    sizes = sorted({r.n for r in records})
    if len(sizes) < 3:
        raise InsufficientGrid(f"need at least 3 distinct n, got {len(sizes)}")
    d = dims.pop()
    rows = []
    for n in sizes:
        group = [r for r in records if r.n == n]
        L = math.log(n)
        LL = math.log(L) if L > 1 else math.nan
        scale = L ** (d - 1)
        mean_e, se_e = _mean_se([r.edges for r in group])
        row = {"n": n, "trials": len(group), "mean_edges": mean_e, "se_edges": se_e}
        lead = expected_edges_leading(n, d) if n >= 2 else math.nan
        row["leading_edges"] = lead
        row["ratio_to_leading"] = mean_e / lead if lead else math.nan
        if oracle_samples > 0 and n >= 2:
            est, se = expected_edges_oracle(n, d, oracle_samples, oracle_seed)
            row["oracle_edges"] = est
            row["oracle_se"] = se
            combined = math.hypot(se_e if not math.isnan(se_e) else 0.0, se)
            row["within_3se"] = bool(abs(mean_e - est) <= 3 * combined) if combined > 0 else bool(mean_e == est)
        degs = [r.max_degree for r in group if r.max_degree is not None]
        if degs:
            m, se = _mean_se(degs)
            row["max_degree_mean"] = m
            row["max_degree_ratio"] = m / scale
            row["max_degree_ratio_se"] = se / scale
        mdeg = [r.mean_degree for r in group if r.mean_degree is not None]
        if mdeg:
            row["mean_degree_ratio"] = float(np.mean(mdeg)) / (2**d * scale / math.factorial(d - 1))
        cols = [r.dsatur_colors for r in group if r.dsatur_colors is not None]
        if cols:
            row["color_ratio"] = float(np.mean(cols)) * LL / scale
        iss = [r.greedy_is_size for r in group if r.greedy_is_size is not None]
        if iss:
            row["alpha_ratio"] = float(np.mean(iss)) * scale / (n * LL)
        rows.append(row)
    return {"schema": SUMMARY_SCHEMA, "d": d, "rows": rows}


def run_experiment(cfg: ExperimentConfig) -> tuple[list[TrialRecord], dict | None]:
    """Run trials, write the configured outputs, return records and summary."""
    records = run_trials(cfg)
    summary = None
    if len(cfg.n_grid) >= 3:
        summary = scaling_report(records, cfg.oracle_samples, cfg.seed)
    if cfg.csv_path:
        emit_csv(records, cfg.csv_path)
    if cfg.json_path and summary is not None:
        emit_json(summary, cfg.json_path)
    return records, summary


# pilot calibration ------------------------------------------------------------


def calibrate_bands(summary: dict, k_se: float = 4.0, floor: float = 0.02) -> dict:
    """Bands around the per-size ratios of a pilot summary.

    A later run with independent seeds differs from the pilot by about
    ``sqrt(2)`` pilot standard errors, so each band has half-width
    ``max(k_se * sqrt(2) * se, floor * value)``.
    """
    bands: dict = {"schema": "boxdel.bands/1", "d": summary["d"], "k_se": k_se, "floor": floor, "rows": []}
    for row in summary["rows"]:
        entry = {"n": row["n"]}
        lead = row["leading_edges"]
        pairs = [("ratio_to_leading", row["ratio_to_leading"], row["se_edges"] / lead)]
        if "max_degree_ratio" in row:
            pairs.append(("max_degree_ratio", row["max_degree_ratio"], row["max_degree_ratio_se"]))
        for key, value, se in pairs:
            half = max(k_se * math.sqrt(2.0) * se, floor * abs(value))
            entry[key] = {"center": value, "lo": value - half, "hi": value + half}
        bands["rows"].append(entry)
    return bands


def band_failures(summary: dict, bands: dict, key: str) -> list[int]:
    """Sizes whose ratio ``key`` falls outside the committed band."""
    committed = {row["n"]: row[key] for row in bands["rows"] if key in row}
    out = []
    for row in summary["rows"]:
        band = committed.get(row["n"])
        if band is None or not band["lo"] <= row[key] <= band["hi"]:
            out.append(row["n"])
    return out
