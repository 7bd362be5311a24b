import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxdel import experiments as ex
from boxdel.experiments import (
    CSV_COLUMNS,
    EULER_GAMMA,
    SUMMARY_SCHEMA,
    AuditMismatch,
    ExperimentConfig,
    InsufficientGrid,
    TrialRecord,
    batch_edge_counts,
    batch_uniform_points,
    emit_csv,
    emit_json,
    expected_edges_leading,
    expected_edges_oracle,
    parse_csv,
    read_csv,
    records_to_csv,
    run_experiment,
    run_trials,
    scaling_report,
)
from boxdel.graphs import build_boxdel
from boxdel.points import PointSet


def harmonic(m, p=1):
    return math.fsum(1.0 / k**p for k in range(1, m + 1))


# reference expectations -------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 10, 1000, 10**5])
def test_leading_order_in_one_dimension_is_n(n):
    assert expected_edges_leading(n, 1) == pytest.approx(n, rel=1e-10)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_leading_order_for_two_points(d):
    assert expected_edges_leading(2, d) == pytest.approx(2.0**d, rel=1e-10)


@pytest.mark.parametrize("n", [3, 17, 500, 40_000])
def test_leading_order_matches_harmonic_closed_forms(n):
    # int (1-u)^(m-1) ln(1/u) du = H_m / m and the squared-log analogue
    m = n - 1
    assert expected_edges_leading(n, 2) == pytest.approx(2 * n * harmonic(m), rel=1e-9)
    assert expected_edges_leading(n, 3) == pytest.approx(2 * n * (harmonic(m) ** 2 + harmonic(m, 2)), rel=1e-9)


def test_leading_order_laplace_check():
    n = 10**5
    assert expected_edges_leading(n, 2) / (2 * n * (math.log(n) + EULER_GAMMA)) == pytest.approx(1, rel=1e-2)
    with pytest.raises(ValueError):
        expected_edges_leading(1, 2)


def test_oracle_trivial_and_exact_cases():
    assert expected_edges_oracle(2, 3, samples=5) == (1.0, 0.0)
    est, se = expected_edges_oracle(3, 2, samples=400_000, seed=1)
    assert abs(est - 8 / 3) < 4 * se and se < 0.002
    est, se = expected_edges_oracle(3, 3, samples=400_000, seed=2)
    assert abs(est - 26 / 9) < 4 * se
    with pytest.raises(ValueError):
        expected_edges_oracle(3, 2, samples=100)


def test_oracle_in_one_dimension():
    # the exact count is n - 1
    est, se = expected_edges_oracle(50, 1, samples=400_000, seed=3)
    assert abs(est - 49) < 4 * se


def test_oracle_is_deterministic():
    a = expected_edges_oracle(100, 2, 20_000, seed=4)
    assert a == expected_edges_oracle(100, 2, 20_000, seed=4)
    # chunking only reorders the floating point sums
    assert expected_edges_oracle(100, 2, 20_000, seed=4, chunk=3000) == pytest.approx(a, rel=1e-12)


def test_batch_counts_match_builder():
    xs = batch_uniform_points(6, 2, 300, seed=5)
    counts = batch_edge_counts(xs)
    for t in range(300):
        assert counts[t] == build_boxdel(PointSet.from_coords(xs[t])).num_edges
    assert np.all(batch_edge_counts(batch_uniform_points(2, 3, 50, 1)) == 1)


# configuration -----------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(n_grid=[10, 10])
    with pytest.raises(ValueError):
        ExperimentConfig(n_grid=[20, 10])
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(stats=["bogus"])
    with pytest.raises(ValueError):
        ExperimentConfig(builder="bogus")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"d": 2, "extra": 1})


def test_config_json_and_override(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"d": 3, "n_grid": [8, 16, 32], "trials": 2, "seed": 4}))
    cfg = ExperimentConfig.from_json(path)
    assert cfg.d == 3 and cfg.n_grid == [8, 16, 32]
    cfg2 = cfg.override(seed=9, trials=None)
    assert cfg2.seed == 9 and cfg2.trials == 2


# trials -------------------------------------------------------------------------------


def test_single_trial_with_two_points():
    recs = run_trials(ExperimentConfig(d=2, n_grid=[2], trials=1, seed=0))
    assert len(recs) == 1 and recs[0].edges == 1


def test_records_are_sorted_and_sane():
    cfg = ExperimentConfig(d=2, n_grid=[20, 40, 80], trials=3, seed=7)
    recs = run_trials(cfg)
    assert [(r.n, r.trial) for r in recs] == [(n, t) for n in cfg.n_grid for t in range(3)]
    for r in recs:
        assert r.mean_degree * r.n / 2 == pytest.approx(r.edges)
        assert r.greedy_is_size >= r.caro_wei_bound - 1e-9
        assert r.census_violations >= 0 and r.wall_ms is None
        assert r.seed == ex.trial_seed(7, r.n, r.trial)


def test_hasse_records_have_no_triangles():
    recs = run_trials(ExperimentConfig(d=3, n_grid=[60], trials=3, builder="hasse", stats=["triangles"]))
    assert all(r.max_triangles_vertex == 0 for r in recs)


def test_run_trials_is_deterministic_and_worker_independent():
    cfg = ExperimentConfig(d=2, n_grid=[30, 60], trials=2, seed=3)
    a = records_to_csv(run_trials(cfg))
    b = records_to_csv(run_trials(cfg))
    c = records_to_csv(run_trials(cfg.override(workers=2)))
    assert a == b == c


def test_audit_selection_rate():
    picked = sum(ex.audited(1, 100, t, 0.01, 200) for t in range(20_000))
    assert 140 < picked < 260
    assert not ex.audited(1, 300, 0, 1.0, 200)


def test_audit_catches_a_broken_builder(monkeypatch):
    from boxdel.graphs import Graph

    monkeypatch.setattr(ex, "build_boxdel", lambda P, method="auto": Graph.empty(P.n))
    with pytest.raises(AuditMismatch):
        run_trials(ExperimentConfig(d=2, n_grid=[10], trials=2, audit_fraction=1.0, stats=[]))


def test_timing_is_recorded_only_on_request():
    recs = run_trials(ExperimentConfig(d=2, n_grid=[10], trials=1, timing=True, stats=[]))
    assert recs[0].wall_ms is not None and recs[0].wall_ms >= 0


# serialization ------------------------------------------------------------------------


def test_csv_header_and_empty_list(tmp_path):
    assert len(CSV_COLUMNS) == 14
    assert records_to_csv([]) == ",".join(CSV_COLUMNS) + "\n"
    path = tmp_path / "e.csv"
    emit_csv([], path)
    assert read_csv(path) == []


optional_int = st.one_of(st.none(), st.integers(0, 10**6))
optional_float = st.one_of(st.none(), st.floats(0, 1e6, allow_nan=False))
records = st.builds(
    TrialRecord,
    n=st.integers(0, 10**6),
    d=st.integers(1, 6),
    trial=st.integers(0, 1000),
    seed=st.integers(0, 2**64 - 1),
    edges=st.integers(0, 10**7),
    max_degree=optional_int,
    mean_degree=optional_float,
    max_triangles_vertex=optional_int,
    max_far_edges_vertex=optional_int,
    dsatur_colors=optional_int,
    greedy_is_size=optional_int,
    caro_wei_bound=optional_float,
    census_violations=optional_int,
    wall_ms=optional_float,
)


@given(st.lists(records, max_size=8))
def test_csv_round_trip(recs):
    assert parse_csv(records_to_csv(recs)) == recs


def test_csv_rejects_a_foreign_header():
    with pytest.raises(ValueError):
        parse_csv("a,b\n1,2\n")


def test_missing_statistics_are_blank():
    recs = run_trials(ExperimentConfig(d=2, n_grid=[12], trials=1, stats=["degrees"]))
    row = next(csv.DictReader(io.StringIO(records_to_csv(recs))))
    assert row["dsatur_colors"] == "" and row["max_degree"] != ""


# scaling report -------------------------------------------------------------------------


def test_report_needs_three_sizes():
    recs = run_trials(ExperimentConfig(d=2, n_grid=[10, 20], trials=1, stats=[]))
    with pytest.raises(InsufficientGrid):
        scaling_report(recs)


def test_report_in_one_dimension():
    recs = run_trials(ExperimentConfig(d=1, n_grid=[10, 20, 40], trials=2))
    rep = scaling_report(recs)
    assert rep["schema"] == SUMMARY_SCHEMA and rep["d"] == 1
    for row in rep["rows"]:
        assert row["mean_edges"] == row["n"] - 1
        assert row["max_degree_ratio"] == pytest.approx(2.0)


def test_report_ratios_are_recomputed_from_records(tmp_path):
    cfg = ExperimentConfig(d=2, n_grid=[64, 128, 256], trials=4, seed=2, oracle_samples=20_000)
    recs, rep = run_experiment(cfg)
    for row in rep["rows"]:
        group = [r for r in recs if r.n == row["n"]]
        L = math.log(row["n"])
        assert row["max_degree_ratio"] == pytest.approx(np.mean([r.max_degree for r in group]) / L)
        assert row["mean_degree_ratio"] == pytest.approx(np.mean([r.mean_degree for r in group]) / (4 * L))
        assert row["color_ratio"] == pytest.approx(np.mean([r.dsatur_colors for r in group]) * math.log(L) / L)
        assert row["alpha_ratio"] == pytest.approx(np.mean([r.greedy_is_size for r in group]) * L / (row["n"] * math.log(L)))
        assert row["ratio_to_leading"] == pytest.approx(row["mean_edges"] / expected_edges_leading(row["n"], 2))
        assert "within_3se" in row
    path = tmp_path / "s.json"
    emit_json(rep, path)
    assert json.loads(path.read_text()) == json.loads(json.dumps(rep))
