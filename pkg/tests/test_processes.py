import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxdel.graphs import is_edge_hasse
from boxdel.points import PointSet, boxes_of_weight, in_dyadic_box, sample_poissonised, sample_uniform
from boxdel.processes import (
    ParamsOutOfRange,
    RecursionAborted,
    box_f,
    check_suitable_pairs,
    choose_r,
    consecutive_pairs,
    default_cap,
    default_L,
    detect_edge_via_digits,
    empty_box_census,
    interval_census_2d,
    suitable_pairs,
    sweep_exploration,
    verify_cover_claim,
)
from boxdel.processes.intervals import gammas
from boxdel.processes.sweep import minimal_points, witness_violations

seeds = st.integers(min_value=0, max_value=2**63)


# sweep exploration -----------------------------------------------------------------


def python_sweep(coords, m):
    """Direct simulation over tuples in lexicographic order."""
    d = coords.shape[1]
    S, Sp, W = {}, {}, {}
    for idx in itertools.product(range(1, m + 1), repeat=d - 1):
        preds = [idx[:k] + (idx[k] - 1,) + idx[k + 1 :] for k in range(d - 1) if idx[k] > 1]
        prev = max((S[p] for p in preds), default=0.0)
        inside = [
            (x[-1], label)
            for label, x in enumerate(coords.tolist(), start=1)
            if all(x[k] <= 2.0 ** -idx[k] for k in range(d - 1)) and x[-1] > prev
        ]
        Sp[idx] = prev
        if inside:
            S[idx], W[idx] = min(inside)
        else:
            S[idx], W[idx] = 1.0, 0
    return S, Sp, W


def test_sweep_hand_instance():
    P = PointSet.from_coords([[0.4, 0.2], [0.6, 0.1], [0.2, 0.5], [0.1, 0.9]])
    tr = sweep_exploration(P, 4)
    assert tr.S.tolist() == [0.2, 0.5, 0.9, 1.0]
    assert tr.S_prev.tolist() == [0.0, 0.2, 0.5, 0.9]
    assert tr.witness.tolist() == [1, 3, 4, 0]
    assert tr.at(2) == (0.2, 0.5, 3)
    assert verify_cover_claim(tr, P) == []


def test_sweep_on_empty_set():
    P = sample_uniform(0, 3, 1)
    tr = sweep_exploration(P, 5)
    assert np.all(tr.S == 1.0) and np.all(tr.witness == 0)
    assert verify_cover_claim(tr, P) == []
    with pytest.raises(ValueError):
        sweep_exploration(sample_uniform(5, 1, 0), 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 80), st.integers(2, 3), st.integers(1, 7), seeds)
def test_sweep_matches_direct_simulation(n, d, m, seed):
    P = sample_uniform(n, d, seed)
    tr = sweep_exploration(P, m)
    S, Sp, W = python_sweep(P.coords, m)
    for idx in S:
        assert tr.at(*idx) == (Sp[idx], S[idx], W[idx])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 300), st.integers(2, 4), seeds)
def test_sweep_invariants(n, d, seed):
    P = sample_uniform(n, d, seed)
    tr = sweep_exploration(P, default_cap(max(n, 2)))
    assert np.all(tr.S_prev <= tr.S) and np.all(tr.T >= 0) and np.all(tr.S <= 1)
    assert tr.S_prev[(0,) * (d - 1)] == 0.0
    for axis in range(d - 1):
        assert np.all(np.diff(tr.S, axis=axis) >= 0)  # monotone in the tuple order
    assert witness_violations(tr, P) == []
    assert verify_cover_claim(tr, P) == []


def test_minimal_points_brute_force():
    P = sample_uniform(120, 3, 4)
    xs = P.coords
    expected = [l + 1 for l in range(P.n) if not np.any(np.all(xs < xs[l], axis=1))]
    assert minimal_points(P).tolist() == expected


def test_cover_claim_detects_a_missing_layer():
    P = PointSet.from_coords([[0.4, 0.2], [0.6, 0.1], [0.2, 0.5], [0.1, 0.9]])
    tr = sweep_exploration(P, 4)
    broken = type(tr)(tr.d, tr.m, tr.S.copy(), tr.S_prev.copy(), np.zeros_like(tr.witness))
    # without witnesses the points must fall in the layers, which they do not all do
    assert verify_cover_claim(broken, P) != []


def test_default_cap():
    assert default_cap(10**4) == 2 * math.ceil(3 * math.log2(10**4))


def test_sweep_on_poisson_samples():
    for seed in range(5):
        P = sample_poissonised(2000, 2, seed)
        tr = sweep_exploration(P, default_cap(2000))
        assert verify_cover_claim(tr, P) == []
        assert not tr.cap_breach


# box census --------------------------------------------------------------------------


def brute_census_row(P, I, d):
    def empty(b):
        return not any(in_dyadic_box(b, x) for x in P.coords)

    boxes = boxes_of_weight(I, d)
    return sum(map(empty, boxes)), sum(empty(b.shifted()) for b in boxes)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 60), st.integers(1, 3), seeds)
def test_census_matches_brute_force(n, d, seed):
    P = sample_uniform(n, d, seed)
    census = empty_box_census(P, n)
    assert census.shift_mismatches() == []
    for row in census.rows:
        assert row.total == math.comb(row.weight - 1, d - 1)
        assert (row.empty, row.viable) == brute_census_row(P, row.weight, d)
        assert row.threshold == 2.0 ** (row.weight + 3) * math.log2(n) / n


def test_census_single_point():
    P = PointSet.from_coords([[0.3, 0.6]])  # dyadic index (2, 1)
    census = empty_box_census(P, 3)
    assert census.row(2).empty == 1  # the unit box (1, 1) misses it
    assert census.row(3).total == 2 and census.row(3).empty == 1  # only (1, 2) is empty
    assert census.row(2).viable == 1  # (2, 2) holds nothing
    assert census.row(3).viable == 2  # (2, 3) and (3, 2) are both empty


def test_census_all_points_in_the_unit_box():
    P = PointSet.from_coords([[0.6, 0.7], [0.8, 0.55], [0.9, 0.95]])
    census = empty_box_census(P, 3)
    assert census.row(2).empty == 0
    for row in census.rows[1:]:
        assert row.empty == row.total


def test_census_at_moderate_intensity():
    P = sample_poissonised(20_000, 2, 7)
    census = empty_box_census(P, 20_000)
    assert census.violations() == [] and census.shift_mismatches() == []
    assert census.claim_limit > census.checked_limit - 10


# interval census ------------------------------------------------------------------------


def python_consecutive(P, marked, i):
    pre = P.bit_prefix(1, i).tolist()
    out = []
    for level in sorted(set(pre)):
        rows = sorted((P.coords[l, 0], l) for l in range(P.n) if pre[l] == level)
        marks = [pos for pos, (_, l) in enumerate(rows) if marked[l]]
        for a, b in zip(marks, marks[1:]):
            out.append((rows[a][1] + 1, rows[b][1] + 1, b - a - 1))
    return sorted(out)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 150), st.integers(0, 10), seeds, st.floats(0.1, 0.9))
def test_consecutive_pairs_match_direct_listing(n, i, seed, frac):
    P = sample_uniform(n, 2, seed)
    marked = np.random.default_rng(seed % 2**32).random(n) < frac
    cp = consecutive_pairs(P, marked, i)
    got = sorted(zip(cp.left.tolist(), cp.right.tolist(), cp.between.tolist()))
    assert got == python_consecutive(P, marked, i)
    pre = P.bit_prefix(1, i)
    assert np.array_equal(pre[cp.left - 1], pre[cp.right - 1])


def test_level_zero_has_k_minus_one_pairs():
    P = sample_uniform(200, 2, 3)
    marked = np.zeros(200, dtype=bool)
    marked[::5] = True
    assert consecutive_pairs(P, marked, 0).left.size == marked.sum() - 1


def test_choose_r_and_gammas():
    assert choose_r(2**14) == 1
    assert choose_r(2**14, minimum=0) == 0
    g = gammas(4, 2)
    assert g.tolist() == pytest.approx([64.0, 1.25 * 32, 1.5625 * 16])
    assert np.all(np.diff(g) < 0)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([2**10, 2**12]), st.integers(1, 3), seeds)
def test_interval_census_invariants(n, r, seed):
    P = sample_uniform(n, 2, seed)
    k = n >> r
    marked = np.zeros(n, dtype=bool)
    marked[np.random.default_rng(seed % 2**32).choice(n, k, replace=False)] = True
    c = interval_census_2d(P, marked, keep_pairs=True)
    assert c.r == r and c.s == r // 2 and c.t == int(math.log2(n)) // 2
    assert c.last_bit == math.floor(c.t / 2 + c.s)
    assert c.nested()
    assert c.base_bound_holds()
    assert np.array_equal(c.scores, (c.counts * 2 ** np.arange(c.s + 1)[:, None]).sum(axis=0))
    for cp in c.pairs:
        pre = P.bit_prefix(1, cp.i)
        assert np.array_equal(pre[cp.left - 1], pre[cp.right - 1])
    json.dumps(c.to_records())


def test_interval_census_equally_spaced_marks():
    n = 2**12
    P = sample_uniform(n, 2, 8)
    order = np.argsort(P.coords[:, 0])
    marked = np.zeros(n, dtype=bool)
    marked[order[::2]] = True
    c = interval_census_2d(P, marked)
    assert c.base_bound_holds()
    with pytest.raises(ValueError):
        interval_census_2d(P, np.ones(n, dtype=bool))  # r would be 0


# edge detection ---------------------------------------------------------------------------


def test_detection_immediate_split():
    # p and q alone on the 0-level and split by the first bit, p below
    P = PointSet.from_coords([[0.1, 0.3], [0.2, 0.7]])
    out = detect_edge_via_digits(P, [1, 2], 1, 2, i=0, r=2)
    assert out.certified and out.j == 0


def test_detection_blocked_by_shadowing_point():
    # unmarked point between them shares all revealed bits with both
    P = PointSet.from_coords([[0.1, 0.30], [0.15, 0.31], [0.2, 0.32]])
    out = detect_edge_via_digits(P, [1, 3], 1, 3, i=0, r=3)
    assert not out.certified


def test_detection_rejects_wrong_order_and_non_consecutive():
    P = PointSet.from_coords([[0.1, 0.3], [0.15, 0.6], [0.2, 0.7]])
    with pytest.raises(ValueError):
        detect_edge_via_digits(P, [1, 3], 3, 1, i=0, r=1)
    with pytest.raises(ValueError):
        detect_edge_via_digits(P, [1, 2, 3], 1, 3, i=0, r=1)


def test_detection_is_sound_on_random_instances():
    certified = 0
    for seed in range(20):
        P = sample_uniform(600, 2, seed)
        marked = np.zeros(600, dtype=bool)
        marked[::3] = True
        for i in range(0, 6):
            cp = consecutive_pairs(P, marked, i)
            for p, q in zip(cp.left.tolist(), cp.right.tolist()):
                out = detect_edge_via_digits(P, marked, p, q, i, 3)
                if out.certified:
                    certified += 1
                    assert is_edge_hasse(P, p, q)
    assert certified > 100


# suitable pairs ------------------------------------------------------------------------------


def test_base_case_hand_instance():
    xs = (np.arange(1, 17) - 0.5) / 16
    ys = np.linspace(0.03, 0.97, 16)[::-1]
    P = PointSet.from_coords(np.stack([xs, ys], axis=1))
    res = suitable_pairs(P, X=range(1, 9), r=1)
    assert res.pairs == [(1, 2), (3, 4), (5, 6), (7, 8)]
    assert res.box_sizes == [0, 0, 0, 0]
    assert res.success and res.bound == 16.0


def test_box_f_examples():
    P = PointSet.from_coords([[0.1, 0.1], [0.5, 0.5], [0.9, 0.9], [0.6, 0.6]])
    assert box_f(P, [0, 0, 0, 1], 1, 3) == {2}
    assert box_f(P, [0, 0, 0, 0], 1, 3) == {2, 4}
    assert box_f(P, [0, 0, 0, 0], 1, 2) == set()
    with pytest.raises(ValueError):
        box_f(P, [0, 1, 0, 0], 1, 2)
    with pytest.raises(ValueError):
        box_f(P, [0, 0, 0, 0], 3, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(8, 400), seeds, st.integers(1, 3), st.sampled_from(["random", "clustered", "alternating"]))
def test_base_case_always_succeeds(n, seed, Q, placement):
    rng = np.random.default_rng(seed % 2**32)
    P = sample_uniform(n, 1, seed)
    order = np.argsort(P.coords[:, 0]) + 1
    k = int(rng.integers(max(1, (4 * Q) ** 1), n + 1)) if (4 * Q) <= n else n
    if placement == "random":
        X = rng.choice(n, k, replace=False) + 1
    elif placement == "clustered":
        X = order[:k]
    else:
        X = order[:: max(1, n // k)][:k]
    f = rng.integers(0, Q, size=n)
    if Q > len(X) / 4:
        with pytest.raises(ParamsOutOfRange):
            suitable_pairs(P, f, X, Q=Q, r=1)
        return
    res = suitable_pairs(P, f, X, Q=Q, r=1)
    assert res.success and len(res.pairs) >= len(set(X.tolist())) / 8
    assert check_suitable_pairs(P, f, X, res) == []


def test_parameter_checks():
    P = sample_uniform(256, 2, 1)
    with pytest.raises(ParamsOutOfRange):
        suitable_pairs(P, X=range(1, 65), Q=3, r=2, L=4)  # Q > k^(1/2)/4 = 2
    with pytest.raises(ParamsOutOfRange):
        suitable_pairs(P, X=range(1, 65), T=5.0, r=2, L=4)  # T > sqrt(ln 64)
    with pytest.raises(ParamsOutOfRange):
        suitable_pairs(P, X=range(1, 65), r=2)  # default L is below 2
    with pytest.raises(ParamsOutOfRange):
        suitable_pairs(P, X=[0, 1], r=1)


def test_default_L_is_tiny_at_desk_scale():
    assert default_L(512, 2, 1.0) == 0
    assert default_L(10**300, 1, 1.0) >= 2


def test_two_dimensional_search_contract():
    successes = 0
    for seed in range(10):
        P = sample_uniform(4096, 2, seed)
        X = np.random.default_rng(seed).choice(4096, 512, replace=False) + 1
        try:
            res = suitable_pairs(P, None, X, r=2, L=4)
        except RecursionAborted as exc:
            assert exc.transcript and exc.transcript[-1].aborted
            continue
        assert res.L == 4 and res.L_default == 0
        assert res.M == 4 and res.bound == pytest.approx(8 * 4096 / 512 * 2)
        assert [s.m for s in res.transcript] == list(range(res.M))
        assert sum(s.added for s in res.transcript) == len(res.pairs)
        if res.success:
            successes += 1
            assert check_suitable_pairs(P, None, X, res) == []
        json.dumps(res.to_dict(), default=lambda o: o.__dict__)
    assert successes >= 8


def test_checker_reports_broken_results():
    P = sample_uniform(256, 1, 3)
    res = suitable_pairs(P, X=range(1, 129), r=1)
    res.pairs[1] = res.pairs[0]
    assert check_suitable_pairs(P, None, range(1, 129), res)
