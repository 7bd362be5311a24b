"""Recursive search for disjoint dominance pairs with small boxes.

Points ``p_1 .. p_n`` live in ``[0, 1]^r``, each carries a level ``f(l)`` in
``0 .. Q-1`` and a set ``X`` of ``k`` labels is marked.  For marked ``i, j``
on one level with ``p_i < p_j`` coordinatewise, ``Box_f(i, j)`` is the set of
same-level labels strictly between them.  The search returns disjoint pairs
whose boxes hold no marked label and fewer than ``(8n/k) (8/L)^(r-1)``
labels.

In dimension 1 the marked points of each level are paired off in sorted order.
In dimension ``r >= 2`` the search recurses on the first ``r - 1``
coordinates with levels refined by the leading base-``L`` digits of the last
coordinate, then keeps a recursive pair ``(i, j)`` when the next digit of
``p_j`` exceeds that of ``p_i`` by exactly one and both digits are rare inside
the recursive box.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..points import PointSet


class ParamsOutOfRange(ValueError):
    """The parameters violate the preconditions of the search."""


class RecursionAborted(RuntimeError):
    """A lower-dimensional search returned too few pairs at some stage."""

    def __init__(self, r: int, stage: int, found: int, needed: float):
        super().__init__(f"dimension {r}, stage {stage}: recursion found {found} pairs, needed {needed:g}")
        self.r = r
        self.stage = stage
        self.found = found
        self.needed = needed
        self.transcript: list = []


@dataclass(frozen=True)
class StageRecord:
    m: int
    y: int  # pairs returned by the recursion
    y_prime: int  # after removing pairs that meet chosen pairs
    added: int
    aborted: bool = False


@dataclass
class SuitablePairs:
    r: int
    n: int
    k: int
    Q: int
    T: float
    L: int | None
    L_default: int | None
    M: int | None
    pairs: list
    box_sizes: list
    success: bool
    bound: float
    transcript: list = field(default_factory=list)

    @property
    def target(self) -> float:
        return 8.0**-self.r * self.k

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pairs"] = [list(map(int, p)) for p in self.pairs]
        out["box_sizes"] = [int(b) for b in self.box_sizes]
        return out


def default_L(k: int, r: int, T: float) -> int:
    """``floor(ln k / (8 r^2 T ln ln k))``; 0 when ``ln ln k <= 0``."""
    if k <= math.e:
        return 0
    return int(math.floor(math.log(k) / (8 * r * r * T * math.log(math.log(k)))))


def box_bound(n: int, k: int, r: int, L: int | None) -> float:
    """``(8n/k) (8/L)^(r-1)``."""
    if r == 1:
        return 8.0 * n / k
    return 8.0 * n / k * (8.0 / L) ** (r - 1)


def _box_mask(xs: np.ndarray, f: np.ndarray, i: int, j: int) -> np.ndarray:
    return (f == f[i - 1]) & np.all(xs > xs[i - 1], axis=1) & np.all(xs < xs[j - 1], axis=1)


def box_f(P: PointSet, f, i: int, j: int, r: int | None = None) -> set[int]:
    """Labels ``l`` with ``f(l) = f(i)`` and ``p_i < p_l < p_j`` on the first ``r`` axes."""
    r = P.d if r is None else r
    f = np.asarray(f)
    xs = P.coords[:, :r]
    if f[i - 1] != f[j - 1]:
        raise ValueError("i and j are on different levels")
    if not np.all(xs[i - 1] < xs[j - 1]):
        raise ValueError("p_i does not precede p_j")
    return set((np.flatnonzero(_box_mask(xs, f, i, j)) + 1).tolist())


def _check_params(n: int, k: int, r: int, T: float, Q: int, L: int | None) -> None:
    if not 1 <= k <= n:
        raise ParamsOutOfRange(f"need 1 <= k <= n, got k={k}, n={n}")
    if not 1 <= T <= math.sqrt(math.log(k)):
        raise ParamsOutOfRange(f"need 1 <= T <= sqrt(ln k), got T={T} with k={k}")
    if not 1 <= Q <= k ** (1.0 / r) / 4:
        raise ParamsOutOfRange(f"need 1 <= Q <= k^(1/r)/4, got Q={Q}")
    if r >= 2 and (L is None or L < 2):
        raise ParamsOutOfRange(f"need L >= 2, got {L}")


def suitable_pairs(
    P: PointSet,
    f=None,
    X=None,
    T: float = 1.0,
    Q: int | None = None,
    r: int | None = None,
    L: int | None = None,
) -> SuitablePairs:
    """Search for suitable pairs among the first ``r`` coordinates of ``P``.

    Args:
        P: points; coordinate ``r`` supplies base-``L`` digits.
        f: level of each label (array indexed by ``label - 1``), default all 0.
        X: marked labels, default all labels.
        T: boost parameter, ``1 <= T <= sqrt(ln k)``.
        Q: number of levels, default ``max(f) + 1``; needs ``Q <= k^(1/r)/4``.
        r: working dimension, default ``P.d``.
        L: digit base override.  The default ``floor(ln k / (8 r^2 T ln ln k))``
            is below 2 unless ``k`` is astronomically large; the same override
            is used at every depth of the recursion.

    Raises:
        ParamsOutOfRange: a precondition fails.
        RecursionAborted: some stage's recursive search came back short.
    """
    r = P.d if r is None else r
    if not 1 <= r <= P.d:
        raise ParamsOutOfRange(f"dimension {r} outside 1..{P.d}")
    f = np.zeros(P.n, dtype=np.int64) if f is None else np.asarray(f, dtype=np.int64)
    if f.shape != (P.n,):
        raise ParamsOutOfRange("labelling must give one level per point")
    labels = np.arange(1, P.n + 1) if X is None else np.unique(np.asarray(X, dtype=np.int64))
    if labels.size and (labels[0] < 1 or labels[-1] > P.n):
        raise ParamsOutOfRange("marked label outside 1..n")
    if Q is None:
        Q = int(f.max()) + 1 if P.n else 1
    if P.n and (f.min() < 0 or f.max() >= Q):
        raise ParamsOutOfRange("levels must lie in 0..Q-1")
    marked = np.zeros(P.n, dtype=bool)
    marked[labels - 1] = True
    return _search(P, f, marked, r, float(T), int(Q), L)


def _search(P: PointSet, f: np.ndarray, marked: np.ndarray, r: int, T: float, Q: int, L_override: int | None) -> SuitablePairs:
    n, k = P.n, int(marked.sum())
    L_def = default_L(k, r, T) if r >= 2 else None
    L = (L_override if L_override is not None else L_def) if r >= 2 else None
    _check_params(n, k, r, T, Q, L)
    if r == 1:
        return _base_case(P, f, marked, T, Q)

    xs_low = P.coords[:, : r - 1]
    xs = P.coords[:, :r]
    axis = r - 1
    limit = k ** (1.0 / (r - 1)) / 4
    M = 0
    while Q * L**M <= limit:
        M += 1
    low = P.project(r - 1)
    need = 8.0 ** -(r - 1) * k
    chosen: list[tuple[int, int]] = []
    used = np.zeros(n + 1, dtype=bool)
    transcript = []
    prefix = np.zeros(n, dtype=np.int64)  # first m digits of the last coordinate
    for m in range(M):
        fm = f * L**m + prefix
        try:
            rec = _search(low, fm, marked, r - 1, T, Q * L**m, L_override)
        except RecursionAborted as exc:
            transcript.append(StageRecord(m, 0, 0, 0, aborted=True))
            exc.transcript = transcript
            raise
        if not rec.success:
            transcript.append(StageRecord(m, len(rec.pairs), 0, 0, aborted=True))
            exc = RecursionAborted(r, m, len(rec.pairs), need)
            exc.transcript = transcript
            raise exc
        Y = sorted(rec.pairs, key=lambda p: (int(fm[p[0] - 1]), min(p)))
        Yp = [(i, j) for i, j in Y if not used[i] and not used[j]]
        delta = P.digit(axis, m + 1, L)
        added = 0
        for i, j in Yp:
            box = _box_mask(xs_low, fm, i, j)
            size = int(box.sum())
            counts = np.bincount(delta[box], minlength=L)
            rare = counts <= 4.0 / L * size
            pair_ok = rare[:-1] & rare[1:]
            di, dj = int(delta[i - 1]), int(delta[j - 1])
            if di == dj - 1 and pair_ok[di]:
                chosen.append((i, j))
                used[i] = used[j] = True
                added += 1
        transcript.append(StageRecord(m, len(Y), len(Yp), added))
        prefix = prefix * L + delta
    sizes = [int(_box_mask(xs, f, i, j).sum()) for i, j in chosen]
    success = len(chosen) >= 8.0**-r * k
    return SuitablePairs(r, n, k, Q, T, L, L_def, M, chosen, sizes, success, box_bound(n, k, r, L), transcript)


def _base_case(P: PointSet, f: np.ndarray, marked: np.ndarray, T: float, Q: int) -> SuitablePairs:
    """Pair off marked points level by level; keep pairs with small boxes."""
    n, k = P.n, int(marked.sum())
    x = P.coords[:, 0]
    seq = np.lexsort((x, f))  # by level, then by coordinate
    pos = np.flatnonzero(marked[seq])
    lev = f[seq[pos]]
    starts = np.flatnonzero(np.concatenate([[True], lev[1:] != lev[:-1]])) if pos.size else np.zeros(0, dtype=np.int64)
    group_start = np.repeat(starts, np.diff(np.concatenate([starts, [pos.size]])))
    rank = np.arange(pos.size) - group_start
    first = np.flatnonzero((rank % 2 == 0)[:-1] & (lev[1:] == lev[:-1])) if pos.size > 1 else np.zeros(0, dtype=np.int64)
    between = pos[first + 1] - pos[first] - 1
    bound = box_bound(n, k, 1, None)
    keep = between < bound
    lo = seq[pos[first[keep]]] + 1
    hi = seq[pos[first[keep] + 1]] + 1
    pairs = list(zip(lo.tolist(), hi.tolist()))
    success = len(pairs) >= k / 8
    return SuitablePairs(1, n, k, Q, T, None, None, None, pairs, between[keep].tolist(), success, bound, [])


def check_suitable_pairs(P: PointSet, f, X, result: SuitablePairs) -> list[str]:
    """List every way ``result`` breaks the contract; empty when it holds."""
    r = result.r
    f = np.zeros(P.n, dtype=np.int64) if f is None else np.asarray(f, dtype=np.int64)
    marked = np.zeros(P.n + 1, dtype=bool)
    marked[np.asarray(X if X is not None else np.arange(1, P.n + 1), dtype=np.int64)] = True
    xs = P.coords[:, :r]
    problems = []
    seen: set[int] = set()
    for (i, j), reported in zip(result.pairs, result.box_sizes):
        if i in seen or j in seen or i == j:
            problems.append(f"pair ({i},{j}) is not disjoint from earlier pairs")
        seen.update((i, j))
        if not (marked[i] and marked[j]):
            problems.append(f"pair ({i},{j}) has an unmarked endpoint")
        if f[i - 1] != f[j - 1]:
            problems.append(f"pair ({i},{j}) spans two levels")
            continue
        if not np.all(xs[i - 1] < xs[j - 1]):
            problems.append(f"pair ({i},{j}) is not a dominance pair")
            continue
        box = np.flatnonzero(_box_mask(xs, f, i, j)) + 1
        if box.size != reported:
            problems.append(f"pair ({i},{j}) box size {box.size} differs from reported {reported}")
        if not box.size < result.bound:
            problems.append(f"pair ({i},{j}) box size {box.size} not below {result.bound:g}")
        if np.any(marked[box]):
            problems.append(f"pair ({i},{j}) box contains a marked label")
    if result.success and len(result.pairs) < result.target:
        problems.append("success reported with too few pairs")
    return problems
