"""Bit-by-bit revelation of planar second coordinates.

The first coordinates are known.  After the first ``i`` bits of every second
coordinate are revealed, the points split into ``2^i`` levels (points sharing
those bits).  Two marked points on one level are consecutive when no marked
point of that level lies between them in the first coordinate; the unmarked
points of the level lying between them measure how far apart they are.

With ``n / k = 2^r``, ``s = floor(r / 2)``, ``t = floor(log2(n) / 2)`` and
thresholds ``gamma_l = (1 + 1/r)^l 2^(2 + r - l)``, the census counts for
every bit ``i`` the consecutive pairs with at most ``gamma_l`` points between
them (``|I_{l,i}|``), their weighted score ``w_i = sum_l |I_{l,i}| 2^l`` and
the multiset sizes ``|I_l| = sum_{l <= i <= t/2 + l} |I_{l,i}|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..points import PointSet


def choose_r(n: int, minimum: int = 1) -> int:
    """Largest ``r`` with ``2^r r <= log2(n) / 2^60``, raised to ``minimum``.

    At any feasible ``n`` the rule gives 0, so in practice ``minimum`` wins.
    """
    bound = math.log2(n) / 2.0**60
    r = 0
    while 2 ** (r + 1) * (r + 1) <= bound:
        r += 1
    return max(r, minimum)


def default_t(n: int) -> int:
    """``floor(log2(n) / 2)``."""
    return (int(n).bit_length() - 1) // 2


def gammas(r: int, s: int) -> np.ndarray:
    return np.array([(1 + 1 / r) ** l * 2.0 ** (2 + r - l) for l in range(s + 1)])


@dataclass(frozen=True)
class ConsecutivePairs:
    """Consecutive marked pairs after ``i`` bits; ``left`` precedes ``right`` in x."""

    i: int
    left: np.ndarray
    right: np.ndarray
    between: np.ndarray
    level: np.ndarray


def consecutive_pairs(P: PointSet, marked: np.ndarray, i: int, order: np.ndarray | None = None) -> ConsecutivePairs:
    """Consecutive marked pairs on the ``i``-levels of axis 1.

    ``marked`` is a boolean mask over labels (position ``l - 1``).  ``order``
    may pass a precomputed sort of the rows by the first coordinate.
    """
    if P.d != 2:
        raise ValueError("needs planar points")
    if order is None:
        order = np.argsort(P.coords[:, 0], kind="stable")
    level = P.bit_prefix(1, i).astype(np.int64)
    seq = order[np.argsort(level[order], kind="stable")]  # by level, then by x
    lev = level[seq]
    pos = np.flatnonzero(marked[seq])
    same = lev[pos[:-1]] == lev[pos[1:]]
    a, b = pos[:-1][same], pos[1:][same]
    return ConsecutivePairs(i, seq[a] + 1, seq[b] + 1, b - a - 1, lev[a])


@dataclass(frozen=True)
class IntervalCensus:
    n: int
    k: int
    r: int
    s: int
    t: int
    gamma: np.ndarray
    counts: np.ndarray  # counts[l, i] = |I_{l,i}|
    scores: np.ndarray  # w_i
    multiset_sizes: np.ndarray  # |I_l|
    bounds: np.ndarray  # N_l
    pairs: list = field(repr=False, default_factory=list)

    @property
    def last_bit(self) -> int:
        return self.counts.shape[1] - 1

    def nested(self) -> bool:
        return bool(np.all(self.counts[:-1] >= self.counts[1:]))

    def base_bound_holds(self) -> bool:
        """``|I_0| >= k t / 8``."""
        return bool(self.multiset_sizes[0] >= self.k * self.t / 8)

    def to_records(self) -> list[dict]:
        return [
            {"i": i, "counts": self.counts[:, i].tolist(), "score": int(self.scores[i])}
            for i in range(self.counts.shape[1])
        ]


def interval_census_2d(
    P: PointSet,
    marked,
    r: int | None = None,
    t: int | None = None,
    s: int | None = None,
    keep_pairs: bool = False,
) -> IntervalCensus:
    """Census of consecutive marked pairs over bits ``0 .. floor(t/2 + s)``.

    ``marked`` is a collection of labels or a boolean mask.  ``r`` defaults to
    ``floor(log2(n / k))``, which equals ``log2(n / k)`` when the ratio is a
    power of two.
    """
    mask = _mask(P, marked)
    n, k = P.n, int(mask.sum())
    if k < 1:
        raise ValueError("need at least one marked point")
    r = int(math.floor(math.log2(n / k))) if r is None else r
    if r < 1:
        raise ValueError("need r >= 1")
    t = default_t(n) if t is None else t
    s = r // 2 if s is None else s
    last = math.floor(t / 2 + s)
    g = gammas(r, s)
    order = np.argsort(P.coords[:, 0], kind="stable")
    counts = np.zeros((s + 1, last + 1), dtype=np.int64)
    kept = []
    for i in range(last + 1):
        cp = consecutive_pairs(P, mask, i, order)
        counts[:, i] = (cp.between[None, :] <= g[:, None]).sum(axis=1)
        if keep_pairs:
            kept.append(cp)
    scores = (counts * (2 ** np.arange(s + 1))[:, None]).sum(axis=0)
    sizes = np.array([counts[l, l : math.floor(t / 2 + l) + 1].sum() for l in range(s + 1)])
    bounds = np.array([(1 - 1 / r) ** l * k * t / (8 * 2**l) for l in range(s + 1)])
    return IntervalCensus(n, k, r, s, t, g, counts, scores, sizes, bounds, kept)


def _mask(P: PointSet, marked) -> np.ndarray:
    arr = np.asarray(marked)
    if arr.dtype == bool:
        if arr.shape != (P.n,):
            raise ValueError("mask must have one entry per point")
        return arr
    mask = np.zeros(P.n, dtype=bool)
    mask[arr.astype(np.int64) - 1] = True
    return mask


@dataclass(frozen=True)
class DetectionOutcome:
    certified: bool
    j: int | None = None  # first window offset at which the pair stood alone


def detect_edge_via_digits(P: PointSet, marked, p: int, q: int, i: int, r: int) -> DetectionOutcome:
    """Try to certify that ``p`` and ``q`` are adjacent in the Hasse diagram.

    ``(p, q)`` must be consecutive marked points after ``i`` bits, ``p`` to
    the left.  Bits ``i + 1 .. i + r`` of ``p``, ``q`` and the unmarked points
    between them are revealed.  The pair is certified when, for some
    ``j < r``, ``p`` and ``q`` share an ``(i + j)``-level with no unmarked
    point between them, and they sit on different ``(i + r)``-levels with
    ``p`` below ``q``.
    """
    mask = _mask(P, marked)
    if r < 1 or i + r > 63:
        raise ValueError("need r >= 1 and i + r <= 63")
    xp, xq = P.point(p)[0], P.point(q)[0]
    if not xp < xq:
        raise ValueError("p must precede q in the first coordinate")
    pre = P.bit_prefix(1, i)
    if pre[p - 1] != pre[q - 1]:
        raise ValueError("p and q are not on a common level")
    xs = P.coords[:, 0]
    on_level = (pre == pre[p - 1]) & (xs > xp) & (xs < xq)
    if np.any(on_level & mask):
        raise ValueError("p and q are not consecutive")
    between = np.flatnonzero(on_level) + 1
    labels = np.concatenate([[p, q], between]).astype(np.int64)
    window = P.bit_prefix(1, i + r, labels)
    alone_at = None
    for j in range(r):
        shift = np.uint64(r - j)
        key = window >> shift
        if key[0] == key[1] and not np.any(key[2:] == key[0]):
            alone_at = j
            break
    if alone_at is None:
        return DetectionOutcome(False)
    if window[0] < window[1]:
        return DetectionOutcome(True, alone_at)
    return DetectionOutcome(False)
