"""Shrinking-box sweep exploration of the points near the origin.

For index tuples ``i = (i_1, .., i_{d-1})`` with entries in ``1..m`` the sweep
looks at the box ``[0, 2^-i_1] x .. x [0, 2^-i_{d-1}]`` and, above the height
``S'(i)`` already reached by the tuples preceding ``i``, takes the point with
the smallest last coordinate.  Its last coordinate is ``S(i)``; if there is no
such point ``S(i) = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..points import PointSet


def default_cap(n: float) -> int:
    """``2 * ceil(3 log2 n)``, at least 1."""
    if n <= 1:
        return 1
    return max(1, 2 * math.ceil(3 * math.log2(n)))


@dataclass(frozen=True)
class ExplorationTrace:
    """Outcome of :func:`sweep_exploration`.

    ``S``, ``S_prev`` and ``witness`` are arrays of shape ``(m,) * (d - 1)``;
    entry ``[i_1 - 1, .., i_{d-1} - 1]`` belongs to the tuple ``(i_1, ..)``.
    ``witness`` holds the label of ``x(i)`` or 0 when no point was found.
    """

    d: int
    m: int
    S: np.ndarray
    S_prev: np.ndarray
    witness: np.ndarray

    @property
    def T(self) -> np.ndarray:
        return self.S - self.S_prev

    def at(self, *index: int) -> tuple[float, float, int]:
        """``(S', S, witness label)`` for a 1-based index tuple."""
        key = tuple(i - 1 for i in index)
        return float(self.S_prev[key]), float(self.S[key]), int(self.witness[key])

    @property
    def cap_breach(self) -> bool:
        """Some tuple with an entry equal to ``m`` still has ``S < 1``."""
        grid = np.indices(self.S.shape)
        at_cap = np.any(grid == self.m - 1, axis=0)
        return bool(np.any(self.S[at_cap] < 1.0))

    def witness_labels(self) -> np.ndarray:
        w = self.witness[self.witness > 0]
        return np.unique(w)


def sweep_exploration(P: PointSet, m: int) -> ExplorationTrace:
    """Run the sweep on ``P`` (dimension ``d >= 2``) with cap ``m``."""
    if P.d < 2:
        raise ValueError("the sweep needs d >= 2")
    if m < 1:
        raise ValueError("cap m must be at least 1")
    order = np.argsort(P.coords[:, -1], kind="stable")
    xs = np.ascontiguousarray(P.coords[order])
    S, Sp, W = _kernels.sweep_process(xs, m)
    shape = (m,) * (P.d - 1)
    labels = np.where(W >= 0, order[np.maximum(W, 0)] + 1, 0) if P.n else np.zeros(W.shape, dtype=np.int64)
    return ExplorationTrace(P.d, m, S.reshape(shape), Sp.reshape(shape), labels.reshape(shape))


def minimal_points(P: PointSet) -> np.ndarray:
    """Labels of points ``x`` with no other point ``y < x`` on every axis."""
    if P.n == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(P.coords[:, 0], kind="stable")
    rows = _kernels.minimal_rows(np.ascontiguousarray(P.coords[order]))
    return np.sort(order[rows] + 1)


def _claim_exponents(x: np.ndarray) -> np.ndarray:
    """``i`` with ``2^-i < x <= 2^(1-i)``."""
    mant, e = np.frexp(x)
    return np.where(mant == 0.5, 2 - e, 1 - e).astype(np.int64)


def verify_cover_claim(trace: ExplorationTrace, P: PointSet) -> list[int]:
    """Minimal points that are neither witnesses nor inside the swept layers.

    The layers are ``(R(j - 1) minus R(j)) x (S'(j), S(j)]`` for explored tuples
    ``j``, where ``R(j)`` is ``[0, 2^-j_1] x .. x [0, 2^-j_{d-1}]``.  A point
    with exponents ``i`` on the first ``d - 1`` axes lies in
    ``R(j - 1) minus R(j)`` iff ``j <= i`` on every axis with equality on at
    least one.  An empty list means the covering statement holds.
    """
    if P.n == 0:
        return []
    witnesses = set(trace.witness_labels().tolist())
    grid = np.indices(trace.S.shape) + 1  # grid[k] holds j_k
    bad = []
    for label in minimal_points(P).tolist():
        if label in witnesses:
            continue
        x = P.point(label)
        i = _claim_exponents(x[:-1])
        below = np.ones(trace.S.shape, dtype=bool)
        touch = np.zeros(trace.S.shape, dtype=bool)
        for k in range(trace.d - 1):
            below &= grid[k] <= i[k]
            touch |= grid[k] == i[k]
        layer = below & touch & (trace.S_prev < x[-1]) & (x[-1] <= trace.S)
        if not layer.any():
            bad.append(label)
    return bad


def witness_violations(trace: ExplorationTrace, P: PointSet) -> list[tuple[int, ...]]:
    """Tuples whose witness is not the lowest point of its box above ``S'``."""
    out = []
    xs = P.coords
    for key in zip(*np.nonzero(trace.witness)):
        bounds = np.exp2(-(np.asarray(key) + 1.0))
        inside = np.all(xs[:, :-1] <= bounds, axis=1)
        lo, hi = trace.S_prev[key], trace.S[key]
        if np.any(inside & (xs[:, -1] > lo) & (xs[:, -1] < hi)):
            out.append(tuple(int(k) + 1 for k in key))
    return out
