"""Box-Delaunay graphs and Hasse diagrams.

Two points ``p, q`` of a set ``P`` are box-Delaunay neighbours when the open
rectangle ``R[p, q]`` holds no other point of ``P``.  They are Hasse
neighbours when one dominates the other and nothing lies strictly between
them in the dominance order, which for a comparable pair is the same as
``R[p, q]`` being empty.  Reflecting a subset of the axes gives ``2^d``
dominance orders whose Hasse diagrams together make up the box-Delaunay
graph.
"""

from __future__ import annotations

import itertools
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .points import PointSet


class Graph:
    """Immutable undirected graph on vertex labels ``1..n``.

    Adjacency is stored in compressed rows: the neighbours of ``v`` are
    ``indices[indptr[v-1]:indptr[v]]``, sorted increasingly.
    """

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        self._n = int(n)
        self._indptr = np.asarray(indptr, dtype=np.int64)
        self._indices = np.asarray(indices, dtype=np.int64)
        self._indptr.setflags(write=False)
        self._indices.setflags(write=False)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Build from an iterable or ``(m, 2)`` array of label pairs."""
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if e.min() < 1 or e.max() > n:
                raise ValueError("edge endpoint outside 1..n")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loops are not allowed")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        key = np.unique(lo * (n + 1) + hi)
        lo, hi = key // (n + 1), key % (n + 1)
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src, 1)
        indptr = np.cumsum(indptr)
        return cls(n, indptr, dst)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))

    # accessors --------------------------------------------------------
    @property
    def n(self) -> int:
        return self._n

    @property
    def num_edges(self) -> int:
        return self._indices.size // 2

    @property
    def degrees(self) -> np.ndarray:
        """Degree of each vertex, position ``v - 1`` for label ``v``."""
        return np.diff(self._indptr)

    def degree(self, v: int) -> int:
        self._check(v)
        return int(self._indptr[v] - self._indptr[v - 1])

    def neighbors(self, v: int) -> np.ndarray:
        self._check(v)
        return self._indices[self._indptr[v - 1] : self._indptr[v]]

    def has_edge(self, a: int, b: int) -> bool:
        nb = self.neighbors(a)
        i = np.searchsorted(nb, b)
        return bool(i < nb.size and nb[i] == b)

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of pairs ``a < b`` in lexicographic order."""
        src = np.repeat(np.arange(1, self._n + 1), self.degrees)
        keep = src < self._indices
        return np.stack([src[keep], self._indices[keep]], axis=1)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.edges()}

    def csr0(self) -> tuple[np.ndarray, np.ndarray]:
        """Zero-based compressed rows, for compiled kernels."""
        return self._indptr, self._indices - 1

    def _check(self, v: int) -> None:
        if not 1 <= int(v) <= self._n:
            raise ValueError(f"vertex {v} outside 1..{self._n}")

    # combination ----------------------------------------------------------
    def union(self, other: "Graph") -> "Graph":
        if other.n != self.n:
            raise ValueError("vertex counts differ")
        return Graph.from_edges(self.n, np.concatenate([self.edges(), other.edges()]))

    def is_subgraph_of(self, other: "Graph") -> bool:
        return self.edge_set() <= other.edge_set()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._indptr, other._indptr) and np.array_equal(self._indices, other._indices)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.num_edges})"

    # text format --------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"{self.n} {self.num_edges}"]
        lines += [f"{a} {b}" for a, b in self.edges().tolist()]
        return "\n".join(lines) + "\n"

    def dump(self, path: str | Path) -> None:
        """Write ``"n m"`` followed by ``m`` lines ``"a b"`` with ``a < b``."""
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "Graph":
        rows = Path(path).read_text().split()
        if len(rows) < 2:
            raise ValueError("graph file lacks the 'n m' header")
        n, m = int(rows[0]), int(rows[1])
        body = np.array([int(t) for t in rows[2:]], dtype=np.int64)
        if body.size != 2 * m:
            raise ValueError(f"graph file declares {m} edges but holds {body.size // 2}")
        return cls.from_edges(n, body.reshape(-1, 2))


def _labels(P: PointSet, a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
    if a == b:
        raise ValueError("need two distinct labels")
    return P.point(a), P.point(b)


def is_edge_boxdel(P: PointSet, a: int, b: int) -> bool:
    """True iff no third point of ``P`` lies in the open rectangle ``R[p_a, p_b]``."""
    p, q = _labels(P, a, b)
    lo, hi = np.minimum(p, q), np.maximum(p, q)
    inside = np.all((P.coords > lo) & (P.coords < hi), axis=1)
    return not bool(inside.any())


def is_edge_hasse(P: PointSet, a: int, b: int) -> bool:
    """True iff one of the two points dominates the other with nothing strictly between."""
    p, q = _labels(P, a, b)
    if not (np.all(p < q) or np.all(q < p)):
        return False
    return is_edge_boxdel(P, a, b)


def _assert_general_position(xs: np.ndarray) -> None:
    for k in range(xs.shape[1]):
        col = np.sort(xs[:, k])
        if np.any(col[1:] == col[:-1]):
            raise ValueError(f"points share a coordinate on axis {k}")


def build_boxdel_bruteforce(P: PointSet) -> Graph:
    """Reference builder: test every pair against every third point.

    For a fixed vertex ``a`` write ``D = x - p_a``.  A point ``c`` is inside
    ``R[p_a, p_b]`` iff on every axis ``D_c`` has the sign of ``D_b`` and a
    smaller absolute value; this is evaluated for all ``(b, c)`` at once.
    """
    xs = P.coords
    n = P.n
    _assert_general_position(xs)
    edges = []
    for a in range(n - 1):
        D = xs - xs[a]
        S = np.sign(D)
        A = np.abs(D)
        rest = slice(a + 1, n)
        # inside[b, c]: c lies in R[p_a, p_b]
        inside = np.all((S[rest, None, :] == S[None, :, :]) & (A[None, :, :] < A[rest, None, :]), axis=2)
        ok = ~inside.any(axis=1)
        for b in np.flatnonzero(ok) + a + 1:
            edges.append((a + 1, b + 1))
    return Graph.from_edges(n, edges)


def build_path1d(P: PointSet) -> Graph:
    """Box-Delaunay graph in dimension 1: consecutive points in sorted order."""
    if P.d != 1:
        raise ValueError("dimension must be 1")
    order = np.argsort(P.coords[:, 0], kind="stable") + 1
    return Graph.from_edges(P.n, np.stack([order[:-1], order[1:]], axis=1))


def build_boxdel_fast2d(P: PointSet) -> Graph:
    """Planar builder with per-vertex quadrant staircases.

    After one global sort by x, the points right of ``a`` are scanned in x
    order.  A point above ``a`` is a neighbour iff its y is below every
    earlier point above ``a``; symmetrically below.  Each edge is reported by
    its left endpoint.
    """
    if P.d != 2:
        raise ValueError("dimension must be 2")
    _assert_general_position(P.coords)
    order = np.argsort(P.coords[:, 0], kind="stable")
    ys = P.coords[order, 1]
    n = P.n
    src, dst = [], []
    for i in range(n - 1):
        y = ys[i]
        right = ys[i + 1 :]
        up = right > y
        above = np.where(up, right, np.inf)
        below = np.where(up, -np.inf, right)
        # extreme over strictly earlier points in the scan
        prev_min = np.minimum.accumulate(np.concatenate([[np.inf], above[:-1]]))
        prev_max = np.maximum.accumulate(np.concatenate([[-np.inf], below[:-1]]))
        hit = np.where(up, right < prev_min, right > prev_max)
        j = np.flatnonzero(hit) + i + 1
        src.append(np.full(j.size, order[i]))
        dst.append(order[j])
    if not src:
        return Graph.empty(n)
    e = np.stack([np.concatenate(src), np.concatenate(dst)], axis=1) + 1
    return Graph.from_edges(n, e)


def build_boxdel_grid2d(P: PointSet, cells_per_point: float = 8.0) -> Graph:
    """Planar builder over a bucket grid, for large ``n``.

    Same staircase rule as :func:`build_boxdel_fast2d`, but each vertex only
    inspects grid cells that can still contain a neighbour.
    """
    if P.d != 2:
        raise ValueError("dimension must be 2")
    _assert_general_position(P.coords)
    if P.n < 2:
        return Graph.empty(P.n)
    grid = max(1, int(np.sqrt(P.n * cells_per_point)))
    xs = np.ascontiguousarray(P.coords[:, 0])
    ys = np.ascontiguousarray(P.coords[:, 1])
    e = _kernels.grid2d_edges(xs, ys, grid)
    return Graph.from_edges(P.n, e + 1)


def build_boxdel_sweep(P: PointSet) -> Graph:
    """Builder for any dimension: sweep along axis 0 with per-orthant blockers."""
    _assert_general_position(P.coords)
    if P.n < 2:
        return Graph.empty(P.n)
    xs = np.ascontiguousarray(P.coords)
    order = np.argsort(xs[:, 0], kind="stable")
    e = _kernels.orthant_sweep_edges(xs, order, False)
    return Graph.from_edges(P.n, e + 1)


def build_boxdel(P: PointSet, method: str = "auto") -> Graph:
    """Box-Delaunay graph of ``P``.

    ``method`` is one of ``auto``, ``brute``, ``fast2d``, ``grid2d``,
    ``sweep``.  ``auto`` picks the path for ``d = 1``, the grid builder for
    ``d = 2`` and the sweep otherwise.
    """
    if method == "auto":
        method = "path" if P.d == 1 else "grid2d" if P.d == 2 else "sweep"
    builders = {
        "brute": build_boxdel_bruteforce,
        "fast2d": build_boxdel_fast2d,
        "grid2d": build_boxdel_grid2d,
        "sweep": build_boxdel_sweep,
        "path": build_path1d,
    }
    if method not in builders:
        raise ValueError(f"unknown builder {method!r}")
    return builders[method](P)


def _orientation(orientation: Sequence[int] | None, d: int) -> np.ndarray:
    s = np.ones(d) if orientation is None else np.asarray(orientation, dtype=np.float64)
    if s.shape != (d,) or not np.all(np.abs(s) == 1):
        raise ValueError("orientation must be a vector of +1/-1 of length d")
    return s


def build_hasse(P: PointSet, orientation: Sequence[int] | None = None) -> Graph:
    """Hasse diagram of the dominance order after reflecting axes with sign -1.

    Reflection is done by negation, which reverses the order exactly.
    """
    s = _orientation(orientation, P.d)
    _assert_general_position(P.coords)
    if P.n < 2:
        return Graph.empty(P.n)
    xs = np.ascontiguousarray(P.coords * s)
    order = np.argsort(xs[:, 0], kind="stable")
    e = _kernels.orthant_sweep_edges(xs, order, True)
    return Graph.from_edges(P.n, e + 1)


def orientations(d: int) -> list[tuple[int, ...]]:
    return list(itertools.product((1, -1), repeat=d))


def orientation_union(P: PointSet) -> Graph:
    """Union of the Hasse diagrams over all ``2^d`` orientations."""
    g = Graph.empty(P.n)
    for s in orientations(P.d):
        g = g.union(build_hasse(P, s))
    return g


def orientation_union_check(P: PointSet, reference: Graph | None = None) -> tuple[bool, set]:
    """Compare the orientation union with the brute-force box-Delaunay graph.

    Returns ``(holds, symmetric_difference)``.
    """
    ref = build_boxdel_bruteforce(P) if reference is None else reference
    diff = orientation_union(P).edge_set() ^ ref.edge_set()
    return not diff, diff
