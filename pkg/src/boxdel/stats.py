"""Graph statistics: degrees, triangles, far/close edges, cliques, colourings
and independent sets."""

from __future__ import annotations

import heapq
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .graphs import Graph
from .points import PointSet


@dataclass(frozen=True)
class DegreeStats:
    max_degree: int
    mean_degree: float
    histogram: dict


def degree_stats(G: Graph) -> DegreeStats:
    """Maximum degree, mean degree ``2|E|/n`` and the degree histogram."""
    deg = G.degrees
    if G.n == 0:
        return DegreeStats(0, 0.0, {})
    hist = {int(k): int(v) for k, v in sorted(Counter(deg.tolist()).items())}
    return DegreeStats(int(deg.max()), 2.0 * G.num_edges / G.n, hist)


def triangles_per_vertex(G: Graph) -> np.ndarray:
    """Number of triangles through each vertex (position ``v - 1``)."""
    indptr, indices = G.csr0()
    return _kernels.triangles_per_vertex(indptr, indices, G.n)


def total_triangles(G: Graph) -> int:
    return int(triangles_per_vertex(G).sum()) // 3


@dataclass(frozen=True)
class EdgeClassPolicy:
    """Far/close split of pairs by the volume of their rectangle.

    ``n`` is the reference size; for Poisson samples pass the intensity, not
    the realized count.  Logarithms are base 2.
    """

    d: int
    n: float

    @property
    def zeta(self) -> float:
        if self.n < 3:
            raise ValueError("threshold needs n >= 3")
        return 2.0 ** (2 * self.d + 1) * self.d * math.log2(math.log2(self.n)) / self.n

    def is_far(self, volume: float) -> bool:
        return volume > self.zeta


@dataclass(frozen=True)
class EdgeClassification:
    far: np.ndarray
    close: np.ndarray
    far_per_vertex: np.ndarray

    @property
    def max_far_per_vertex(self) -> int:
        return int(self.far_per_vertex.max()) if self.far_per_vertex.size else 0


def classify_edges(P: PointSet, G: Graph, policy: EdgeClassPolicy) -> EdgeClassification:
    """Split the edges of ``G`` into far pairs (volume above the threshold) and close pairs."""
    e = G.edges()
    if e.size == 0:
        empty = np.zeros((0, 2), dtype=np.int64)
        return EdgeClassification(empty, empty, np.zeros(G.n, dtype=np.int64))
    vol = np.prod(np.abs(P.coords[e[:, 0] - 1] - P.coords[e[:, 1] - 1]), axis=1)
    far = vol > policy.zeta
    per_vertex = np.bincount(e[far].ravel() - 1, minlength=G.n)
    return EdgeClassification(e[far], e[~far], per_vertex)


def neighborhood_edge_counts(G: Graph) -> np.ndarray:
    """For each vertex ``v``, the number of edges with both ends in ``N(v)``."""
    indptr, indices = G.csr0()
    return _kernels.neighborhood_edges(indptr, indices, G.n)


def neighborhood_edge_count(G: Graph, v: int) -> int:
    nb = set(G.neighbors(v).tolist())
    return sum(1 for u in nb for w in G.neighbors(u).tolist() if w in nb and u < w)


class CliqueBudgetExceeded(RuntimeError):
    """A clique larger than the search cap exists; its exact size is unknown."""


def max_clique_upto(G: Graph, cap: int) -> int:
    """Exact clique number if it is at most ``cap``.

    Branch and bound over forward neighbourhoods in label order.  Raises
    :class:`CliqueBudgetExceeded` as soon as a clique of size ``cap + 1`` is
    found, so the answer is never silently truncated.
    """
    if not 1 <= cap <= 8:
        raise ValueError("cap must be between 1 and 8")
    if G.n == 0:
        return 0
    adj = [set(G.neighbors(v).tolist()) for v in range(1, G.n + 1)]
    best = 1

    def grow(size: int, cand: set) -> None:
        nonlocal best
        if size > best:
            best = size
            if best > cap:
                raise CliqueBudgetExceeded(f"clique of size {best} exceeds cap {cap}")
        if size + len(cand) <= best:
            return
        for u in sorted(cand):
            cand = cand - {u}
            grow(size + 1, cand & adj[u - 1])
            if size + len(cand) <= best:
                return

    for v in range(1, G.n + 1):
        fwd = {u for u in adj[v - 1] if u > v}
        grow(1, fwd)
    return best


@dataclass(frozen=True)
class ColoringResult:
    colors: np.ndarray  # colour of label v at position v - 1
    count: int

    def is_proper(self, G: Graph) -> bool:
        e = G.edges()
        return not np.any(self.colors[e[:, 0] - 1] == self.colors[e[:, 1] - 1])

    def classes(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.colors == c) + 1 for c in range(self.count)]


def greedy_coloring(G: Graph, order: Sequence[int]) -> ColoringResult:
    """Colour vertices in ``order`` with the smallest colour not used by a neighbour."""
    order = np.asarray(order, dtype=np.int64)
    if order.shape != (G.n,) or not np.array_equal(np.sort(order), np.arange(1, G.n + 1)):
        raise ValueError("order must be a permutation of the labels 1..n")
    colors = np.full(G.n, -1, dtype=np.int64)
    for v in order.tolist():
        used = set(colors[G.neighbors(v) - 1].tolist())
        c = 0
        while c in used:
            c += 1
        colors[v - 1] = c
    return ColoringResult(colors, int(colors.max()) + 1 if G.n else 0)


def dsatur_coloring(G: Graph) -> ColoringResult:
    """DSatur: repeatedly colour the vertex seeing the most distinct colours.

    Ties go to the higher degree, then to the lower label.
    """
    n = G.n
    colors = np.full(n, -1, dtype=np.int64)
    seen = [set() for _ in range(n)]
    deg = G.degrees
    heap = [(0, -int(deg[v]), v + 1) for v in range(n)]
    heapq.heapify(heap)
    done = 0
    while done < n:
        negsat, negdeg, v = heapq.heappop(heap)
        if colors[v - 1] >= 0 or -negsat != len(seen[v - 1]):
            continue  # stale entry
        c = 0
        while c in seen[v - 1]:
            c += 1
        colors[v - 1] = c
        done += 1
        for u in G.neighbors(v).tolist():
            if colors[u - 1] < 0 and c not in seen[u - 1]:
                seen[u - 1].add(c)
                heapq.heappush(heap, (-len(seen[u - 1]), -int(deg[u - 1]), u))
    return ColoringResult(colors, int(colors.max()) + 1 if n else 0)


@dataclass(frozen=True)
class IndependentSetResult:
    vertices: np.ndarray
    size: int

    def is_independent(self, G: Graph) -> bool:
        chosen = np.zeros(G.n + 1, dtype=bool)
        chosen[self.vertices] = True
        e = G.edges()
        return not np.any(chosen[e[:, 0]] & chosen[e[:, 1]])


def caro_wei_bound(G: Graph) -> float:
    """``sum_v 1 / (deg(v) + 1)``, the expected size of the random-permutation set."""
    return float(np.sum(1.0 / (G.degrees + 1.0)))


def _first_in_permutation(G: Graph, rank: np.ndarray) -> np.ndarray:
    indptr, indices = G.csr0()
    deg = G.degrees
    neighbor_rank = rank[indices]
    # minimum neighbour rank per vertex; isolated vertices get +inf
    mins = np.full(G.n, np.iinfo(np.int64).max)
    nz = deg > 0
    if indices.size:
        mins[nz] = np.minimum.reduceat(neighbor_rank, indptr[:-1][nz])
    return rank < mins


def independent_set(G: Graph, strategy: str = "min-degree-greedy", rng: np.random.Generator | None = None) -> IndependentSetResult:
    """Independent set by one of two rules.

    ``min-degree-greedy`` repeatedly takes a vertex of minimum remaining
    degree (lowest label on ties) and deletes its neighbourhood.
    ``random-permutation`` takes ``v`` iff ``v`` precedes all its neighbours
    in a uniform random order.
    """
    if strategy == "random-permutation":
        rng = rng if rng is not None else np.random.default_rng()
        rank = rng.permutation(G.n).astype(np.int64)
        chosen = np.flatnonzero(_first_in_permutation(G, rank)) + 1
        return IndependentSetResult(chosen, int(chosen.size))
    if strategy != "min-degree-greedy":
        raise ValueError(f"unknown strategy {strategy!r}")
    alive = np.ones(G.n + 1, dtype=bool)
    alive[0] = False
    deg = np.concatenate([[0], G.degrees]).astype(np.int64)
    heap = [(int(deg[v]), v) for v in range(1, G.n + 1)]
    heapq.heapify(heap)
    chosen = []
    while heap:
        dv, v = heapq.heappop(heap)
        if not alive[v] or dv != deg[v]:
            continue
        chosen.append(v)
        alive[v] = False
        for u in G.neighbors(v).tolist():
            if alive[u]:
                alive[u] = False
                for w in G.neighbors(u).tolist():
                    if alive[w]:
                        deg[w] -= 1
                        heapq.heappush(heap, (int(deg[w]), w))
    vertices = np.array(sorted(chosen), dtype=np.int64)
    return IndependentSetResult(vertices, len(chosen))


def random_permutation_is_sizes(G: Graph, runs: int, rng: np.random.Generator) -> np.ndarray:
    """Sizes of ``runs`` independent random-permutation independent sets."""
    out = np.empty(runs, dtype=np.int64)
    for t in range(runs):
        out[t] = int(_first_in_permutation(G, rng.permutation(G.n).astype(np.int64)).sum())
    return out
