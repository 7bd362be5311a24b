"""Compiled inner loops for the builders and statistics."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _grow(buf, size):
    out = np.empty((buf.shape[0] * 2, 2), dtype=np.int64)
    out[:size] = buf[:size]
    return out


@njit(cache=True)
def orthant_sweep_edges(xs, order, upper_only):
    """Edges found by scanning each vertex's right-hand side along axis 0.

    ``xs`` is ``(n, d)``, ``order`` sorts rows by axis 0.  For vertex ``a``
    the points with a larger first coordinate are visited in increasing
    first coordinate; a visited ``b`` is adjacent to ``a`` iff no earlier
    visited ``c`` in the same orthant around ``a`` (on axes 1..d-1) is closer
    to ``a`` than ``b`` on every one of those axes.  Only earlier neighbours
    need checking because the closer-on-every-axis relation is transitive.
    With ``upper_only`` set, only points above ``a`` on every axis are
    visited, which yields the cover pairs of the dominance order.
    """
    n, d = xs.shape
    cap = max(16, 8 * n)
    edges = np.empty((cap, 2), dtype=np.int64)
    m = 0
    nb_orth = np.empty(n, dtype=np.int64)
    nb_abs = np.empty((n, max(d - 1, 1)))
    for pos in range(n):
        a = order[pos]
        found = 0
        for qpos in range(pos + 1, n):
            b = order[qpos]
            orth = 0
            skip = False
            for k in range(1, d):
                diff = xs[b, k] - xs[a, k]
                if diff > 0:
                    orth |= 1 << (k - 1)
                elif upper_only:
                    skip = True
                    break
            if skip:
                continue
            blocked = False
            for t in range(found):
                if nb_orth[t] != orth:
                    continue
                closer = True
                for k in range(1, d):
                    if nb_abs[t, k - 1] >= abs(xs[b, k] - xs[a, k]):
                        closer = False
                        break
                if closer:
                    blocked = True
                    break
            if blocked:
                continue
            nb_orth[found] = orth
            for k in range(1, d):
                nb_abs[found, k - 1] = abs(xs[b, k] - xs[a, k])
            found += 1
            if m == edges.shape[0]:
                edges = _grow(edges, m)
            edges[m, 0] = a
            edges[m, 1] = b
            m += 1
    return edges[:m]


@njit(cache=True)
def grid2d_edges(xs, ys, grid):
    """Planar box-Delaunay edges using a ``grid x grid`` bucket index.

    For vertex ``a`` the columns to its right are visited in order.  Only
    cells meeting the open window ``(lo, hi)`` of y-values that can still
    hold a neighbour are inspected, and within a column the candidates are
    processed in increasing x.  The window narrows to the last neighbour
    found above and below ``a``.
    """
    n = xs.shape[0]
    ncell = grid * grid
    col = np.minimum((xs * grid).astype(np.int64), grid - 1)
    row = np.minimum((ys * grid).astype(np.int64), grid - 1)
    cell = col * grid + row
    counts = np.zeros(ncell + 1, dtype=np.int64)
    for i in range(n):
        counts[cell[i] + 1] += 1
    for c in range(ncell):
        counts[c + 1] += counts[c]
    members = np.empty(n, dtype=np.int64)
    fill = counts[:-1].copy()
    for i in range(n):
        members[fill[cell[i]]] = i
        fill[cell[i]] += 1

    # next_col[r, c]: first column >= c whose cell in row r is occupied
    next_col = np.full((grid, grid + 1), grid, dtype=np.int64)
    for r in range(grid):
        for c in range(grid - 1, -1, -1):
            base = c * grid + r
            next_col[r, c] = c if counts[base + 1] > counts[base] else next_col[r, c + 1]

    cap = max(16, 8 * n)
    edges = np.empty((cap, 2), dtype=np.int64)
    m = 0
    cand = np.empty(n, dtype=np.int64)
    for a in range(n):
        xa = xs[a]
        ya = ys[a]
        hi = 2.0
        lo = -1.0
        c = col[a]
        while c < grid:
            r0 = 0 if lo < 0 else min(int(lo * grid), grid - 1)
            r1 = grid - 1 if hi > 1 else min(int(hi * grid), grid - 1)
            k = 0
            for r in range(r0, r1 + 1):
                base = c * grid + r
                for t in range(counts[base], counts[base + 1]):
                    b = members[t]
                    if xs[b] > xa and lo < ys[b] < hi:
                        # insertion by x keeps the candidate list sorted
                        j = k
                        while j > 0 and xs[cand[j - 1]] > xs[b]:
                            cand[j] = cand[j - 1]
                            j -= 1
                        cand[j] = b
                        k += 1
            for j in range(k):
                b = cand[j]
                yb = ys[b]
                if yb > ya:
                    if yb < hi:
                        hi = yb
                    else:
                        continue
                else:
                    if yb > lo:
                        lo = yb
                    else:
                        continue
                if m == edges.shape[0]:
                    edges = _grow(edges, m)
                edges[m, 0] = a
                edges[m, 1] = b
                m += 1
            # jump to the next column with an occupied cell inside the window
            r0 = 0 if lo < 0 else min(int(lo * grid), grid - 1)
            r1 = grid - 1 if hi > 1 else min(int(hi * grid), grid - 1)
            nxt = grid
            for r in range(r0, r1 + 1):
                if next_col[r, c + 1] < nxt:
                    nxt = next_col[r, c + 1]
            c = nxt
    return edges[:m]


@njit(cache=True)
def triangles_per_vertex(indptr, indices, n):
    """Per-vertex triangle counts from a sorted CSR adjacency (0-based)."""
    tri = np.zeros(n, dtype=np.int64)
    for u in range(n):
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if v <= u:
                continue
            # count w > v common to both lists
            i = indptr[u]
            j = indptr[v]
            iu = indptr[u + 1]
            jv = indptr[v + 1]
            while i < iu and j < jv:
                a = indices[i]
                b = indices[j]
                if a < b:
                    i += 1
                elif b < a:
                    j += 1
                else:
                    if a > v:
                        tri[u] += 1
                        tri[v] += 1
                        tri[a] += 1
                    i += 1
                    j += 1
    return tri


@njit(cache=True)
def neighborhood_edges(indptr, indices, n):
    """For each vertex, the number of edges inside its neighbourhood."""
    out = np.zeros(n, dtype=np.int64)
    for u in range(n):
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if v <= u:
                continue
            i = indptr[u]
            j = indptr[v]
            while i < indptr[u + 1] and j < indptr[v + 1]:
                a = indices[i]
                b = indices[j]
                if a < b:
                    i += 1
                elif b < a:
                    j += 1
                else:
                    # u, v, a form a triangle; edge uv lies in N(a)
                    out[a] += 1
                    i += 1
                    j += 1
    return out


@njit(cache=True)
def sweep_process(xs, m):
    """Shrinking-box sweep over index tuples in ``{1..m}^(d-1)``.

    ``xs`` must be sorted by its last column.  Tuples are visited in
    lexicographic order, flattened with the first index most significant.
    Returns ``(S, S_prev, witness)`` as flat arrays; ``witness`` holds a row
    of ``xs`` or -1.
    """
    n, d = xs.shape
    d1 = d - 1
    total = m**d1
    S = np.ones(total)
    Sp = np.zeros(total)
    W = np.full(total, -1, dtype=np.int64)
    stride = np.empty(d1, dtype=np.int64)
    s = 1
    for k in range(d1 - 1, -1, -1):
        stride[k] = s
        s *= m
    idx = np.zeros(d1, dtype=np.int64)
    bound = np.empty(d1)
    last = xs[:, d - 1].copy()
    for flat in range(total):
        rem = flat
        for k in range(d1):
            idx[k] = rem // stride[k]
            rem -= idx[k] * stride[k]
        sp = 0.0
        for k in range(d1):
            if idx[k] > 0:
                v = S[flat - stride[k]]
                if v > sp:
                    sp = v
        Sp[flat] = sp
        for k in range(d1):
            bound[k] = 2.0 ** (-(idx[k] + 1))
        start = np.searchsorted(last, sp, side="right")
        for p in range(start, n):
            inside = True
            for k in range(d1):
                if xs[p, k] > bound[k]:
                    inside = False
                    break
            if inside:
                W[flat] = p
                S[flat] = last[p]
                break
    return S, Sp, W


@njit(cache=True)
def minimal_rows(xs):
    """Rows of ``xs`` (sorted by column 0) not dominated by any other row."""
    n, d = xs.shape
    keep = np.empty(n, dtype=np.int64)
    found = 0
    for p in range(n):
        dominated = False
        for t in range(found):
            q = keep[t]
            below = True
            for k in range(1, d):
                if xs[q, k] >= xs[p, k]:
                    below = False
                    break
            if below:
                dominated = True
                break
        if not dominated:
            keep[found] = p
            found += 1
    return keep[:found]
