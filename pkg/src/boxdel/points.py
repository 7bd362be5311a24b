"""Point sets in the open unit cube, geometric primitives and dyadic indexing.

Coordinates are backed by per-axis digit streams.  A binary axis stores its
digits in 64-bit blocks: block 0 is drawn when the point set is sampled and
determines the floating point view (its top 53 bits), further blocks are drawn
on demand from a stream keyed by ``(seed, axis, block)``.  Revealing more
digits therefore never changes digits that were already revealed, and digits
are never recomputed from the floating point view.

Axes may instead carry base-``L`` digits for ``L`` not a power of two.  Those
digits are produced by rejection sampling from raw random bits so every digit
is exactly uniform on ``0..L-1``.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as _sps

from .seeding import derive_seed, rng_for, uniform_from_seed

_TAG_BLOCK = 0x424C4B
_TAG_RESAMPLE = 0x525331
_TAG_RADIX = 0x524458
_TAG_POISSON = 0x504F49
_TAG_POINTS = 0x505453

_U64 = np.uint64
_SCALE53 = 2.0**-53


def _power_of_two_exponent(radix: int) -> int | None:
    if radix >= 2 and radix & (radix - 1) == 0:
        return radix.bit_length() - 1
    return None


class _BinaryAxis:
    """Base-2 digit stream for one axis of every point."""

    radix = 2

    def __init__(self, seed: int, axis: int, block0: np.ndarray):
        self.seed = seed
        self.axis = axis
        self.blocks = [np.asarray(block0, dtype=_U64)]

    @property
    def revealed(self) -> int:
        return 64 * len(self.blocks)

    def _ensure(self, block: int, owner: "PointSet") -> None:
        while len(self.blocks) <= block:
            owner._check_extendable()
            b = len(self.blocks)
            rng = rng_for(self.seed, _TAG_BLOCK, self.axis, b)
            self.blocks.append(rng.bit_generator.random_raw(self.blocks[0].size).astype(_U64))

    def window(self, start: int, count: int, owner: "PointSet") -> np.ndarray:
        """Bits ``start .. start+count-1`` (1-based, at most 64) as integers."""
        n = self.blocks[0].size
        if count == 0:
            return np.zeros(n, dtype=_U64)
        first = (start - 1) // 64
        last = (start + count - 2) // 64
        self._ensure(last, owner)
        off = (start - 1) % 64
        hi = self.blocks[first]
        if first == last:
            return (hi << _U64(off)) >> _U64(64 - count)
        nhi = 64 - off
        nlo = count - nhi
        lo = self.blocks[last]
        top = (hi & _U64((1 << nhi) - 1)) << _U64(nlo)
        return top | (lo >> _U64(64 - nlo))


class _RadixAxis:
    """Base-``radix`` digit stream, ``radix`` not a power of two."""

    def __init__(self, seed: int, axis: int, radix: int, chunk0: np.ndarray):
        self.seed = seed
        self.axis = axis
        self.radix = radix
        self.chunk = chunk0.shape[1]
        self.chunks = [np.asarray(chunk0, dtype=np.int64)]

    @staticmethod
    def chunk_width(radix: int) -> int:
        # enough digits that the first chunk carries at least 64 bits
        return math.ceil(64 / math.log2(radix))

    @staticmethod
    def draw(rng: np.random.Generator, radix: int, shape) -> np.ndarray:
        bits = (radix - 1).bit_length()
        mask = _U64((1 << bits) - 1)
        out = np.full(shape, -1, dtype=np.int64)
        flat = out.reshape(-1)
        todo = np.arange(flat.size)
        while todo.size:
            cand = (rng.bit_generator.random_raw(todo.size) & mask).astype(np.int64)
            ok = cand < radix
            flat[todo[ok]] = cand[ok]
            todo = todo[~ok]
        return out

    @property
    def revealed(self) -> int:
        return self.chunk * len(self.chunks)

    def _ensure(self, chunk: int, owner: "PointSet") -> None:
        while len(self.chunks) <= chunk:
            owner._check_extendable()
            c = len(self.chunks)
            rng = rng_for(self.seed, _TAG_RADIX, self.axis, c)
            n = self.chunks[0].shape[0]
            self.chunks.append(self.draw(rng, self.radix, (n, self.chunk)))

    def digit(self, position: int, owner: "PointSet") -> np.ndarray:
        c, k = divmod(position - 1, self.chunk)
        self._ensure(c, owner)
        return self.chunks[c][:, k]

    @staticmethod
    def to_float(chunk0: np.ndarray, radix: int) -> np.ndarray:
        width = chunk0.shape[1]
        denom = radix**width
        out = np.empty(chunk0.shape[0])
        for row, digits in enumerate(chunk0.tolist()):
            num = 0
            for dig in digits:
                num = num * radix + dig
            out[row] = num / denom  # int / int is correctly rounded
        return out


class PointSet:
    """Labelled points ``p_1 .. p_n`` in ``(0, 1)^d``.

    Labels run from 1 to n; label ``l`` is row ``l - 1`` of :attr:`coords`.
    Axes are numbered from 0.  Use :func:`sample_uniform`,
    :func:`sample_poissonised` or :meth:`from_coords` to construct one.
    """

    def __init__(self, coords: np.ndarray, axes: list, seed: int):
        coords = np.array(coords, dtype=np.float64, copy=True).reshape(-1, len(axes))
        coords.setflags(write=False)
        self._coords = coords
        self._axes = axes
        self.seed = int(seed)
        self._frozen = False
        self._lock = threading.Lock()

    # construction -----------------------------------------------------
    @classmethod
    def from_coords(cls, coords: Sequence[Sequence[float]] | np.ndarray, seed: int = 0) -> "PointSet":
        """Wrap explicit coordinates, checking the point-set invariants.

        The first 64 binary digits of each coordinate are taken from its
        exact binary value; digits past position 64 come from the stream
        keyed by ``seed``.
        """
        arr = np.asarray(coords, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("coords must be a 2-d array of shape (n, d)")
        check_invariants(arr)
        axes = []
        for axis in range(arr.shape[1]):
            block0 = np.array([int(x * 2.0**64) for x in arr[:, axis].tolist()], dtype=_U64)
            axes.append(_BinaryAxis(seed, axis, block0))
        return cls(arr, axes, seed)

    # basic accessors ----------------------------------------------------
    @property
    def n(self) -> int:
        return self._coords.shape[0]

    @property
    def d(self) -> int:
        return len(self._axes)

    @property
    def coords(self) -> np.ndarray:
        """Read-only ``(n, d)`` floating point view."""
        return self._coords

    @property
    def labels(self) -> np.ndarray:
        return np.arange(1, self.n + 1)

    def point(self, label: int) -> np.ndarray:
        self._check_label(label)
        return self._coords[label - 1]

    def radix(self, axis: int) -> int:
        return self._axes[axis].radix

    def revealed(self, axis: int) -> int:
        """Number of digits of ``axis`` materialized so far."""
        return self._axes[axis].revealed

    def _check_label(self, label: int) -> None:
        if not 1 <= int(label) <= self.n:
            raise ValueError(f"label {label} outside 1..{self.n}")

    # digit streams ------------------------------------------------------
    def freeze(self) -> "PointSet":
        """Forbid further digit extension; the set is then safe to share."""
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def _check_extendable(self) -> None:
        if self._frozen:
            raise RuntimeError("point set is frozen; digit streams cannot be extended")

    def _rows(self, values: np.ndarray, labels) -> np.ndarray:
        if labels is None:
            return values
        return values[np.asarray(labels, dtype=np.int64) - 1]

    def bits(self, axis: int, start: int, count: int, labels=None) -> np.ndarray:
        """Binary digits ``start .. start+count-1`` (1-based) as ``uint64``.

        ``count`` may be at most 64.  The first digit returned is the most
        significant bit of the result.
        """
        ax = self._axes[axis]
        if not isinstance(ax, _BinaryAxis):
            raise ValueError(f"axis {axis} carries base-{ax.radix} digits, not bits")
        if start < 1 or not 0 <= count <= 64:
            raise ValueError("need start >= 1 and 0 <= count <= 64")
        with self._lock:
            return self._rows(ax.window(start, count, self), labels)

    def bit_prefix(self, axis: int, length: int, labels=None) -> np.ndarray:
        """The first ``length`` bits of ``axis`` as an integer (``length <= 64``)."""
        return self.bits(axis, 1, length, labels)

    def digit(self, axis: int, position: int, radix: int = 2, labels=None) -> np.ndarray:
        """The ``position``-th base-``radix`` digit (1-based) as ``int64``.

        On a binary axis a power-of-two radix ``2^b`` regroups consecutive
        bits, so digit ``m`` is bits ``(m-1)b+1 .. mb``.
        """
        ax = self._axes[axis]
        if position < 1:
            raise ValueError("digit positions start at 1")
        if isinstance(ax, _BinaryAxis):
            b = _power_of_two_exponent(radix)
            if b is None:
                raise ValueError(f"axis {axis} is binary; base {radix} digits need a radix axis")
            return self.bits(axis, (position - 1) * b + 1, b, labels).astype(np.int64)
        if radix != ax.radix:
            raise ValueError(f"axis {axis} carries base-{ax.radix} digits")
        with self._lock:
            return self._rows(ax.digit(position, self), labels).copy()

    def digit_prefix(self, axis: int, length: int, radix: int = 2, labels=None) -> np.ndarray:
        """Integer value of the first ``length`` base-``radix`` digits."""
        if radix**length >= 2**63:
            raise ValueError("prefix does not fit in 63 bits")
        out = np.zeros(self.n if labels is None else len(labels), dtype=np.int64)
        for m in range(1, length + 1):
            out = out * radix + self.digit(axis, m, radix, labels)
        return out

    # views ----------------------------------------------------------------
    def project(self, r: int) -> "PointSet":
        """View onto the first ``r`` coordinates, sharing digit streams."""
        if not 1 <= r <= self.d:
            raise ValueError(f"projection dimension {r} outside 1..{self.d}")
        view = PointSet(self._coords[:, :r], self._axes[:r], self.seed)
        view._lock = self._lock
        view._frozen = self._frozen
        return view

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"PointSet(n={self.n}, d={self.d}, seed={self.seed})"


def check_invariants(coords: np.ndarray) -> None:
    """Raise ``ValueError`` unless coordinates lie in (0,1) in general position."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.size and not (np.all(coords > 0.0) and np.all(coords < 1.0)):
        raise ValueError("coordinates must lie strictly inside (0, 1)")
    for axis in range(coords.shape[1] if coords.ndim == 2 else 0):
        col = np.sort(coords[:, axis])
        if col.size > 1 and np.any(col[1:] == col[:-1]):
            raise ValueError(f"two points share a value on axis {axis}")


def _bad_rows(values: np.ndarray, zero: np.ndarray) -> np.ndarray:
    bad = zero.copy()
    _, first = np.unique(values, return_index=True)
    dup = np.ones(values.size, dtype=bool)
    dup[first] = False
    return bad | dup


class _LazyStream:
    """Generator created on first use; most samples never need a redraw."""

    def __init__(self, *key: int):
        self._key = key
        self._rng = None

    def _get(self) -> np.random.Generator:
        if self._rng is None:
            self._rng = rng_for(*self._key)
        return self._rng

    @property
    def bit_generator(self):
        return self._get().bit_generator

    def __getattr__(self, name):
        return getattr(self._get(), name)


def sample_uniform(n: int, d: int, seed: int, radices: Mapping[int, int] | None = None) -> PointSet:
    """Draw ``n`` independent uniform points of ``(0, 1)^d``.

    Args:
        n: number of points, ``n >= 0``.
        d: dimension, ``d >= 1``.
        seed: 64-bit seed of record.
        radices: optional map from axis to a digit base that is not a power
            of two; those axes carry base-``L`` digit streams.

    Coordinates equal to 0 and values repeated on an axis are redrawn, so the
    result is in general position.
    """
    if n < 0 or d < 1:
        raise ValueError("need n >= 0 and d >= 1")
    radices = dict(radices or {})
    coords = np.empty((n, d))
    axes: list = []
    for axis in range(d):
        resample = _LazyStream(seed, _TAG_RESAMPLE, axis)
        radix = radices.get(axis, 2)
        if _power_of_two_exponent(radix) is not None:
            block0 = rng_for(seed, _TAG_BLOCK, axis, 0).bit_generator.random_raw(n).astype(_U64)
            while True:
                top = block0 >> _U64(11)
                bad = _bad_rows(top, top == 0)
                if not bad.any():
                    break
                block0[bad] = resample.bit_generator.random_raw(int(bad.sum())).astype(_U64)
            coords[:, axis] = top.astype(np.float64) * _SCALE53
            axes.append(_BinaryAxis(seed, axis, block0))
        else:
            width = _RadixAxis.chunk_width(radix)
            chunk0 = _RadixAxis.draw(rng_for(seed, _TAG_RADIX, axis, 0), radix, (n, width))
            while True:
                vals = _RadixAxis.to_float(chunk0, radix)
                bad = _bad_rows(vals, vals == 0.0)
                if not bad.any():
                    break
                chunk0[bad] = _RadixAxis.draw(resample, radix, (int(bad.sum()), width))
            coords[:, axis] = vals
            axes.append(_RadixAxis(seed, axis, radix, chunk0))
    return PointSet(coords, axes, seed)


def poisson_counts(intensity: float, seeds: np.ndarray | Iterable[int]) -> np.ndarray:
    """Poisson(``intensity``) counts, one per seed, by inversion of a hashed uniform."""
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    seeds = np.asarray(seeds, dtype=np.uint64)
    tagged = seeds ^ _U64(derive_seed(0, _TAG_POISSON))
    if intensity == 0:
        return np.zeros(seeds.shape, dtype=np.int64)
    return _sps.poisson.ppf(uniform_from_seed(tagged), intensity).astype(np.int64)


def sample_poissonised(intensity: float, d: int, seed: int, radices: Mapping[int, int] | None = None) -> PointSet:
    """Poisson process of the given intensity on ``(0, 1)^d``.

    The count is Poisson(``intensity``); given the count the points are
    i.i.d. uniform, drawn as by :func:`sample_uniform`.
    """
    count = int(poisson_counts(intensity, [seed & (2**64 - 1)])[0])
    return sample_uniform(count, d, derive_seed(seed, _TAG_POINTS), radices)


# geometry ------------------------------------------------------------------


@dataclass(frozen=True)
class OpenRect:
    """Open axis-parallel rectangle; membership is strict on both sides."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("dimension mismatch")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("need lower < upper on every axis")

    @property
    def d(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return math.prod(hi - lo for lo, hi in zip(self.lower, self.upper))


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x, y


def open_rect(x, y) -> OpenRect:
    """The open rectangle ``R[x, y]`` spanned by two points."""
    x, y = _pair(x, y)
    return OpenRect(tuple(np.minimum(x, y).tolist()), tuple(np.maximum(x, y).tolist()))


def rect_contains(rect: OpenRect, z) -> bool:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (rect.d,):
        raise ValueError("dimension mismatch")
    return bool(np.all((np.asarray(rect.lower) < z) & (z < np.asarray(rect.upper))))


def dominates(p, q) -> bool:
    """True iff ``p < q`` on every coordinate (written ``p ≺ q``)."""
    p, q = _pair(p, q)
    return bool(np.all(p < q))


def rect_volume(x, y) -> float:
    """Product of the side lengths ``|x_k - y_k|``."""
    x, y = _pair(x, y)
    return math.prod(np.abs(x - y).tolist())


# dyadic boxes ------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class DyadicIndex:
    """Exponents of the dyadic box ``prod_k [2^-i_k, 2^(1-i_k))``."""

    exponents: tuple

    def __post_init__(self):
        if any(int(i) < 1 for i in self.exponents):
            raise ValueError("dyadic exponents must be positive")

    @property
    def weight(self) -> int:
        return sum(self.exponents)

    @property
    def d(self) -> int:
        return len(self.exponents)

    def shifted(self, by: int = 1) -> "DyadicIndex":
        return DyadicIndex(tuple(i + by for i in self.exponents))


def dyadic_exponents(coords: np.ndarray) -> np.ndarray:
    """Vectorized exponents: ``i`` with ``2^-i <= x < 2^(1-i)``, exact via frexp."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.size and not (np.all(coords > 0.0) and np.all(coords < 1.0)):
        raise ValueError("coordinates must lie strictly inside (0, 1)")
    _, e = np.frexp(coords)  # x = m 2^e with 0.5 <= m < 1
    return (1 - e).astype(np.int64)


def dyadic_index(x) -> DyadicIndex:
    """Dyadic box index of a point of ``(0, 1)^d``.

    >>> dyadic_index([0.3, 0.6])
    DyadicIndex(exponents=(2, 1))
    """
    return DyadicIndex(tuple(dyadic_exponents(np.atleast_1d(x)).tolist()))


def dyadic_box(index: DyadicIndex) -> tuple[np.ndarray, np.ndarray]:
    """Half-open box ``[lower, upper)`` of a dyadic index."""
    e = np.asarray(index.exponents, dtype=np.float64)
    return np.exp2(-e), np.exp2(1.0 - e)


def in_dyadic_box(index: DyadicIndex, x) -> bool:
    lower, upper = dyadic_box(index)
    x = np.asarray(x, dtype=np.float64)
    return bool(np.all((lower <= x) & (x < upper)))


def boxes_of_weight(I: int, d: int) -> list[DyadicIndex]:
    """All dyadic indices of weight ``I`` in dimension ``d``, in lexicographic order.

    These are the compositions of ``I`` into ``d`` positive parts, so there are
    ``C(I-1, d-1)`` of them.
    """
    if I < d:
        return []
    out = []
    for cuts in itertools.combinations(range(1, I), d - 1):
        bounds = (0,) + cuts + (I,)
        out.append(DyadicIndex(tuple(b - a for a, b in zip(bounds, bounds[1:]))))
    return out


# point files -------------------------------------------------------------------


def write_points(P: PointSet, path: str | Path) -> None:
    """Write ``"d n"`` then one line of ``d`` coordinates per point (17 digits)."""
    lines = [f"{P.d} {P.n}"]
    lines += [" ".join(f"{x:.17g}" for x in row) for row in P.coords.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_points(path: str | Path, seed: int = 0) -> PointSet:
    """Load a point file, re-verifying the invariants."""
    tokens = Path(path).read_text().split()
    if len(tokens) < 2:
        raise ValueError("point file lacks the 'd n' header")
    d, n = int(tokens[0]), int(tokens[1])
    body = tokens[2:]
    if d < 1 or n < 0 or len(body) != d * n:
        raise ValueError(f"point file declares {n} points in dimension {d} but holds {len(body)} values")
    coords = np.array([float(t) for t in body]).reshape(n, d)
    return PointSet.from_coords(coords, seed=seed)
