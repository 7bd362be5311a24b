"""Census of empty and viable dyadic boxes.

A dyadic box ``R(i_1, .., i_d)`` of weight ``I = i_1 + .. + i_d`` is empty
when it holds no point, and ``I``-viable when its shift
``R(i_1 + 1, .., i_d + 1)`` is empty.  For moderate weights the number of
empty weight-``I`` boxes should stay below ``2^(I+3) log2(n) / n``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..points import PointSet, boxes_of_weight, dyadic_exponents


@dataclass(frozen=True)
class CensusRow:
    weight: int
    total: int
    empty: int
    viable: int
    shifted_empty: int  # empty weight-(I+d) boxes with every exponent >= 2
    threshold: float

    @property
    def over_threshold(self) -> bool:
        return self.empty > self.threshold


@dataclass(frozen=True)
class BoxCensus:
    d: int
    n: float
    rows: tuple

    @property
    def checked_limit(self) -> float:
        """Weights up to ``log2 n - 2 log2 log2 n`` must have no excess."""
        return math.log2(self.n) - 2 * math.log2(math.log2(self.n))

    @property
    def claim_limit(self) -> float:
        """Weights below ``log2(1/zeta) + 2d`` fall under the threshold statement."""
        zeta = 2.0 ** (2 * self.d + 1) * self.d * math.log2(math.log2(self.n)) / self.n
        return math.log2(1 / zeta) + 2 * self.d

    def row(self, weight: int) -> CensusRow:
        for r in self.rows:
            if r.weight == weight:
                return r
        raise KeyError(weight)

    def violations(self, limit: float | None = None) -> list[int]:
        """Weights ``I <= limit`` whose empty count exceeds the threshold."""
        limit = self.checked_limit if limit is None else limit
        return [r.weight for r in self.rows if r.weight <= limit and r.over_threshold]

    def claim_violations(self) -> list[int]:
        return [r.weight for r in self.rows if r.weight < self.claim_limit and r.over_threshold]

    def shift_mismatches(self) -> list[int]:
        """Weights where the two ways of counting viable boxes disagree."""
        return [r.weight for r in self.rows if r.viable != r.shifted_empty]


def empty_box_census(P: PointSet, n: float, d: int | None = None) -> BoxCensus:
    """Count empty and viable boxes for every weight ``d .. ceil(log2 n) + 2d``.

    ``n`` is the reference size (the intensity for Poisson samples).  Points
    are bucketed once by their dyadic index.
    """
    d = P.d if d is None else d
    if d != P.d:
        raise ValueError("dimension mismatch")
    if n < 3:
        raise ValueError("census needs n >= 3")
    top = math.ceil(math.log2(n)) + 2 * d
    occupied = Counter()
    if P.n:
        exps = dyadic_exponents(P.coords)
        occupied.update(map(tuple, exps[exps.sum(axis=1) <= top + d].tolist()))
    rows = []
    for I in range(d, top + 1):
        boxes = boxes_of_weight(I, d)
        empty = sum(1 for b in boxes if b.exponents not in occupied)
        viable = sum(1 for b in boxes if tuple(e + 1 for e in b.exponents) not in occupied)
        shifted_empty = sum(
            1 for b in boxes_of_weight(I + d, d) if min(b.exponents) >= 2 and b.exponents not in occupied
        )
        rows.append(CensusRow(I, len(boxes), empty, viable, shifted_empty, 2.0 ** (I + 3) * math.log2(n) / n))
    return BoxCensus(d, float(n), tuple(rows))
