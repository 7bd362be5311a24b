"""Deterministic seed derivation.

Every random stream in the package is keyed by a 64-bit integer derived from
a master seed and a tuple of small integer indices (trial number, axis, block
number, ...).  The mixing step is the SplitMix64 finalizer, a bijection on
64-bit integers, so for a fixed prefix the map from the last index to the
derived seed is injective and trials never share a stream.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """SplitMix64 output function applied to ``x`` (bijective on 64 bits)."""
    z = (x + _GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mix64` over a ``uint64`` array (wrapping arithmetic)."""
    z = np.asarray(x, dtype=np.uint64) + np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_seed(master: int, *indices: int) -> int:
    """Fold ``indices`` into ``master`` one at a time.

    Each step computes ``mix64(state ^ mix64(index))``.  Both the inner and the
    outer map are bijections, so distinct indices at any position give
    distinct seeds for the same prefix.

    >>> derive_seed(7, 0) != derive_seed(7, 1)
    True
    """
    state = int(master) & MASK64
    for index in indices:
        state = mix64(state ^ mix64(int(index) & MASK64))
    return state


def rng_for(master: int, *indices: int) -> np.random.Generator:
    """A numpy generator on the stream ``derive_seed(master, *indices)``."""
    return np.random.Generator(np.random.PCG64(derive_seed(master, *indices)))


def uniform_from_seed(seeds: np.ndarray) -> np.ndarray:
    """Map 64-bit seeds to uniforms in (0, 1) through one mixing round."""
    z = mix64_array(seeds)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
