"""Quasi-Monte Carlo designs of experiments.

Unscrambled Sobol' points (Joe & Kuo direction numbers, Gray-code ordering)
mapped through the marginal laws of an :class:`~mapod.data.InputSet`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import InputSet

__all__ = [
    "UnitHypercubeDesign",
    "UnsupportedDimensionError",
    "sobol_sequence",
    "sample_inputs",
    "flaw_counts",
    "MAX_DIM",
]

_BITS = 52

# (s, a, m_1..m_s) for dimensions 2.. of the new-joe-kuo-6.21201 table.
_JOE_KUO = [
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
    (4, 4, (1, 3, 5, 13)),
    (5, 2, (1, 1, 5, 5, 17)),
    (5, 4, (1, 1, 5, 5, 5)),
    (5, 7, (1, 1, 7, 11, 19)),
    (5, 11, (1, 1, 5, 1, 1)),
    (5, 13, (1, 1, 1, 3, 11)),
    (5, 14, (1, 3, 5, 5, 31)),
    (6, 1, (1, 3, 3, 9, 7, 49)),
    (6, 13, (1, 1, 1, 15, 21, 21)),
    (6, 16, (1, 3, 1, 13, 27, 49)),
]

MAX_DIM = len(_JOE_KUO) + 1


class UnsupportedDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class UnitHypercubeDesign:
    """Points of ``[0, 1)^dim``, one row per design point."""

    dim: int
    points: np.ndarray
    start: int = 1

    def __len__(self) -> int:
        return self.points.shape[0]


def _direction_numbers(dim: int) -> np.ndarray:
    v = np.zeros((dim, _BITS), dtype=np.uint64)
    # first coordinate: van der Corput in base 2
    v[0] = [1 << (_BITS - 1 - k) for k in range(_BITS)]
    for j in range(1, dim):
        s, a, m = _JOE_KUO[j - 1]
        mm = list(m)
        for k in range(s, _BITS):
            new = mm[k - s] ^ (mm[k - s] << s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    new ^= mm[k - i] << i
            mm.append(new)
        v[j] = [mm[k] << (_BITS - 1 - k) for k in range(_BITS)]
    return v


def sobol_sequence(dim: int, n: int, start: int = 1) -> UnitHypercubeDesign:
    """First ``n`` Sobol' points from sequence index ``start``.

    Index 0 is the all-zeros point; the default ``start=1`` skips it so the
    points can be pushed through unbounded inverse CDFs.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if dim > MAX_DIM:
        raise UnsupportedDimensionError(
            f"dimension {dim} exceeds the direction-number table ({MAX_DIM})"
        )
    if n < 0 or start < 0:
        raise ValueError("n and start must be non-negative")
    if n == 0:
        return UnitHypercubeDesign(dim, np.empty((0, dim)), start)

    v = _direction_numbers(dim)
    idx = np.arange(start, start + n, dtype=np.uint64)
    gray = idx ^ (idx >> np.uint64(1))
    x = np.zeros((n, dim), dtype=np.uint64)
    for k in range(_BITS):
        bit = ((gray >> np.uint64(k)) & np.uint64(1)).astype(bool)
        if not bit.any():
            continue
        x[bit] ^= v[:, k]
    points = x.astype(np.float64) / float(1 << _BITS)
    return UnitHypercubeDesign(dim, points, start)


def flaw_counts(n: int, start: int = 1) -> np.ndarray:
    """One flaw on even design indices, two on odd ones (exact 50/50 split)."""
    idx = np.arange(start, start + n)
    return np.where(idx % 2 == 0, 1, 2)


def sample_inputs(specs: InputSet, n: int, start: int = 1) -> np.ndarray:
    """Map a Sobol' design through the marginal laws of ``specs``.

    Dimension ``j`` of the sequence drives ``specs[j]``. Conditional-uniform
    columns are mapped row-wise onto ``[-x_src + lo_offset, hi]``.

    Returns an ``(n, len(specs))`` array in spec order.
    """
    design = sobol_sequence(len(specs), n, start)
    return specs.from_unit(design.points)

