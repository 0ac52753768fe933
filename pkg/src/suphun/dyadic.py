"""Anisotropic dyadic cells and rectangles.

A cell at level ``j`` with index ``k`` is the half-open box
``prod_i [k_i 2^-j_i, (k_i + 1) 2^-j_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

J_MIN = 0
J_MAX = 40


class LevelRangeError(ValueError):
    """A dyadic level left the configured window."""


Level = tuple


def as_level(j: Sequence[int] | int, d: int | None = None) -> tuple:
    if np.isscalar(j):
        if d is None:
            raise ValueError("scalar level needs an explicit dimension")
        return (int(j),) * d
    j = tuple(int(v) for v in j)
    if not j:
        raise ValueError("level must have length >= 1")
    if d is not None and len(j) != d:
        raise ValueError(f"level {j} does not have dimension {d}")
    return j


def check_level(j: Sequence[int], j_min: int = J_MIN, j_max: int = J_MAX) -> tuple:
    j = as_level(j)
    if any(v < j_min or v > j_max for v in j):
        raise LevelRangeError(f"level {j} outside [{j_min}, {j_max}]")
    return j


def level_volume(j: Sequence[int]) -> float:
    return 2.0 ** (-sum(j))


@dataclass(frozen=True)
class Rectangle:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lo and hi must be non-empty and of equal length")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"degenerate rectangle {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all((x >= self.lo) & (x < self.hi), axis=1)

    @classmethod
    def unit(cls, d: int) -> "Rectangle":
        return cls((0.0,) * d, (1.0,) * d)


@dataclass(frozen=True, order=True)
class DyadicCell:
    level: tuple
    index: tuple

    def __post_init__(self):
        level = as_level(self.level)
        index = tuple(int(v) for v in self.index)
        if len(index) != len(level):
            raise ValueError("level and index dimensions differ")
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "index", index)

    @property
    def d(self) -> int:
        return len(self.level)

    @property
    def width(self) -> np.ndarray:
        return 2.0 ** (-np.asarray(self.level, dtype=float))

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.index, dtype=float) * self.width

    @property
    def hi(self) -> np.ndarray:
        return (np.asarray(self.index, dtype=float) + 1.0) * self.width

    @property
    def volume(self) -> float:
        return level_volume(self.level)

    @property
    def rect(self) -> Rectangle:
        return Rectangle(tuple(self.lo), tuple(self.hi))

    def contains(self, x) -> np.ndarray:
        return self.rect.contains(x)


def cell_of(x, j: Sequence[int]) -> DyadicCell:
    """The unique level-``j`` cell containing the point ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    j = as_level(j, len(x))
    return DyadicCell(j, tuple(cell_indices(x[None, :], j)[0]))


def cell_indices(points: np.ndarray, j: Sequence[int]) -> np.ndarray:
    """Integer indices of the level-``j`` cells holding each row of ``points``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    scale = np.ldexp(1.0, np.asarray(j, dtype=np.int64))
    return np.floor(points * scale).astype(np.int64)


def refine_cell(cell: DyadicCell, l: int, j_max: int = J_MAX) -> list:
    """All ``2^(l d)`` descendants of ``cell`` at level ``j + l``, in lexicographic order."""
    if l < 1:
        raise ValueError("refinement depth must be >= 1")
    new_level = tuple(v + l for v in cell.level)
    if max(new_level) > j_max:
        raise LevelRangeError(f"refining {cell.level} by {l} exceeds j_max={j_max}")
    base = [k << l for k in cell.index]
    return [
        DyadicCell(new_level, tuple(b + o for b, o in zip(base, offs)))
        for offs in product(range(1 << l), repeat=cell.d)
    ]


def level_window(d: int, j_min: int | Sequence[int], j_max: int | Sequence[int]) -> list:
    """Every anisotropic level vector inside the per-axis window, lexicographic."""
    lo = as_level(j_min, d)
    hi = as_level(j_max, d)
    if any(a > b for a, b in zip(lo, hi)):
        raise ValueError("empty level window")
    return [tuple(j) for j in product(*(range(a, b + 1) for a, b in zip(lo, hi)))]


def joint_codes(*keys: np.ndarray) -> list:
    """Encode integer key rows of several arrays into comparable int64 codes.

    The same radix is used for all inputs so codes can be matched across arrays.
    """
    non_empty = [k for k in keys if len(k)]
    if not non_empty:
        return [np.zeros(0, dtype=np.int64) for _ in keys]
    stacked = np.concatenate(non_empty, axis=0)
    lo = stacked.min(axis=0)
    span = stacked.max(axis=0) - lo + 1
    if np.prod(span.astype(float)) > 2.0**62:
        raise OverflowError("key range too large to encode")
    out = []
    for k in keys:
        if not len(k):
            out.append(np.zeros(0, dtype=np.int64))
            continue
        shifted = (k - lo).astype(np.int64)
        code = np.zeros(len(k), dtype=np.int64)
        for i in range(k.shape[1]):
            code = code * int(span[i]) + shifted[:, i]
        out.append(code)
    return out


def unique_rows_counts(keys: np.ndarray):
    """Unique integer rows (lexicographic) and their multiplicities."""
    if not len(keys):
        return keys.reshape(0, keys.shape[1] if keys.ndim == 2 else 1), np.zeros(0, dtype=np.int64)
    (codes,) = joint_codes(keys)
    order = np.argsort(codes, kind="stable")
    sc = codes[order]
    starts = np.flatnonzero(np.r_[True, sc[1:] != sc[:-1]])
    counts = np.diff(np.r_[starts, len(sc)])
    return keys[order[starts]], counts.astype(np.int64)
