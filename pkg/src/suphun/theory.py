"""Closed-form constants and certificates attached to the dyadic polynomial models."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

from .dyadic import Rectangle, as_level, level_volume
from .poly import PiecewisePoly, integrate_poly, sup_norm
from .seminorm import ClassConfig, seminorm_h

MAX_PERM_DIM = 8


def gamma_rd(u: float, r: int, d: int) -> float:
    """Lower bound on ``kappa_m(h)`` as a function of ``u = h / h0``.

    For ``r = 0`` the whole cell is the test set and the bound is ``1 / (1 + u)``.
    """
    if not u > 0:
        raise ValueError("u must be > 0")
    if r < 0 or d < 1:
        raise ValueError("need r >= 0 and d >= 1")
    if r == 0:
        return 1.0 / (1.0 + u)
    a = (2.0 * r * r) ** d
    first = min(1.0 / (u * a), 1.0) / (2.0 * (d + 1))
    second = max(0.0, 1.0 - (2.0 * r * r) ** (d / (d + 1)) * u ** (1.0 / (d + 1))) ** 2
    return max(first, second)


def theta_shrink(h: float, h0: float, r: int, d: int) -> float:
    """Shrink factor of the test cell around the maximizer; 1 when ``r = 0``."""
    if not (h > 0 and h0 > 0):
        raise ValueError("h and h0 must be > 0")
    if r < 0 or d < 1:
        raise ValueError("need r >= 0 and d >= 1")
    if r == 0:
        return 1.0
    u = h / h0
    first = min(1.0 / (u * (2.0 * r * r) ** d), 1.0) / (2.0 * (d + 1))
    if gamma_rd(u, r, d) == first:
        return d / (d + 1) / (2.0 * r * r)
    return (u / (2.0 * r * r)) ** (1.0 / (d + 1))


def kappa_certificate(f: PiecewisePoly, h: float, h0: float | None = None):
    """Ratio ``|int_C f| / ((mu(C) + h) ||f||_inf)`` on the shrunken cell ``C``.

    ``C = (1 - theta) x_* + theta I_*`` where ``I_*`` is the block holding the
    sup of ``|f|`` and ``x_*`` the maximizer. Returns ``(ratio, C)``.
    """
    if f.is_zero:
        raise ValueError("kappa certificate needs f != 0")
    if h0 is None:
        h0 = f.cell_volume
    value, cell, x = sup_norm(f)
    if value == 0.0:
        raise ValueError("kappa certificate needs f != 0")
    theta = theta_shrink(h, h0, f.total_degree(), f.d)
    lo = (1.0 - theta) * x + theta * cell.lo
    hi = (1.0 - theta) * x + theta * cell.hi
    rect = Rectangle(tuple(lo), tuple(hi))
    ratio = abs(integrate_poly(f, rect)) / ((rect.volume + h) * value)
    return ratio, rect


def empirical_kappa(f: PiecewisePoly, h: float, cfg: ClassConfig) -> float:
    """``|f|_h / ||f||_inf`` with the semi-norm over the class ``cfg``.

    A sub-class only lowers ``|f|_h``, so this lower-bounds the ratio over
    all test sets.
    """
    value = sup_norm(f)[0]
    if value == 0.0:
        raise ValueError("empirical kappa needs f != 0")
    return float(seminorm_h(f, h, cfg)) / value


@dataclass(frozen=True)
class PartitionSpec:
    """Block measures of a partition; blocks of infinite measure are only flagged."""

    block_measures: tuple
    has_infinite_blocks: bool = False

    def __post_init__(self):
        m = tuple(float(v) for v in self.block_measures)
        if any(not (v > 0 and math.isfinite(v)) for v in m):
            raise ValueError("block measures must be finite and > 0")
        object.__setattr__(self, "block_measures", m)

    @property
    def h0(self) -> float:
        if not self.block_measures:
            raise ValueError("no blocks of finite measure")
        return min(self.block_measures)

    @classmethod
    def regular(cls, level, support: Rectangle | None = None) -> "PartitionSpec":
        """The cells of ``I(level)`` tiling ``support`` (default unit cube)."""
        level = as_level(level)
        support = support or Rectangle.unit(len(level))
        count = 1
        for j, a, b in zip(level, support.lo, support.hi):
            count *= int(math.ceil(b * 2**j) - math.floor(a * 2**j))
        return cls((level_volume(level),) * count)


def psi_lower(part: PartitionSpec, L: float, n: int) -> float:
    """``psi_n(I, L)``: square root of the sup over ``h`` of ``L/(hn) log(1 + min(M(h), floor(1/(Lh))))``.

    Between breakpoints both ``M`` and the floor are constant and ``L/(hn)``
    decreases, so the sup is approached at a left endpoint. ``M`` is right
    continuous, so its breakpoints (the block measures) are attained. At
    ``h = 1/(L k)`` the floor equals ``k``, which dominates the right limit
    ``k - 1``. The sup is therefore a max over both candidate sets.
    """
    if not L > 0 or n < 1:
        raise ValueError("need L > 0 and n >= 1")
    mu = np.sort(np.asarray(part.block_measures))
    if not len(mu):
        return 0.0
    k = np.arange(1, len(mu) + 1, dtype=float)
    h = np.concatenate([mu, 1.0 / (L * k)])
    floors = np.concatenate([np.floor(1.0 / (L * mu) * (1 + 1e-12)), k])
    M = np.searchsorted(mu, h * (1 + 1e-12), side="right")
    vals = L / (h * n) * np.log1p(np.minimum(M, floors))
    return float(math.sqrt(max(vals.max(), 0.0)))


def minimax_floor(L: float, h0: float, n: int) -> float:
    """``(1/80) min(L, sqrt(L log 2 / (h0 n)), sqrt(log 2) / (h0 sqrt(n)))``."""
    if not (L > 0 and h0 > 0 and n > 0):
        raise ValueError("all arguments must be > 0")
    ln2 = math.log(2.0)
    return min(L, math.sqrt(L * ln2 / (h0 * n)), math.sqrt(ln2) / (h0 * math.sqrt(n))) / 80.0


def b_factor(r: Sequence[int]) -> float:
    """``1 + min over axis orders of sum_j prod_{i <= j} ((2/pi) log(1 + r_i) + 1)``."""
    r = tuple(int(v) for v in r)
    if len(r) > MAX_PERM_DIM:
        raise ValueError(f"b_factor enumerates permutations; d must be <= {MAX_PERM_DIM}")
    lebesgue = [2.0 / math.pi * math.log1p(v) + 1.0 for v in r]
    best = math.inf
    for order in set(permutations(lebesgue)):
        total = float(np.cumprod(order).sum())
        best = min(best, total)
    return 1.0 + best


def kappa_star_floor(r: Sequence[int]) -> float:
    """``1 / (4 (1 + 4 sqrt(prod (r_i + 1))))``."""
    prod = math.prod(int(v) + 1 for v in r)
    return 1.0 / (4.0 * (1.0 + 4.0 * math.sqrt(prod)))
