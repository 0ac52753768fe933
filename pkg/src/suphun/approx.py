"""Projection of smooth functions onto dyadic polynomial models and smoothness bookkeeping."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .dyadic import Rectangle, as_level
from .poly import PiecewisePoly, _contract_axis, eval_poly

CHECK_ORDER = 8


@lru_cache(maxsize=64)
def chebyshev_nodes(r: int) -> np.ndarray:
    """First-kind Chebyshev nodes of order ``r`` mapped to ``[0, 1]``; the midpoint for ``r = 0``."""
    k = np.arange(r + 1)
    u = (1.0 - np.cos((2 * k + 1) * np.pi / (2 * (r + 1)))) / 2.0
    u.setflags(write=False)
    return u


@lru_cache(maxsize=64)
def _inverse_vandermonde(r: int) -> np.ndarray:
    V = np.vander(chebyshev_nodes(r), r + 1, increasing=True)
    inv = np.linalg.inv(V)
    inv.setflags(write=False)
    return inv


def _support_keys(level, support: Rectangle) -> np.ndarray:
    ranges = []
    for j, a, b in zip(level, support.lo, support.hi):
        scale = 2.0**j
        ranges.append(np.arange(math.floor(a * scale), math.ceil(b * scale)))
    grids = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1).astype(np.int64)


def project_smooth(f: Callable, degrees, level, support: Rectangle) -> PiecewisePoly:
    """Tensor Chebyshev interpolant of ``f`` on every level-``level`` cell meeting ``support``.

    ``f`` maps an ``(m, d)`` array of points to ``m`` values.
    """
    level = as_level(level, support.d)
    degrees = as_level(degrees, support.d)
    keys = _support_keys(level, support)
    nodes = [chebyshev_nodes(r) for r in degrees]
    local = np.stack(np.meshgrid(*nodes, indexing="ij"), axis=-1).reshape(-1, support.d)
    width = 2.0 ** (-np.asarray(level, dtype=float))
    pts = (keys[:, None, :] + local[None, :, :]) * width
    vals = np.asarray(f(pts.reshape(-1, support.d)), dtype=float)
    coefs = vals.reshape((len(keys),) + tuple(r + 1 for r in degrees))
    for i, r in enumerate(degrees):
        coefs = _contract_axis(coefs, i, _inverse_vandermonde(r))
    return PiecewisePoly(level, degrees, keys, coefs)


def approx_error(f: Callable, g: PiecewisePoly, grid_per_axis: int = 64, support: Rectangle | None = None) -> float:
    """``max |f - g|`` over a per-cell tensor grid; a lower bound of the sup distance.

    Each cell of ``g``'s level is probed at ``i / grid_per_axis`` (half-open)
    plus order-8 Chebyshev points. Cells are those of ``g`` and, when given,
    those meeting ``support``.
    """
    if grid_per_axis < 17:
        raise ValueError("grid_per_axis must be >= 17")
    keys = g.keys
    if support is not None:
        keys = np.unique(np.concatenate([keys, _support_keys(g.level, support)]), axis=0)
    if not len(keys):
        return 0.0
    axis = np.union1d(np.arange(grid_per_axis) / grid_per_axis, chebyshev_nodes(CHECK_ORDER))
    local = np.stack(np.meshgrid(*([axis] * g.d), indexing="ij"), axis=-1).reshape(-1, g.d)
    width = 2.0 ** (-np.asarray(g.level, dtype=float))
    best = 0.0
    chunk = max(1, 2**20 // len(local))
    for start in range(0, len(keys), chunk):
        pts = ((keys[start : start + chunk, None, :] + local[None, :, :]) * width).reshape(-1, g.d)
        diff = np.abs(np.asarray(f(pts), dtype=float) - eval_poly(g, pts))
        best = max(best, float(diff.max()))
    return best


@dataclass(frozen=True)
class SmoothnessSpec:
    """Per-axis smoothness exponents, their seminorms and a sup bound."""

    beta: tuple
    seminorms: tuple
    sup_bound: float = 1.0

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        seminorms = tuple(float(v) for v in self.seminorms)
        if not beta or len(beta) != len(seminorms):
            raise ValueError("beta and seminorms must be non-empty and of equal length")
        if any(b <= 0 for b in beta) or any(v <= 0 for v in seminorms):
            raise ValueError("beta and seminorms must be > 0")
        if not self.sup_bound > 0:
            raise ValueError("sup_bound must be > 0")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "seminorms", seminorms)

    @property
    def d(self) -> int:
        return len(self.beta)

    @property
    def beta_harmonic(self) -> float:
        return self.d / sum(1.0 / b for b in self.beta)


def rate_params(spec: SmoothnessSpec):
    """``(beta, L_beta, beta / (2 beta + d))`` with ``beta`` the harmonic aggregate."""
    d = spec.d
    beta = spec.beta_harmonic
    L_beta = math.prod(L ** (beta / (d * b)) for L, b in zip(spec.seminorms, spec.beta))
    return beta, L_beta, beta / (2.0 * beta + d)


def approx_bound(spec: SmoothnessSpec, level, degrees) -> float:
    """``2 b_d(r) max_j h_j^beta_j |f|_j / floor(beta_j)!`` for the cells of ``level``."""
    from .theory import b_factor

    level = as_level(level, spec.d)
    terms = [
        (2.0 ** -j) ** b * L / math.factorial(int(math.floor(b)))
        for j, b, L in zip(level, spec.beta, spec.seminorms)
    ]
    return 2.0 * b_factor(as_level(degrees, spec.d)) * max(terms)
