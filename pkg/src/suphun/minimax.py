"""Per-cell discrete Chebyshev fits of polynomial densities to refined cell counts."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _simplex
from .dyadic import DyadicCell, as_level
from .poly import axis_moments

LP_EPS = 1e-9


class SolverError(RuntimeError):
    """The simplex did not reach an optimal vertex."""


def subcell_design(l, degrees: tuple) -> np.ndarray:
    """``A[s, a]``: integral of local monomial ``a`` over subcell ``s`` of ``[0, 1)^d``.

    ``l`` is a depth or a per-axis tuple of depths. Subcells and monomials are
    both flattened in C order.
    """
    degrees = tuple(int(r) for r in degrees)
    return _design(as_level(l, len(degrees)), degrees)


@lru_cache(maxsize=256)
def _design(deltas: tuple, degrees: tuple) -> np.ndarray:
    A = np.ones((1, 1))
    for dl, r in zip(deltas, degrees):
        A = np.kron(A, axis_moments(dl, r))
    A.setflags(write=False)
    return A


@dataclass(frozen=True)
class CellCounts:
    """Point counts in the ``2^(l d)`` level-``j + l`` subcells of one cell."""

    cell: DyadicCell
    refine_l: int
    counts: np.ndarray
    n_total: int

    def __post_init__(self):
        if self.refine_l < 1:
            raise ValueError("refine_l must be >= 1")
        size = 1 << (self.refine_l * self.cell.d)
        counts = self.counts
        if isinstance(counts, dict):
            dense = np.zeros(size)
            side = 1 << self.refine_l
            for sub, v in counts.items():
                dense[np.ravel_multi_index(as_level(sub, self.cell.d), (side,) * self.cell.d)] = v
            counts = dense
        counts = np.asarray(counts, dtype=float).reshape(-1)
        if counts.size != size:
            raise ValueError(f"expected {size} subcell counts, got {counts.size}")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class FitResult:
    coeffs: np.ndarray
    objective: float


def _coeff_scale(cc: CellCounts) -> float:
    # density-scale coefficient = count-scale coefficient * scale
    return cc.counts.size / (cc.n_total * cc.cell.volume)


def chebyshev_value(coeffs, cc: CellCounts, degrees) -> float:
    """``max_C |N(C) - n int_C p|`` over the subcells of ``cc.cell``."""
    degrees = as_level(degrees, cc.cell.d)
    A = subcell_design(cc.refine_l, degrees)
    c = np.asarray(coeffs, dtype=float).reshape(-1)
    expected = cc.n_total * cc.cell.volume * (A @ c)
    return float(np.abs(cc.counts - expected).max())


def fit_counts(counts: np.ndarray, l: int, degrees: tuple, n_total: int, cell_volume: float):
    """Batch fit: one row of subcell counts per coarse cell.

    Returns density-scale coefficient tensors ``(m, r_1 + 1, ...)`` and the
    optimal objectives (count units).
    """
    degrees = tuple(degrees)
    A = subcell_design(l, degrees)
    S = A.shape[0]
    counts = np.ascontiguousarray(counts, dtype=float).reshape(-1, S)
    C, F, status = _simplex.fit_counts_batch(np.ascontiguousarray(A * S), counts, LP_EPS)
    if np.any(status != _simplex.OPTIMAL):
        bad = int(np.flatnonzero(status != _simplex.OPTIMAL)[0])
        raise SolverError(f"simplex status {int(status[bad])} on row {bad}, counts={counts[bad]}")
    scale = S / (n_total * cell_volume)
    shape = tuple(r + 1 for r in degrees)
    return (C * scale).reshape((len(counts),) + shape), F


def fit_cell_minimax(cc: CellCounts, degrees) -> FitResult:
    """Global minimizer of ``F_I`` with minimum-norm tie-breaking."""
    degrees = as_level(degrees, cc.cell.d)
    shape = tuple(r + 1 for r in degrees)
    if not np.any(cc.counts):
        return FitResult(np.zeros(shape), 0.0)
    C, F = fit_counts(cc.counts[None, :], cc.refine_l, degrees, cc.n_total, cc.cell.volume)
    coeffs = C[0]
    return FitResult(coeffs, chebyshev_value(coeffs, cc, degrees))


def solve_minimax(G: np.ndarray, g: np.ndarray):
    """General form ``min_c max_k (G_k c - g_k)``; returns ``(c, value)``."""
    G = np.ascontiguousarray(G, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    c, t, status = _simplex.minimax_lp(G, g, LP_EPS)
    if status != _simplex.OPTIMAL:
        raise SolverError(f"simplex status {status} on a {G.shape} problem")
    c, t = _simplex.min_norm_polish(G, g, c)
    return c, float(t)


def solve_abs_minimax(A: np.ndarray, b: np.ndarray, offset: np.ndarray, max_rows: int = 256):
    """``min_c max_k (|A_k c - b_k| - offset_k)`` by constraint generation.

    Each round solves the LP on a subset of rows (always in +/- pairs, which
    keeps it bounded). A subset optimum that is feasible for all rows is a
    global optimum. Returns ``(c, value)``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    offset = np.asarray(offset, dtype=float)
    M = len(b)

    def value(c):
        return np.abs(A @ c - b) - offset

    def solve(rows):
        G = np.concatenate([A[rows], -A[rows]])
        g = np.concatenate([b[rows] + offset[rows], offset[rows] - b[rows]])
        return solve_minimax(G, g)

    if M <= max_rows:
        c, _ = solve(np.arange(M))
        return c, float(value(c).max())
    rows = np.argsort(-(np.abs(b) - offset), kind="stable")[:max_rows]
    for _ in range(M):
        c, t = solve(rows)
        v = value(c)
        tol = 1e-9 * max(1.0, abs(t))
        if v.max() <= t + tol:
            return c, float(v.max())
        fresh = np.setdiff1d(np.flatnonzero(v > t + tol), rows)
        fresh = fresh[np.argsort(-v[fresh], kind="stable")][:max_rows]
        rows = np.union1d(rows, fresh)
    raise SolverError("constraint generation did not converge")
