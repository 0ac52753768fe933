"""Piecewise tensor polynomials on a regular dyadic partition.

Each block is stored in local coordinates ``u = x 2^j - k`` in ``[0, 1)^d``
with a tensor monomial basis: ``coefs[b, a_1, ..., a_d]`` multiplies
``prod_i u_i^{a_i}``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np

from .dyadic import (
    J_MIN,
    DyadicCell,
    Rectangle,
    as_level,
    joint_codes,
    level_volume,
    unique_rows_counts,
)

# grid size for block maximization when the analytic route does not apply
GRID_POINTS = 33


@lru_cache(maxsize=512)
def axis_moments(delta: int, deg: int) -> np.ndarray:
    """``M[s, a] = int_{s 2^-delta}^{(s+1) 2^-delta} u^a du`` for ``s < 2^delta``."""
    s = np.arange(1 << delta, dtype=float)
    a = np.arange(deg + 1)
    scale = 2.0 ** (-delta * (a + 1))
    m = ((s[:, None] + 1.0) ** (a + 1) - s[:, None] ** (a + 1)) * scale / (a + 1)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=512)
def refine_matrices(delta: int, deg: int) -> np.ndarray:
    """``T[s, b, a]``: child coefficient ``b`` from parent coefficient ``a`` for child ``s``.

    Parent local coordinate is ``(u' + s) / 2^delta`` in terms of child coordinate ``u'``.
    """
    S = 1 << delta
    T = np.zeros((S, deg + 1, deg + 1))
    for s in range(S):
        for a in range(deg + 1):
            for b in range(a + 1):
                T[s, b, a] = comb(a, b) * float(s) ** (a - b) * 2.0 ** (-delta * a)
    T.setflags(write=False)
    return T


def _contract_axis(c: np.ndarray, axis: int, mat: np.ndarray) -> np.ndarray:
    """Replace coefficient axis ``axis`` (block axis excluded) by ``mat @ .``."""
    moved = np.moveaxis(c, axis + 1, -1)
    out = moved @ mat.T
    return np.moveaxis(out, -1, axis + 1)


def _powers(u: np.ndarray, deg: int) -> np.ndarray:
    return u[..., None] ** np.arange(deg + 1)


def _tensor_eval(c: np.ndarray, local: np.ndarray) -> np.ndarray:
    """Evaluate per-row coefficient tensors ``c[n]`` at local points ``local[n]``."""
    out = c
    for i in range(local.shape[1]):
        P = _powers(local[:, i], out.shape[1] - 1)
        out = np.einsum("na...,na->n...", out, P)
    return out


def _grid_eval(c: np.ndarray, axes: Sequence[np.ndarray]) -> np.ndarray:
    """Values of coefficient tensor ``c`` (one block) on the tensor grid ``axes``."""
    out = c
    for i, g in enumerate(axes):
        out = np.tensordot(out, _powers(g, c.shape[i] - 1), axes=([0], [1]))
    return out


def _max_abs_1d(c: np.ndarray, a: float, b: float):
    """Exact max of ``|sum c_k u^k|`` on ``[a, b]`` via critical points."""
    c = np.trim_zeros(np.asarray(c, dtype=float), "b")
    if c.size == 0:
        return 0.0, a
    cand = [a, b]
    deg = c.size - 1
    if deg == 2:
        cand.append(-c[1] / (2.0 * c[2]))
    elif deg > 2:
        dc = c[1:] * np.arange(1, deg + 1)
        roots = np.roots(dc[::-1])
        tol = 1e-9 * max(1.0, np.abs(roots).max(initial=0.0))
        cand.extend(r.real for r in roots if abs(r.imag) <= tol)
    cand = np.clip(np.asarray(cand, dtype=float), a, b)
    vals = np.abs(np.polynomial.polynomial.polyval(cand, c))
    i = int(np.argmax(vals))
    return float(vals[i]), float(cand[i])


def _polish(c: np.ndarray, u: np.ndarray, lo: np.ndarray, hi: np.ndarray, sweeps: int = 6):
    """Coordinate ascent of ``|c|`` using exact one-dimensional maximization."""
    d = c.ndim
    best = abs(float(_grid_eval(c, [np.array([v]) for v in u]).ravel()[0]))
    for _ in range(sweeps):
        improved = False
        for i in range(d):
            line = c
            # contract every axis except i at the current point
            for k in range(d - 1, -1, -1):
                if k == i:
                    continue
                line = np.tensordot(line, _powers(np.array(u[k]), c.shape[k] - 1), axes=([k], [0]))
            val, t = _max_abs_1d(line, lo[i], hi[i])
            if val > best * (1 + 1e-15):
                best = val
                u[i] = t
                improved = True
        if not improved:
            break
    return best, u


def box_abs_max(c: np.ndarray, lo=None, hi=None):
    """Max of ``|p|`` over the closed local box ``[lo, hi]``; returns ``(value, point)``.

    One dimension and per-axis degree <= 1 are exact. Otherwise a 33-point grid
    per axis is zoomed twice around its best points and polished by exact
    coordinate-wise maximization, which yields a lower bound of the true max.
    """
    c = np.asarray(c, dtype=float)
    d = c.ndim
    lo = np.zeros(d) if lo is None else np.asarray(lo, dtype=float)
    hi = np.ones(d) if hi is None else np.asarray(hi, dtype=float)
    if d == 1:
        val, t = _max_abs_1d(c, lo[0], hi[0])
        return val, np.array([t])
    if max(c.shape) <= 2:
        axes = [np.array([a, b]) for a, b in zip(lo, hi)]
        vals = np.abs(_grid_eval(c, axes))
        idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
        return float(vals[idx]), np.array([axes[i][idx[i]] for i in range(d)])

    axes = [np.linspace(a, b, GRID_POINTS) for a, b in zip(lo, hi)]
    vals = np.abs(_grid_eval(c, axes))
    flat = np.argsort(vals, axis=None)[::-1][:4]
    best_val, best_u = -1.0, None
    for f in flat:
        idx = np.unravel_index(int(f), vals.shape)
        u = np.array([axes[i][idx[i]] for i in range(d)])
        step = (hi - lo) / (GRID_POINTS - 1)
        for _ in range(2):
            zlo = np.maximum(lo, u - step)
            zhi = np.minimum(hi, u + step)
            zaxes = [np.linspace(a, b, GRID_POINTS) for a, b in zip(zlo, zhi)]
            zv = np.abs(_grid_eval(c, zaxes))
            zi = np.unravel_index(int(np.argmax(zv)), zv.shape)
            u = np.array([zaxes[i][zi[i]] for i in range(d)])
            step = (zhi - zlo) / (GRID_POINTS - 1)
        val, u = _polish(c, u, lo, hi)
        if val > best_val:
            best_val, best_u = val, u
    return float(best_val), best_u


@dataclass(frozen=True, eq=False)
class PiecewisePoly:
    """Finitely supported element of ``m_dir(r, I(j))``."""

    level: tuple
    degrees: tuple
    keys: np.ndarray
    coefs: np.ndarray

    def __post_init__(self):
        level = as_level(self.level)
        d = len(level)
        degrees = as_level(self.degrees, d)
        if any(r < 0 for r in degrees):
            raise ValueError("degrees must be non-negative")
        shape = tuple(r + 1 for r in degrees)
        keys = np.asarray(self.keys, dtype=np.int64).reshape(-1, d)
        coefs = np.asarray(self.coefs, dtype=float).reshape((len(keys),) + shape)
        nz = np.any(coefs.reshape(len(keys), int(np.prod(shape))) != 0.0, axis=1)
        keys, coefs = keys[nz], coefs[nz]
        if len(keys):
            (codes,) = joint_codes(keys)
            order = np.argsort(codes, kind="stable")
            if np.any(np.diff(codes[order]) == 0):
                raise ValueError("duplicate block keys")
            keys, coefs = keys[order], coefs[order]
        keys = np.ascontiguousarray(keys)
        coefs = np.ascontiguousarray(coefs)
        keys.setflags(write=False)
        coefs.setflags(write=False)
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "coefs", coefs)

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, level, degrees) -> "PiecewisePoly":
        level = as_level(level)
        degrees = as_level(degrees, len(level))
        shape = tuple(r + 1 for r in degrees)
        return cls(level, degrees, np.zeros((0, len(level)), dtype=np.int64), np.zeros((0,) + shape))

    @classmethod
    def from_blocks(cls, level, degrees, blocks: dict) -> "PiecewisePoly":
        level = as_level(level)
        d = len(level)
        degrees = as_level(degrees, d)
        shape = tuple(r + 1 for r in degrees)
        keys = np.array([as_level(k, d) for k in blocks], dtype=np.int64).reshape(-1, d)
        coefs = np.array([np.asarray(v, dtype=float).reshape(shape) for v in blocks.values()])
        return cls(level, degrees, keys, coefs.reshape((len(keys),) + shape))

    @classmethod
    def piecewise_constant(cls, level, keys, values) -> "PiecewisePoly":
        level = as_level(level)
        keys = np.asarray(keys, dtype=np.int64).reshape(-1, len(level))
        values = np.asarray(values, dtype=float)
        return cls(level, (0,) * len(level), keys, values.reshape((-1,) + (1,) * len(level)))

    # basic properties ---------------------------------------------------
    @property
    def d(self) -> int:
        return len(self.level)

    @property
    def shape(self) -> tuple:
        return tuple(r + 1 for r in self.degrees)

    @property
    def n_blocks(self) -> int:
        return len(self.keys)

    @property
    def cell_volume(self) -> float:
        return level_volume(self.level)

    @property
    def is_zero(self) -> bool:
        return self.n_blocks == 0

    def cells(self) -> list:
        return [DyadicCell(self.level, tuple(k)) for k in self.keys]

    def blocks(self) -> dict:
        return {tuple(int(v) for v in k): c.copy() for k, c in zip(self.keys, self.coefs)}

    def total_degree(self) -> int:
        """Largest ``sum(a)`` over non-zero coefficients of any block."""
        if self.is_zero:
            return 0
        nz = np.any(self.coefs != 0.0, axis=0)
        idx = np.argwhere(nz)
        return int(idx.sum(axis=1).max()) if len(idx) else 0

    def locate(self, keys: np.ndarray) -> np.ndarray:
        """Block position of each key row, or -1 when the cell is outside the support."""
        keys = np.asarray(keys, dtype=np.int64).reshape(-1, self.d)
        if not self.n_blocks or not len(keys):
            return np.full(len(keys), -1, dtype=np.int64)
        own, other = joint_codes(self.keys, keys)
        pos = np.searchsorted(own, other)
        pos = np.minimum(pos, len(own) - 1)
        return np.where(own[pos] == other, pos, -1)

    # algebra -------------------------------------------------------------
    def with_degrees(self, degrees) -> "PiecewisePoly":
        degrees = as_level(degrees, self.d)
        if degrees == self.degrees:
            return self
        if any(a < b for a, b in zip(degrees, self.degrees)):
            raise ValueError("cannot lower degrees by padding")
        shape = tuple(r + 1 for r in degrees)
        out = np.zeros((self.n_blocks,) + shape)
        out[(slice(None),) + tuple(slice(0, s) for s in self.shape)] = self.coefs
        return PiecewisePoly(self.level, degrees, self.keys, out)

    def refine_to(self, level) -> "PiecewisePoly":
        """Re-express the same function on the finer partition ``I(level)``."""
        level = as_level(level, self.d)
        deltas = [a - b for a, b in zip(level, self.level)]
        if any(v < 0 for v in deltas):
            raise ValueError(f"{level} is not finer than {self.level}")
        if not any(deltas):
            return self
        keys, coefs = self.keys, self.coefs
        for i, delta in enumerate(deltas):
            if delta == 0:
                continue
            S = 1 << delta
            T = refine_matrices(delta, self.degrees[i])
            moved = np.moveaxis(coefs, i + 1, -1)
            out = np.einsum("n...a,sba->ns...b", moved, T)
            out = np.moveaxis(out, -1, i + 2)
            coefs = out.reshape((len(keys) * S,) + coefs.shape[1:])
            new = np.repeat(keys, S, axis=0).copy()
            new[:, i] = new[:, i] * S + np.tile(np.arange(S), len(keys))
            keys = new
        return PiecewisePoly(level, self.degrees, keys, coefs)

    def align(self, other: "PiecewisePoly"):
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        level = tuple(max(a, b) for a, b in zip(self.level, other.level))
        degrees = tuple(max(a, b) for a, b in zip(self.degrees, other.degrees))
        return (
            self.with_degrees(degrees).refine_to(level),
            other.with_degrees(degrees).refine_to(level),
        )

    def _combine(self, other: "PiecewisePoly", sign: float) -> "PiecewisePoly":
        a, b = self.align(other)
        keys = np.concatenate([a.keys, b.keys], axis=0)
        if not len(keys):
            return a
        uniq, _ = unique_rows_counts(keys)
        out = np.zeros((len(uniq),) + a.shape)
        codes_u, codes_a, codes_b = joint_codes(uniq, a.keys, b.keys)
        out[np.searchsorted(codes_u, codes_a)] += a.coefs
        out[np.searchsorted(codes_u, codes_b)] += sign * b.coefs
        return PiecewisePoly(a.level, a.degrees, uniq, out)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar):
        return PiecewisePoly(self.level, self.degrees, self.keys, self.coefs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __call__(self, x) -> np.ndarray:
        return eval_poly(self, x)

    # serialization -----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "j": list(self.level),
            "r": list(self.degrees),
            "blocks": [
                {"k": [int(v) for v in k], "coeffs": [float(v) for v in c.ravel()]}
                for k, c in zip(self.keys, self.coefs)
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewisePoly":
        d = int(data["d"])
        level = as_level(data["j"], d)
        degrees = as_level(data["r"], d)
        blocks = {tuple(b["k"]): b["coeffs"] for b in data["blocks"]}
        if not blocks:
            return cls.zero(level, degrees)
        return cls.from_blocks(level, degrees, blocks)

    @classmethod
    def from_json(cls, text: str) -> "PiecewisePoly":
        return cls.from_dict(json.loads(text))


def eval_poly(f: PiecewisePoly, x) -> np.ndarray | float:
    """Value of ``f`` at ``x`` (one point or an ``(N, d)`` array); 0 off the support."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    pts = arr.reshape(-1, f.d)
    out = np.zeros(len(pts))
    if f.n_blocks and len(pts):
        scaled = pts * np.ldexp(1.0, np.asarray(f.level, dtype=np.int64))
        keys = np.floor(scaled).astype(np.int64)
        pos = f.locate(keys)
        hit = pos >= 0
        if np.any(hit):
            local = scaled[hit] - keys[hit]
            out[hit] = _tensor_eval(f.coefs[pos[hit]], local)
    return float(out[0]) if single else out


def integrate_poly(f: PiecewisePoly, region: Rectangle) -> float:
    """Exact integral of ``f`` over a bounded axis-parallel rectangle."""
    if f.is_zero:
        return 0.0
    scale = np.ldexp(1.0, np.asarray(f.level, dtype=np.int64))
    a = np.clip(np.asarray(region.lo) * scale - f.keys, 0.0, 1.0)
    b = np.clip(np.asarray(region.hi) * scale - f.keys, 0.0, 1.0)
    live = np.all(b > a, axis=1)
    if not np.any(live):
        return 0.0
    out = f.coefs[live]
    a, b = a[live], b[live]
    for i in range(f.d):
        p = np.arange(f.shape[i]) + 1
        mom = (b[:, i, None] ** p - a[:, i, None] ** p) / p
        out = np.einsum("na...,na->n...", out, mom)
    return float(out.sum() * f.cell_volume)


def subcell_integrals(f: PiecewisePoly, deltas: Sequence[int]) -> np.ndarray:
    """Integrals of every block over its level-``j + deltas`` subcells.

    Returns shape ``(n_blocks, 2^deltas_1, ..., 2^deltas_d)``.
    """
    out = f.coefs
    for i, delta in enumerate(deltas):
        out = _contract_axis(out, i, axis_moments(int(delta), f.degrees[i]))
    return out * f.cell_volume


def integrate_cells(f: PiecewisePoly, level) -> tuple:
    """Integrals of ``f`` over every level-``level`` cell meeting its support.

    Returns ``(keys, values)`` with keys sorted lexicographically.
    """
    level = as_level(level, f.d)
    if f.is_zero:
        return np.zeros((0, f.d), dtype=np.int64), np.zeros(0)
    fine = tuple(max(a, b) for a, b in zip(level, f.level))
    deltas = [a - b for a, b in zip(fine, f.level)]
    vals = subcell_integrals(f, deltas)
    sub = np.stack(
        np.meshgrid(*[np.arange(1 << dl) for dl in deltas], indexing="ij"), axis=-1
    ).reshape(-1, f.d)
    keys = (f.keys[:, None, :] << np.asarray(deltas, dtype=np.int64)) + sub[None, :, :]
    keys = keys.reshape(-1, f.d)
    vals = vals.reshape(-1)
    shift = np.asarray([a - b for a, b in zip(fine, level)], dtype=np.int64)
    if np.any(shift):
        keys = keys >> shift
        (codes,) = joint_codes(keys)
        order = np.argsort(codes, kind="stable")
        sc = codes[order]
        starts = np.flatnonzero(np.r_[True, sc[1:] != sc[:-1]])
        vals = np.add.reduceat(vals[order], starts)
        keys = keys[order[starts]]
    return keys, vals


def block_maxima(f: PiecewisePoly) -> np.ndarray:
    """Cheap per-block screening values (grid maxima, exact for low degree)."""
    if f.is_zero:
        return np.zeros(0)
    if max(f.degrees) == 0:
        return np.abs(f.coefs.reshape(-1))
    axes = [np.linspace(0.0, 1.0, GRID_POINTS if r > 1 else 2) for r in f.degrees]
    out = f.coefs
    for i, g in enumerate(axes):
        out = np.tensordot(out, _powers(g, f.degrees[i]), axes=([1], [1]))
    return np.abs(out.reshape(f.n_blocks, -1)).max(axis=1)


def _screen_margin(f: PiecewisePoly) -> float:
    # grid error bound near an interior max: half the second-derivative Markov bound
    r = max(f.degrees)
    if r <= 1 or f.d == 1:
        return 0.0 if r <= 1 else 0.5
    h = 1.0 / (GRID_POINTS - 1)
    return min(0.9, f.d * 0.5 * (4.0 * r * r * (r * r - 1) / 3.0) * (h / 2) ** 2 + 1e-9)


def sup_norm(f: PiecewisePoly):
    """``(value, cell, point)`` maximizing ``|f|`` over the closure of its blocks.

    Ties between blocks go to the lexicographically smallest cell. For empty
    support returns ``(0.0, None, None)``.
    """
    if f.is_zero:
        return 0.0, None, None
    screen = block_maxima(f)
    margin = _screen_margin(f)
    cand = np.flatnonzero(screen >= (1.0 - margin) * screen.max())
    best_val, best_b, best_u = -1.0, -1, None
    for b in cand:
        val, u = box_abs_max(f.coefs[b])
        if val > best_val * (1 + 1e-12):
            best_val, best_b, best_u = val, b, u
    cell = DyadicCell(f.level, tuple(f.keys[best_b]))
    point = (f.keys[best_b] + best_u) * 2.0 ** (-np.asarray(f.level, dtype=float))
    return float(best_val), cell, point


def _merge_axis(f: PiecewisePoly, axis: int, rtol: float):
    """Try to coarsen ``f`` by one level along ``axis``; ``None`` when impossible."""
    keys = f.keys
    parity = keys[:, axis] & 1
    parent = keys.copy()
    parent[:, axis] >>= 1
    uniq, counts = unique_rows_counts(parent)
    if np.any(counts != 2):
        return None
    (cp,) = joint_codes(parent)
    order = np.lexsort((parity, cp))
    c0 = f.coefs[order[0::2]]
    c1 = f.coefs[order[1::2]]
    deg = f.degrees[axis]
    scale = 2.0 ** np.arange(deg + 1)
    P = _contract_axis(c0, axis, np.diag(scale))
    expected = _contract_axis(P, axis, refine_matrices(1, deg)[1])
    n = len(uniq)
    mag = np.maximum(np.abs(P).reshape(n, -1).max(axis=1), np.abs(c1).reshape(n, -1).max(axis=1))
    err = np.abs(expected - c1).reshape(n, -1).max(axis=1)
    if np.any(err > rtol * mag):
        return None
    level = list(f.level)
    level[axis] -= 1
    return PiecewisePoly(tuple(level), f.degrees, parent[order[0::2]], P)


def coarsen(f: PiecewisePoly, j_min: int | Sequence[int] = J_MIN, rtol: float = 1e-12) -> PiecewisePoly:
    """Re-express ``f`` on the coarsest level at which it stays a block polynomial."""
    floor = as_level(j_min, f.d)
    if f.is_zero:
        return PiecewisePoly.zero(floor, f.degrees)
    changed = True
    while changed:
        changed = False
        for i in range(f.d):
            if f.level[i] <= floor[i]:
                continue
            merged = _merge_axis(f, i, rtol)
            if merged is not None:
                f = merged
                changed = True
    return f


def coarsest_level(f: PiecewisePoly, j_min: int | Sequence[int] = J_MIN) -> tuple:
    """Componentwise-smallest level ``j* <= f.level`` with ``f`` in ``m_dir(r, I(j*))``."""
    return coarsen(f, j_min).level
