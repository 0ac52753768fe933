"""The ``|.|_h`` semi-norm over dyadic test cells and its empirical counterpart."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .dyadic import (
    Rectangle,
    as_level,
    cell_indices,
    joint_codes,
    level_volume,
    level_window,
    unique_rows_counts,
)
from .poly import PiecewisePoly, integrate_cells


@dataclass(frozen=True)
class ClassConfig:
    """Operational test-set class: all dyadic cells with levels in a per-axis window."""

    d: int
    j_min: tuple = 0
    j_max: tuple = 8
    vc_dim: int | None = None
    kind: str = "dyadic-cells"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        lo = as_level(self.j_min, self.d)
        hi = as_level(self.j_max, self.d)
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("empty level window")
        object.__setattr__(self, "j_min", lo)
        object.__setattr__(self, "j_max", hi)
        if self.vc_dim is None:
            # VC dimension of axis-parallel rectangles
            object.__setattr__(self, "vc_dim", 2 * self.d)
        if self.vc_dim < 1:
            raise ValueError("vc_dim must be >= 1")
        if self.kind != "dyadic-cells":
            raise ValueError(f"unsupported class kind {self.kind!r}")

    def levels(self) -> list:
        return level_window(self.d, self.j_min, self.j_max)


@dataclass(frozen=True, eq=False)
class Sample:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must be an (n, d) array")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def as_sample(s) -> Sample:
    return s if isinstance(s, Sample) else Sample(s)


@dataclass(frozen=True, eq=False)
class CellHistogram:
    """Sparse counts of a sample over the cells of ``I(level)``; keys sorted."""

    level: tuple
    keys: np.ndarray
    counts: np.ndarray
    n: int


def histogram(s, level) -> CellHistogram:
    s = as_sample(s)
    level = as_level(level, s.d)
    keys, counts = unique_rows_counts(cell_indices(s.points, level))
    return CellHistogram(level, keys.reshape(-1, s.d), counts, s.n)


def gamma_cap(n: int, V: int) -> float:
    """``log(ceil(log2 n)) + log(2 sum_{j <= V ^ n} C(n, j))`` with natural logs."""
    n, V = int(n), int(V)
    if n < 2:
        raise ValueError("gamma_cap needs n >= 2")
    if V < 1:
        raise ValueError("V must be >= 1")
    ceil_log2 = (n - 1).bit_length()
    total = sum(math.comb(n, j) for j in range(min(V, n) + 1))
    return math.log(ceil_log2) + math.log(2 * total)


def _check_h(h):
    arr = np.asarray(h, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("h must be > 0")
    return arr


def level_integral_sups(f: PiecewisePoly, cfg: ClassConfig):
    """Per level of the window: cell volume and ``max_C |int_C f|``."""
    vols, sups = [], []
    for j in cfg.levels():
        _, vals = integrate_cells(f, j)
        vols.append(level_volume(j))
        sups.append(np.abs(vals).max() if len(vals) else 0.0)
    return np.asarray(vols), np.asarray(sups)


def seminorm_h(f: PiecewisePoly, h, cfg: ClassConfig):
    """``sup_C |int_C f| / (mu(C) + h)`` over the dyadic cells of ``cfg``.

    ``h`` may be an array; the result then has the same shape.
    """
    harr = _check_h(h)
    if f.d != cfg.d:
        raise ValueError("dimension mismatch")
    if f.is_zero:
        return np.zeros_like(harr) if harr.ndim else 0.0
    vols, sups = level_integral_sups(f, cfg)
    out = (sups[:, None] / (vols[:, None] + harr.reshape(1, -1))).max(axis=0)
    return out.reshape(harr.shape) if harr.ndim else float(out[0])


def level_max_counts(s, cfg: ClassConfig):
    """Per level of the window: cell volume and the largest cell count."""
    s = as_sample(s)
    vols, maxc = [], []
    for j in cfg.levels():
        vols.append(level_volume(j))
        if s.n:
            _, counts = unique_rows_counts(cell_indices(s.points, j))
            maxc.append(counts.max())
        else:
            maxc.append(0)
    return np.asarray(vols), np.asarray(maxc, dtype=float)


def max_multiplicity(s) -> int:
    s = as_sample(s)
    if not s.n:
        return 0
    rows = np.ascontiguousarray(s.points).view(np.dtype((np.void, s.points.dtype.itemsize * s.d)))
    _, counts = np.unique(rows.ravel(), return_counts=True)
    return int(counts.max())


def empirical_seminorm_h(s, h, cfg: ClassConfig):
    """``sup_C N(C) / (n (mu(C) + h))`` over the window plus the point-mass limit term."""
    harr = _check_h(h)
    s = as_sample(s)
    if s.n == 0:
        return np.zeros_like(harr) if harr.ndim else 0.0
    vols, maxc = level_max_counts(s, cfg)
    hv = harr.reshape(1, -1)
    cells = (maxc[:, None] / (s.n * (vols[:, None] + hv))).max(axis=0)
    limit = max_multiplicity(s) / (s.n * hv[0])
    out = np.maximum(cells, limit)
    return out.reshape(harr.shape) if harr.ndim else float(out[0])


MassFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _mass_fn(true_mass) -> MassFn:
    return true_mass.mass if hasattr(true_mass, "mass") else true_mass


def _support_of(true_mass, support, d) -> Rectangle:
    if support is not None:
        return support
    return getattr(true_mass, "support", None) or Rectangle.unit(d)


def _cells_at_level(hist: CellHistogram, support: Rectangle):
    """Occupied cells plus every cell meeting ``support``; keys and counts."""
    j = np.asarray(hist.level)
    scale = np.ldexp(1.0, j)
    lo = np.floor(np.asarray(support.lo) * scale).astype(np.int64)
    hi = np.ceil(np.asarray(support.hi) * scale).astype(np.int64)
    grids = np.meshgrid(*[np.arange(a, b) for a, b in zip(lo, hi)], indexing="ij")
    sup_keys = np.stack([g.ravel() for g in grids], axis=-1).reshape(-1, len(j))
    keys = np.concatenate([sup_keys, hist.keys], axis=0)
    keys, _ = unique_rows_counts(keys)
    counts = np.zeros(len(keys))
    if len(hist.keys):
        ck, ch = joint_codes(keys, hist.keys)
        counts[np.searchsorted(ck, ch)] = hist.counts
    return keys, counts


def _cell_masses(keys, level, mass: MassFn):
    width = 2.0 ** (-np.asarray(level, dtype=float))
    lo = keys * width
    hi = (keys + 1) * width
    P = np.asarray(mass(lo, hi), dtype=float).reshape(-1)
    if np.any(P < -1e-12) or np.any(P > 1 + 1e-12):
        raise ValueError("true cell masses must lie in [0, 1]")
    return np.clip(P, 0.0, 1.0)


def mass_seminorm_h(true_mass, h, cfg: ClassConfig, support: Rectangle | None = None) -> float:
    """``|p*|_h`` for a density known through its cell masses (``P*(C) >= 0``)."""
    _check_h(h)
    mass = _mass_fn(true_mass)
    support = _support_of(true_mass, support, cfg.d)
    empty = CellHistogram(cfg.j_min, np.empty((0, cfg.d), dtype=np.int64), np.empty(0), 0)
    best = 0.0
    for j in cfg.levels():
        keys, _ = _cells_at_level(replace(empty, level=j), support)
        P = _cell_masses(keys, j, mass)
        best = max(best, float(P.max(initial=0.0)) / (level_volume(j) + h))
    return best


def bernstein_margin(s, true_mass, x: float, cfg: ClassConfig, support: Rectangle | None = None) -> float:
    """``max_C (|N(C)/n - P*(C)| - bound(C))``; the event holds iff this is <= 0."""
    s = as_sample(s)
    if s.n < 2:
        raise ValueError("the Bernstein event needs n >= 2")
    if x <= 0:
        raise ValueError("x must be > 0")
    gam = gamma_cap(s.n, cfg.vc_dim)
    rate = (gam + x) / s.n
    mass = _mass_fn(true_mass)
    support = _support_of(true_mass, support, s.d)
    worst = -np.inf
    for j in cfg.levels():
        keys, counts = _cells_at_level(histogram(s, j), support)
        P = _cell_masses(keys, j, mass)
        lhs = np.abs(counts / s.n - P)
        rhs = np.maximum(29.0 * np.sqrt(P) * math.sqrt(rate), 20.0 * rate)
        worst = max(worst, float((lhs - rhs).max()))
    return worst


def bernstein_event_holds(s, true_mass, x: float, cfg: ClassConfig, support: Rectangle | None = None) -> bool:
    """Whether the uniform Bernstein event holds on every operational cell."""
    return bernstein_margin(s, true_mass, x, cfg, support) <= 0.0


def z_statistic(s, true_mass, h, cfg: ClassConfig, support: Rectangle | None = None) -> float:
    """``Z(h) = sup_C |N(C)/n - P*(C)| / (mu(C) + h)`` over the operational cells."""
    _check_h(h)
    s = as_sample(s)
    mass = _mass_fn(true_mass)
    support = _support_of(true_mass, support, s.d)
    best = 0.0
    for j in cfg.levels():
        keys, counts = _cells_at_level(histogram(s, j), support)
        P = _cell_masses(keys, j, mass)
        emp = counts / s.n if s.n else np.zeros_like(P)
        best = max(best, float((np.abs(emp - P) / (level_volume(j) + h)).max(initial=0.0)))
    return best
