"""Single-model hun estimation: T statistics, test cells, objective and fit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import J_MAX, DyadicCell, as_level, joint_codes, level_volume
from .minimax import fit_counts
from .poly import PiecewisePoly, integrate_cells, integrate_poly, sup_norm
from .seminorm import CellHistogram, ClassConfig, as_sample, histogram, seminorm_h


@dataclass(frozen=True)
class HunConfig:
    h: float
    refine_l: int = 1
    delta: float = 0.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be > 0")
        if self.refine_l < 1:
            raise ValueError("refine_l must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")


@dataclass(frozen=True)
class ModelSpec:
    """The model ``m_dir(r, I(j))``: piecewise polynomials of degrees ``r`` on level ``j``."""

    degrees: tuple
    level: tuple

    def __post_init__(self):
        level = as_level(self.level)
        degrees = as_level(self.degrees, len(level))
        if any(r < 0 for r in degrees):
            raise ValueError("degrees must be non-negative")
        if any(v < 0 or v > J_MAX for v in level):
            raise ValueError(f"level {level} outside [0, {J_MAX}]")
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "degrees", degrees)

    @property
    def d(self) -> int:
        return len(self.level)

    def fine_level(self, l: int) -> tuple:
        return tuple(v + l for v in self.level)


def t_statistic(p: PiecewisePoly, q: PiecewisePoly, C: DyadicCell, h: float, s) -> float:
    """``tau (P(C) - N(C)/n) / (mu(C) + h)`` with ``tau = sign(int_C (p - q))``, +1 on zero."""
    s = as_sample(s)
    rect = C.rect
    tau = -1.0 if integrate_poly(p - q, rect) < 0 else 1.0
    freq = np.count_nonzero(rect.contains(s.points)) / s.n if s.n else 0.0
    return tau * (integrate_poly(p, rect) - freq) / (C.volume + h)


def select_test_cell(diff: PiecewisePoly, refine_l: int, with_flag: bool = False):
    """Level ``j + l`` cell where ``|diff|`` attains its maximum.

    Ties go to the lexicographically smallest cell. A zero ``diff`` is
    degenerate: the origin cell is returned and, with ``with_flag``, flagged.
    """
    fine = tuple(v + refine_l for v in diff.level)
    value, cell, _ = sup_norm(diff.refine_to(fine))
    degenerate = cell is None or value == 0.0
    if degenerate:
        cell = DyadicCell(fine, (0,) * diff.d)
    return (cell, degenerate) if with_flag else cell


def _cell_sup(P_keys, P_vals, hist: CellHistogram, h, weight=None) -> float:
    """``max_C |N(C)/n - P(C)| / (mu(C) + h)`` over cells in either key set."""
    mu = level_volume(hist.level)
    emp = hist.counts / hist.n if hist.n else np.zeros(len(hist.counts))
    if not len(P_keys):
        dev = emp
    elif not len(hist.keys):
        dev = np.abs(P_vals)
    else:
        ck, ch = joint_codes(P_keys, hist.keys)
        codes = np.union1d(ck, ch)
        vals = np.zeros(len(codes))
        vals[np.searchsorted(codes, ch)] += emp
        vals[np.searchsorted(codes, ck)] -= P_vals
        dev = np.abs(vals)
    return float(dev.max(initial=0.0) / (mu + h))


def hun_objective(p: PiecewisePoly, hist: CellHistogram, h: float) -> float:
    """``sup_C |N(C)/n - P(C)| / (mu(C) + h)`` over the cells of ``hist``'s level."""
    if not h > 0:
        raise ValueError("h must be > 0")
    keys, vals = integrate_cells(p, hist.level)
    return _cell_sup(keys, vals, hist, h)


def grouped_counts(hist: CellHistogram, l: int):
    """Group a level ``j + l`` histogram by parent cell.

    Returns the sorted parent keys and a dense ``(m, 2^(l d))`` count matrix
    with subcells in C order.
    """
    d = hist.keys.shape[1]
    parents = hist.keys >> l
    offsets = hist.keys - (parents << l)
    sub = np.ravel_multi_index(tuple(offsets.T), (1 << l,) * d) if len(offsets) else np.zeros(0, int)
    (codes,) = joint_codes(parents)
    uniq, first, inv = np.unique(codes, return_index=True, return_inverse=True)
    dense = np.zeros((len(uniq), 1 << (l * d)))
    dense[inv, sub] = hist.counts
    return parents[first], dense


@dataclass(frozen=True, eq=False)
class HunFit:
    estimate: PiecewisePoly
    model: ModelSpec
    histogram: CellHistogram
    cell_objectives: np.ndarray
    empty: bool

    @property
    def max_cell_objective(self) -> float:
        return float(self.cell_objectives.max(initial=0.0))


def hun_fit(s, model: ModelSpec, refine_l: int) -> HunFit:
    """Fit every occupied coarse cell by the exact per-cell minimax LP.

    The objective separates over coarse cells, so the result minimizes the hun
    objective over the whole model at every ``h``.
    """
    s = as_sample(s)
    if s.d != model.d:
        raise ValueError("sample and model dimensions differ")
    hist = histogram(s, model.fine_level(refine_l))
    if s.n == 0:
        zero = PiecewisePoly.zero(model.level, model.degrees)
        return HunFit(zero, model, hist, np.zeros(0), True)
    parents, dense = grouped_counts(hist, refine_l)
    coefs, F = fit_counts(dense, refine_l, model.degrees, s.n, level_volume(model.level))
    est = PiecewisePoly(model.level, model.degrees, parents, coefs)
    return HunFit(est, model, hist, F, False)


def hun_estimate(s, model: ModelSpec, cfg: HunConfig) -> PiecewisePoly:
    return hun_fit(s, model, cfg.refine_l).estimate


def random_model_element(model: ModelSpec, rng: np.random.Generator) -> PiecewisePoly:
    """iid standard normal coefficients on every level-``j`` block of the unit cube."""
    grids = np.meshgrid(*[np.arange(1 << v) for v in model.level], indexing="ij")
    keys = np.stack([g.ravel() for g in grids], axis=-1)
    shape = tuple(r + 1 for r in model.degrees)
    coefs = rng.standard_normal((len(keys),) + shape)
    return PiecewisePoly(model.level, model.degrees, keys, coefs)


def epsilon_probe(
    model: ModelSpec,
    h: float,
    refine_l: int,
    trials: int,
    seed,
    class_cfg: ClassConfig | None = None,
) -> float:
    """Largest observed ``1 - |int_C (p - q)| / ((mu(C) + h) |p - q|_h)`` over random pairs.

    ``C`` is the selected test cell. The default class is exactly the level
    ``j + l`` cells, matching the cells the objective is taken over.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if class_cfg is None:
        fine = model.fine_level(refine_l)
        class_cfg = ClassConfig(model.d, fine, fine)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        diff = random_model_element(model, rng) - random_model_element(model, rng)
        cell, degenerate = select_test_cell(diff, refine_l, with_flag=True)
        if degenerate:
            continue
        norm = seminorm_h(diff, h, class_cfg)
        if norm == 0.0:
            continue
        ratio = abs(integrate_poly(diff, cell.rect)) / ((cell.volume + h) * norm)
        worst = max(worst, 1.0 - ratio)
    return worst
