"""Model bandwidths, the data-driven penalty and the moshun selection rule."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dyadic import as_level, joint_codes, level_volume, level_window
from .hun import ModelSpec, _cell_sup, hun_fit
from .minimax import solve_abs_minimax, subcell_design
from .poly import PiecewisePoly, coarsest_level, integrate_cells
from .seminorm import ClassConfig, as_sample, empirical_seminorm_h, gamma_cap, histogram

SQRT43 = math.sqrt(4.0 / 3.0)


def model_bandwidth(model: ModelSpec) -> float:
    """``2^-|j| / ((2 |r|_1^2)^d 4^(d + 1))``; the ``(2|r|_1^2)^d`` factor is 1 when ``r = 0``."""
    d = model.d
    s = sum(model.degrees)
    factor = (2.0 * s * s) ** d if s else 1.0
    return level_volume(model.level) / (factor * 4.0 ** (d + 1))


@dataclass(frozen=True)
class ModelCollection:
    """Finite family of dyadic models sharing one degree vector."""

    degrees: tuple
    levels: tuple
    bandwidths: dict = field(default=None)

    def __post_init__(self):
        if not self.levels:
            raise ValueError("empty model collection")
        d = len(as_level(self.levels[0]))
        degrees = as_level(self.degrees, d)
        levels = tuple(sorted({as_level(j, d) for j in self.levels}, key=lambda j: (sum(j), j)))
        floor = tuple(min(j[i] for j in levels) for i in range(d))
        if floor not in levels:
            present = set(levels)
            for a in levels:
                for b in levels:
                    if tuple(map(min, a, b)) not in present:
                        raise ValueError("collection must contain its componentwise-min level")
        if self.bandwidths is None:
            bw = {j: model_bandwidth(ModelSpec(degrees, j)) for j in levels}
        else:
            bw = {as_level(j, d): float(v) for j, v in self.bandwidths.items()}
            if set(bw) != set(levels):
                raise ValueError("bandwidths must cover exactly the collection levels")
        if any(not v > 0 for v in bw.values()):
            raise ValueError("bandwidths must be > 0")
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "bandwidths", bw)

    @classmethod
    def dyadic(cls, d: int, degrees, j_min=0, j_max=6, isotropic: bool = False) -> "ModelCollection":
        if isotropic:
            lo, hi = int(np.min(j_min)), int(np.max(j_max))
            levels = [(j,) * d for j in range(lo, hi + 1)]
        else:
            levels = level_window(d, j_min, j_max)
        return cls(as_level(degrees, d), tuple(levels))

    @property
    def d(self) -> int:
        return len(self.degrees)

    @property
    def floor(self) -> tuple:
        return tuple(min(j[i] for j in self.levels) for i in range(self.d))

    def models(self) -> list:
        return [ModelSpec(self.degrees, j) for j in self.levels]


@dataclass(frozen=True)
class PenaltyConfig:
    a: float = 1.0
    vc_dim: int | None = None
    n: int | None = None

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be > 0")
        if self.n is not None and self.n < 2:
            raise ValueError("n must be >= 2")


def penalty_from_phat(h, phat, n: int, V: int, a: float = 1.0):
    """The universal penalty given ``|p_hat|_h``; vectorized over ``h``."""
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise ValueError("h must be > 0")
    big = gamma_cap(n, V) + a * np.maximum(0.0, -np.log(h))
    ratio = big / (h * n)
    out = 29.0 * SQRT43 * np.sqrt(np.asarray(phat) * ratio) + SQRT43 * 29.0**2 * ratio
    return out if out.ndim else float(out)


def penalty(h, cfg: PenaltyConfig, s, class_cfg: ClassConfig):
    """``pen_a(h)`` with ``|p_hat|_h`` from the sample over ``class_cfg``."""
    s = as_sample(s)
    n = s.n if cfg.n is None else cfg.n
    if cfg.n is not None and cfg.n != s.n:
        raise ValueError("penalty n does not match the sample size")
    V = class_cfg.vc_dim if cfg.vc_dim is None else cfg.vc_dim
    phat = empirical_seminorm_h(s, h, class_cfg)
    return penalty_from_phat(h, phat, n, V, cfg.a)


def home_level(p: PiecewisePoly, coll: ModelCollection) -> tuple:
    """Coarsest collection level whose model contains ``p`` (largest ``h_m``)."""
    if any(a > b for a, b in zip(p.degrees, coll.degrees)) and not p.is_zero:
        raise ValueError("p has higher degree than the collection")
    base = coarsest_level(p, coll.floor)
    homes = [j for j in coll.levels if all(a >= b for a, b in zip(j, base))]
    if not homes:
        raise ValueError(f"p (coarsest level {base}) is not in any collection model")
    return min(homes, key=lambda j: (-coll.bandwidths[j], j))


def candidate_bandwidth(p: PiecewisePoly, coll: ModelCollection) -> float:
    """``h_p``: the largest ``h_m`` over collection models containing ``p``."""
    return coll.bandwidths[home_level(p, coll)]


@dataclass(frozen=True, eq=False)
class MoshunReport:
    levels: tuple
    bandwidths: tuple
    penalties: tuple
    objectives: tuple
    home_levels: tuple
    criteria: tuple
    chosen: int
    mode: str

    def to_dict(self) -> dict:
        rows = []
        for i, j in enumerate(self.levels):
            rows.append(
                {
                    "level": list(j),
                    "h": self.bandwidths[i],
                    "penalty": self.penalties[i],
                    "hun_objective": self.objectives[i],
                    "home_level": list(self.home_levels[i]),
                    "criterion": self.criteria[i],
                }
            )
        return {"mode": self.mode, "chosen": list(self.levels[self.chosen]), "models": rows}


class _Criterion:
    """Evaluates the operational moshun criterion for fixed data."""

    def __init__(self, s, coll: ModelCollection, pcfg: PenaltyConfig, refine_l: int, class_cfg):
        self.s = as_sample(s)
        self.coll = coll
        self.l = refine_l
        self.pen = dict(
            zip(
                coll.levels,
                np.atleast_1d(penalty([coll.bandwidths[j] for j in coll.levels], pcfg, self.s, class_cfg)),
            )
        )
        self._hist = {}

    def hist(self, level):
        if level not in self._hist:
            self._hist[level] = histogram(self.s, level)
        return self._hist[level]

    def terms(self, p: PiecewisePoly, home: tuple):
        """``[cell sup at h_p ^ h_m' over (j(p) v j(m')) + l cells - pen(h_m')]`` per ``m'``."""
        h_p = self.coll.bandwidths[home]
        out = []
        for jm in self.coll.levels:
            fine = tuple(max(a, b) + self.l for a, b in zip(home, jm))
            keys, vals = integrate_cells(p, fine)
            h = min(h_p, self.coll.bandwidths[jm])
            out.append(_cell_sup(keys, vals, self.hist(fine), h) - self.pen[jm])
        return np.asarray(out)

    def __call__(self, p: PiecewisePoly, home: tuple) -> float:
        return float(self.terms(p, home).max() + self.pen[home])


def _reoptimize(crit: _Criterion, model: ModelSpec, start: PiecewisePoly) -> PiecewisePoly:
    """Per-block LP against every ``m'`` constraint, with ``h_p`` frozen at ``h_m``."""
    coll, l, n = crit.coll, crit.l, crit.s.n
    h_m = coll.bandwidths[model.level]
    parents = crit.hist(model.fine_level(l)).keys >> l
    if not len(parents):
        return start
    (pc,) = joint_codes(parents)
    parents = parents[np.unique(pc, return_index=True)[1]]
    vol = level_volume(model.level)
    groups = []
    for jm in coll.levels:
        fine = tuple(max(a, b) + l for a, b in zip(model.level, jm))
        deltas = tuple(f - j for f, j in zip(fine, model.level))
        h = min(h_m, coll.bandwidths[jm])
        A = subcell_design(deltas, model.degrees) * vol
        groups.append((fine, deltas, A, 1.0 / (level_volume(fine) + h), crit.pen[jm]))
    blocks = {}
    for k in parents:
        rows_A, rows_b, rows_o = [], [], []
        for fine, deltas, A, w, pen in groups:
            hist = crit.hist(fine)
            sub = np.stack(
                np.meshgrid(*[np.arange(1 << dl) for dl in deltas], indexing="ij"), axis=-1
            ).reshape(-1, model.d)
            keys = (k << np.asarray(deltas)) + sub
            counts = np.zeros(len(keys))
            if len(hist.keys):
                kc, hc = joint_codes(keys, hist.keys)
                pos = np.searchsorted(hc, kc)
                pos = np.minimum(pos, len(hc) - 1)
                hit = hc[pos] == kc
                counts[hit] = hist.counts[pos[hit]]
            rows_A.append(w * A)
            rows_b.append(w * counts / n)
            rows_o.append(np.full(len(keys), pen))
        c, _ = solve_abs_minimax(np.vstack(rows_A), np.concatenate(rows_b), np.concatenate(rows_o))
        blocks[tuple(k)] = c.reshape(tuple(r + 1 for r in model.degrees))
    return PiecewisePoly.from_blocks(model.level, model.degrees, blocks)


def moshun_select(
    s,
    coll: ModelCollection,
    pcfg: PenaltyConfig | None = None,
    refine_l: int = 1,
    mode: str = "candidate-set",
    class_cfg: ClassConfig | None = None,
):
    """Model-selection hun estimator over a finite dyadic collection.

    Returns ``(estimate, model, report)``.
    """
    if mode not in ("candidate-set", "exact-lp"):
        raise ValueError(f"unknown mode {mode!r}")
    s = as_sample(s)
    if s.d != coll.d:
        raise ValueError("sample and collection dimensions differ")
    if s.n < 2:
        raise ValueError("moshun needs n >= 2")
    pcfg = pcfg or PenaltyConfig()
    if class_cfg is None:
        top = tuple(max(j[i] for j in coll.levels) + refine_l for i in range(coll.d))
        class_cfg = ClassConfig(coll.d, 0, top)
    crit = _Criterion(s, coll, pcfg, refine_l, class_cfg)
    models = coll.models()
    estimates, homes, values, objectives = [], [], [], []
    for m in models:
        fit = hun_fit(s, m, refine_l)
        p = fit.estimate
        home = home_level(p, coll)
        value = crit(p, home)
        if mode == "exact-lp":
            q = _reoptimize(crit, m, p)
            q_home = home_level(q, coll)
            q_value = crit(q, q_home)
            if q_value < value:
                p, home, value = q, q_home, q_value
        estimates.append(p)
        homes.append(home)
        values.append(value)
        keys, vals = integrate_cells(fit.estimate, m.fine_level(refine_l))
        objectives.append(_cell_sup(keys, vals, fit.histogram, coll.bandwidths[m.level]))
    best = min(values)
    tol = 1e-12 * (1.0 + abs(best))
    tied = [i for i, v in enumerate(values) if v <= best + tol]
    chosen = min(tied, key=lambda i: (sum(models[i].level), models[i].level))
    report = MoshunReport(
        levels=coll.levels,
        bandwidths=tuple(coll.bandwidths[j] for j in coll.levels),
        penalties=tuple(float(crit.pen[j]) for j in coll.levels),
        objectives=tuple(objectives),
        home_levels=tuple(homes),
        criteria=tuple(values),
        chosen=chosen,
        mode=mode,
    )
    return estimates[chosen], models[chosen], report
