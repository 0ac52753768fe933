"""Monte Carlo risk experiments, report emission and rate regression."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .densities import DensitySpec, get_density, sample_density
from .dyadic import as_level
from .hun import HunConfig, ModelSpec, hun_fit, hun_objective
from .poly import PiecewisePoly, eval_poly, integrate_cells
from .selection import ModelCollection, PenaltyConfig, model_bandwidth, moshun_select
from .seminorm import ClassConfig, bernstein_margin, gamma_cap, histogram, seminorm_h

THREADS_ENV = "SUPHUN_THREADS"
CSV_HEADER = (
    "density",
    "estimator",
    "degrees",
    "n",
    "rep",
    "seed",
    "level",
    "sup_error",
    "objective",
    "penalty",
    "status",
)


def default_grid(d: int) -> int:
    return 4096 if d == 1 else 256 if d == 2 else 32


def sup_error(density: DensitySpec, estimate: PiecewisePoly, grid: int | None = None) -> float:
    """``max |p* - p_hat|`` over a midpoint grid of the density support (a lower bound)."""
    d = density.d
    grid = grid or default_grid(d)
    axes = [lo + (hi - lo) * (np.arange(grid) + 0.5) / grid for lo, hi in zip(density.support.lo, density.support.hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    best = 0.0
    for start in range(0, len(pts), 2**18):
        x = pts[start : start + 2**18]
        best = max(best, float(np.abs(density.pdf(x) - eval_poly(estimate, x)).max()))
    return best


def row_seed(base_seed: int, density: str, n: int, rep: int) -> int:
    """Counter-based seed: independent of row order and of the other rows."""
    ss = np.random.SeedSequence([int(base_seed), zlib.crc32(density.encode()), int(n), int(rep)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class ExperimentConfig:
    density: str = "step3"
    estimator: str = "hun"
    degrees: tuple = (0,)
    level: tuple = (3,)
    j_min: tuple = (0,)
    j_max: tuple = (6,)
    isotropic: bool = True
    refine_l: int = 1
    h: float | None = None
    a: float = 1.0
    mode: str = "candidate-set"
    n_values: tuple = ()
    reps: int = 1
    base_seed: int = 0
    grid: int | None = None

    def __post_init__(self):
        if self.estimator not in ("hun", "moshun"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.reps < 0 or any(n < 2 for n in self.n_values):
            raise ValueError("need reps >= 0 and every n >= 2")

    def label(self) -> str:
        if self.estimator == "hun":
            return f"hun(j={_fmt_level(self.level)},l={self.refine_l})"
        return f"moshun(j={_fmt_level(self.j_min)}..{_fmt_level(self.j_max)},l={self.refine_l},a={self.a:g})"


def _per_axis(v, d: int) -> tuple:
    """Per-axis vector; a single value applies to every axis."""
    v = tuple(np.atleast_1d(v).tolist())
    return as_level(v[0] if len(v) == 1 else v, d)


def _fmt_level(j) -> str:
    return "x".join(str(v) for v in np.atleast_1d(j))


@dataclass
class RiskReport:
    rows: list = field(default_factory=list)
    timings: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows:
            w.writerow([_csv_field(row[k]) for k in CSV_HEADER])
        return buf.getvalue()

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "timings": self.timings}, indent=2, default=_jsonable)

    def mean_error_by_n(self) -> dict:
        groups = {}
        for row in self.rows:
            if row["status"] == "ok":
                groups.setdefault(row["n"], []).append(row["sup_error"])
        return {n: float(np.mean(v)) for n, v in sorted(groups.items())}


def _csv_field(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(type(v))


def _run_row(args):
    cfg, n, rep = args
    density = get_density(cfg.density)
    seed = row_seed(cfg.base_seed, cfg.density, n, rep)
    row = {
        "density": cfg.density,
        "estimator": cfg.label(),
        "degrees": _fmt_level(cfg.degrees),
        "n": int(n),
        "rep": int(rep),
        "seed": seed,
        "level": "",
        "sup_error": float("nan"),
        "objective": float("nan"),
        "penalty": float("nan"),
        "status": "ok",
    }
    t0 = time.perf_counter()
    try:
        s = sample_density(density, n, seed)
        d = density.d
        if cfg.estimator == "hun":
            model = ModelSpec(_per_axis(cfg.degrees, d), _per_axis(cfg.level, d))
            h = cfg.h or model_bandwidth(model)
            fit = hun_fit(s, model, cfg.refine_l)
            est = fit.estimate
            row["level"] = _fmt_level(model.level)
            row["objective"] = hun_objective(est, fit.histogram, h)
        else:
            coll = ModelCollection.dyadic(
                d, _per_axis(cfg.degrees, d), _per_axis(cfg.j_min, d), _per_axis(cfg.j_max, d), isotropic=cfg.isotropic
            )
            est, model, rep_ = moshun_select(s, coll, PenaltyConfig(a=cfg.a), cfg.refine_l, cfg.mode)
            row["level"] = _fmt_level(model.level)
            row["objective"] = rep_.criteria[rep_.chosen]
            row["penalty"] = rep_.penalties[rep_.chosen]
        row["sup_error"] = sup_error(density, est, cfg.grid)
    except Exception as exc:  # recorded per row, the run continues
        row["status"] = f"error:{type(exc).__name__}"
    return row, time.perf_counter() - t0


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def risk_experiment(cfg: ExperimentConfig | None) -> RiskReport:
    """One row per ``(n, rep)``; rows are merged in a fixed order."""
    report = RiskReport()
    if cfg is None or not cfg.n_values or not cfg.reps:
        return report
    tasks = [(cfg, n, rep) for n in cfg.n_values for rep in range(cfg.reps)]
    threads = _threads()
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_row, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        results = [_run_row(t) for t in tasks]
    for row, wall in results:
        report.rows.append(row)
        report.timings.append({"n": row["n"], "rep": row["rep"], "wall_time": wall})
    return report


def read_csv(path_or_text: str) -> RiskReport:
    text = path_or_text
    if "\n" not in path_or_text and os.path.exists(path_or_text):
        with open(path_or_text) as fh:
            text = fh.read()
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = dict(rec)
        row["n"] = int(row["n"])
        for k in ("sup_error", "objective", "penalty"):
            row[k] = float(row[k]) if row.get(k) else float("nan")
        rows.append(row)
    return RiskReport(rows)


def rate_slope(report: RiskReport) -> float:
    """Least-squares slope of ``log(mean sup_error)`` against ``log(n / log n)``."""
    means = report.mean_error_by_n()
    if len(means) < 4:
        raise ValueError("rate_slope needs at least 4 distinct n values")
    n = np.asarray(list(means), dtype=float)
    err = np.asarray(list(means.values()))
    if np.any(err <= 0):
        raise ValueError("mean errors must be > 0")
    return float(np.polyfit(np.log(n / np.log(n)), np.log(err), 1)[0])


@dataclass(frozen=True)
class AdaptivityResult:
    moshun_risk: float
    hun_risks: dict
    chosen_levels: tuple

    @property
    def best_hun(self) -> float:
        return min(self.hun_risks.values())

    @property
    def ratio(self) -> float:
        return self.moshun_risk / self.best_hun


def adaptivity_experiment(
    density: str,
    n: int,
    reps: int,
    base_seed: int,
    degrees=(0,),
    j_max: int = 6,
    refine_l: int = 1,
    a: float = 1.0,
) -> AdaptivityResult:
    """Mean sup risk of moshun versus every single-model hun fit on the same samples."""
    spec = get_density(density)
    d = spec.d
    coll = ModelCollection.dyadic(d, degrees, 0, j_max, isotropic=True)
    sums = {j: 0.0 for j in coll.levels}
    moshun_sum = 0.0
    chosen = []
    for rep in range(reps):
        s = sample_density(spec, n, row_seed(base_seed, density, n, rep))
        for m in coll.models():
            sums[m.level] += sup_error(spec, hun_fit(s, m, refine_l).estimate)
        est, model, _ = moshun_select(s, coll, PenaltyConfig(a=a), refine_l)
        moshun_sum += sup_error(spec, est)
        chosen.append(model.level)
    return AdaptivityResult(moshun_sum / reps, {j: v / reps for j, v in sums.items()}, tuple(chosen))


@dataclass(frozen=True)
class OracleCheck:
    omega: bool
    lhs: float
    rhs: float
    eps_hat: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def oracle_display(s, density: DensitySpec, model: ModelSpec, refine_l: int, h: float, x: float, eps_hat: float, delta: float = 0.0) -> OracleCheck:
    """Check ``(1 - eps)|p_bar - p_hat|_h <= 2|p* - p_bar|_h + delta + remainder`` for a true model.

    ``p_bar = p*`` and the semi-norm class is the level ``j + l`` cells. The
    Bernstein event is checked on every level from 0 to ``j + l``.
    """
    fine = model.fine_level(refine_l)
    n = s.n
    p_star = density.as_poly()
    p_hat = hun_fit(s, model, refine_l).estimate
    K = ClassConfig(model.d, fine, fine)
    omega = bernstein_margin(s, density, x, ClassConfig(model.d, 0, fine)) <= 0.0
    gam = gamma_cap(n, K.vc_dim)
    p_star_h = seminorm_h(p_star, h, K)
    rate = (gam + x) / (h * n)
    remainder = max(58.0 * math.sqrt(p_star_h * rate), 40.0 * rate)
    lhs = (1.0 - eps_hat) * seminorm_h(p_star - p_hat, h, K)
    return OracleCheck(omega, lhs, delta + remainder, eps_hat)
