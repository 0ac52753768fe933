"""Bundled test densities with exact cell masses and deterministic samplers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dyadic import Rectangle, as_level, level_volume
from .poly import PiecewisePoly, eval_poly
from .seminorm import Sample

MIN_ACCEPTANCE = 1e-3


class EnvelopeError(ValueError):
    """The rejection envelope is too loose or fails to dominate the density."""


@dataclass(frozen=True)
class Factor1D:
    """One-dimensional density factor with an analytic CDF."""

    pdf: Callable
    cdf: Callable


@dataclass(frozen=True, eq=False)
class DensitySpec:
    """A density on a bounded rectangle.

    ``piecewise-constant`` densities carry a dyadic level and dense cell values
    over ``support``. ``callable-with-envelope`` densities carry separable
    1-d factors and a piecewise-constant envelope for rejection sampling.
    """

    name: str
    kind: str
    support: Rectangle
    level: tuple = ()
    values: np.ndarray | None = None
    factors: tuple = ()
    envelope: "Envelope | None" = None
    smoothness: tuple = field(default=())

    def __post_init__(self):
        if self.kind == "piecewise-constant":
            level = as_level(self.level, self.support.d)
            values = np.asarray(self.values, dtype=float)
            if values.shape != self._grid_shape(level):
                raise ValueError(f"values must have shape {self._grid_shape(level)}")
            if np.any(values < 0):
                raise ValueError("density values must be >= 0")
            values = values.copy()
            values.setflags(write=False)
            object.__setattr__(self, "level", level)
            object.__setattr__(self, "values", values)
        elif self.kind == "callable-with-envelope":
            if len(self.factors) != self.support.d or self.envelope is None:
                raise ValueError("callable densities need one factor per axis and an envelope")
        else:
            raise ValueError(f"unknown density kind {self.kind!r}")
        total = self._mass(np.asarray([self.support.lo]), np.asarray([self.support.hi]))[0]
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"density {self.name!r} integrates to {total}, not 1")

    @property
    def d(self) -> int:
        return self.support.d

    def _grid_shape(self, level) -> tuple:
        return tuple(
            int(round((b - a) * 2**j)) for j, a, b in zip(level, self.support.lo, self.support.hi)
        )

    def _offset(self) -> np.ndarray:
        return np.round(np.asarray(self.support.lo) * 2.0 ** np.asarray(self.level)).astype(np.int64)

    def as_poly(self) -> PiecewisePoly:
        """The density as an element of ``m_dir(0, I(level))`` (piecewise-constant only)."""
        if self.kind != "piecewise-constant":
            raise ValueError("only piecewise-constant densities are polynomial")
        idx = np.stack(np.meshgrid(*[np.arange(s) for s in self.values.shape], indexing="ij"), axis=-1)
        keys = idx.reshape(-1, self.d) + self._offset()
        return PiecewisePoly.piecewise_constant(self.level, keys, self.values.reshape(-1))

    def pdf(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "piecewise-constant":
            return eval_poly(self.as_poly(), x)
        inside = self.support.contains(x)
        out = np.ones(len(x))
        for i, fac in enumerate(self.factors):
            out *= fac.pdf(x[:, i])
        return np.where(inside, out, 0.0)

    def _cdf_pc(self, x: np.ndarray) -> np.ndarray:
        # multilinear interpolation of the cumulative cell masses is exact
        cum = self.values * level_volume(self.level)
        for i in range(self.d):
            cum = np.cumsum(cum, axis=i)
        cum = np.pad(cum, [(1, 0)] * self.d)
        t = (x - np.asarray(self.support.lo)) * 2.0 ** np.asarray(self.level)
        t = np.clip(t, 0.0, np.asarray(self.values.shape, dtype=float))
        i0 = np.minimum(np.floor(t).astype(np.int64), np.asarray(self.values.shape) - 1)
        frac = t - i0
        out = np.zeros(len(x))
        for corner in range(1 << self.d):
            bits = [(corner >> i) & 1 for i in range(self.d)]
            w = np.ones(len(x))
            idx = []
            for i, b in enumerate(bits):
                w *= frac[:, i] if b else 1.0 - frac[:, i]
                idx.append(i0[:, i] + b)
            out += w * cum[tuple(idx)]
        return out

    def mass(self, lo, hi) -> np.ndarray:
        """``P*(R)`` for each rectangle row ``[lo, hi)``."""
        # clip rounding residue of the inclusion-exclusion sum
        return np.clip(self._mass(lo, hi), 0.0, 1.0)

    def _mass(self, lo, hi) -> np.ndarray:
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        if self.kind == "piecewise-constant":
            total = np.zeros(len(lo))
            for corner in range(1 << self.d):
                bits = [(corner >> i) & 1 for i in range(self.d)]
                pt = np.where(np.asarray(bits, dtype=bool), hi, lo)
                sign = -1.0 if (self.d - sum(bits)) % 2 else 1.0
                total += sign * self._cdf_pc(pt)
            return total
        out = np.ones(len(lo))
        for i, fac in enumerate(self.factors):
            a = np.clip(lo[:, i], self.support.lo[i], self.support.hi[i])
            b = np.clip(hi[:, i], self.support.lo[i], self.support.hi[i])
            out *= np.maximum(fac.cdf(b) - fac.cdf(a), 0.0)
        return out

    def sup(self) -> float:
        if self.kind == "piecewise-constant":
            return float(self.values.max())
        return float(self.envelope.values.max())


class AliasTable:
    """Walker/Vose alias table for O(1) draws from a finite distribution."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or not len(w) or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be a non-empty non-negative vector with positive sum")
        m = len(w)
        scaled = w * m / w.sum()
        prob = np.ones(m)
        alias = np.arange(m)
        small = [i for i in range(m) if scaled[i] < 1.0]
        large = [i for i in range(m) if scaled[i] >= 1.0]
        while small and large:
            s, g = small.pop(), large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            (small if scaled[g] < 1.0 else large).append(g)
        self.prob = prob
        self.alias = alias

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        idx = rng.integers(0, len(self.prob), size=n)
        keep = rng.random(n) < self.prob[idx]
        return np.where(keep, idx, self.alias[idx])


def _draw_cells(values, level, offset, n: int, rng: np.random.Generator) -> np.ndarray:
    """Alias draw of a cell with probability proportional to its value, then uniform inside."""
    flat = AliasTable(values.reshape(-1)).draw(rng, n)
    cells = np.stack(np.unravel_index(flat, values.shape), axis=-1) + offset
    width = 2.0 ** (-np.asarray(level, dtype=float))
    return (cells + rng.random((n, len(level)))) * width


def sample_density(spec: DensitySpec, n: int, seed) -> Sample:
    """``n`` iid draws, reproducible for a given seed."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    if n == 0:
        return Sample(np.zeros((0, spec.d)))
    if spec.kind == "piecewise-constant":
        return Sample(_draw_cells(spec.values, spec.level, spec._offset(), n, rng))
    env = spec.envelope
    accept_rate = 1.0 / env.total
    if accept_rate < MIN_ACCEPTANCE:
        raise EnvelopeError(f"rejection acceptance {accept_rate:.2e} below {MIN_ACCEPTANCE}")
    out = []
    got = 0
    while got < n:
        batch = int(1.2 * (n - got) / accept_rate) + 16
        x = env.draw(rng, batch)
        p = spec.pdf(x)
        e = env.value(x)
        if np.any(p > e * (1 + 1e-9)):
            raise EnvelopeError("envelope does not dominate the density")
        keep = x[rng.random(batch) * e < p]
        out.append(keep)
        got += len(keep)
    return Sample(np.concatenate(out)[:n])


@dataclass(frozen=True, eq=False)
class Envelope:
    """Piecewise-constant dominating function on dyadic cells of ``support``."""

    support: Rectangle
    level: tuple
    values: np.ndarray

    def __post_init__(self):
        level = as_level(self.level, self.support.d)
        values = np.asarray(self.values, dtype=float)
        if np.any(values < 0) or values.sum() <= 0:
            raise ValueError("envelope values must be >= 0 with positive sum")
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "values", values)

    @property
    def total(self) -> float:
        return float(self.values.sum() * level_volume(self.level))

    def _offset(self) -> np.ndarray:
        return np.round(np.asarray(self.support.lo) * 2.0 ** np.asarray(self.level)).astype(np.int64)

    def value(self, x: np.ndarray) -> np.ndarray:
        idx = np.floor(x * 2.0 ** np.asarray(self.level)).astype(np.int64) - self._offset()
        idx = np.clip(idx, 0, np.asarray(self.values.shape) - 1)
        return self.values[tuple(idx.T)]

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return _draw_cells(self.values, self.level, self._offset(), n, rng)


def piecewise_constant(name: str, level, values, support: Rectangle | None = None) -> DensitySpec:
    values = np.asarray(values, dtype=float)
    support = support or Rectangle.unit(values.ndim)
    return DensitySpec(name, "piecewise-constant", support, level, values)


def _tent_factor() -> Factor1D:
    def pdf(x):
        return np.where((x >= 0) & (x < 1), 2.0 - 4.0 * np.abs(x - 0.5), 0.0)

    def cdf(x):
        x = np.clip(x, 0.0, 1.0)
        return np.where(x < 0.5, 2.0 * x * x, 1.0 - 2.0 * (1.0 - x) ** 2)

    return Factor1D(pdf, cdf)


def tent(d: int = 1) -> DensitySpec:
    """Product of tent densities ``2 - 4|x - 1/2|`` on ``[0, 1)^d``; Lipschitz with seminorm 8 per axis."""
    support = Rectangle.unit(d)
    env = Envelope(support, (0,) * d, np.full((1,) * d, 2.0**d))
    return DensitySpec(
        "tent" if d == 1 else f"tent{d}",
        "callable-with-envelope",
        support,
        factors=(_tent_factor(),) * d,
        envelope=env,
        smoothness=((1.0,) * d, (8.0 * 2.0 ** (d - 1),) * d),
    )


STEP3_VALUES = [0.5, 1.5, 1.0, 1.0, 1.5, 0.5, 1.25, 0.75]
TWOLEVEL_VALUES = [1.25, 1.75, 1.25, 1.75, 0.25, 0.75, 0.25, 0.75]


def registry() -> dict:
    """Named densities used by tests, the CLI and the experiments."""
    return {
        "uniform": piecewise_constant("uniform", (0,), [1.0]),
        "halfstep": piecewise_constant("halfstep", (1,), [2.0, 0.0]),
        "step3": piecewise_constant("step3", (3,), STEP3_VALUES),
        "twolevel": piecewise_constant("twolevel", (3,), TWOLEVEL_VALUES),
        "tent": tent(1),
        "uniform2": piecewise_constant("uniform2", (0, 0), [[1.0]]),
        "step2": piecewise_constant("step2", (1, 2), [[0.5, 1.5, 1.0, 1.0], [1.5, 0.5, 0.75, 1.25]]),
        "tent2": tent(2),
    }


def get_density(name: str) -> DensitySpec:
    reg = registry()
    if name not in reg:
        raise KeyError(f"unknown density {name!r}; choose from {sorted(reg)}")
    return reg[name]
