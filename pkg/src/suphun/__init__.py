"""Sup-norm density estimation with hun and moshun estimators on dyadic polynomial models."""
from .dyadic import DyadicCell, LevelRangeError, Rectangle, cell_of, refine_cell
from .hun import HunConfig, ModelSpec, epsilon_probe, hun_estimate, hun_fit, hun_objective, select_test_cell, t_statistic
from .minimax import CellCounts, FitResult, SolverError, chebyshev_value, fit_cell_minimax
from .poly import PiecewisePoly, coarsen, coarsest_level, eval_poly, integrate_poly, sup_norm
from .selection import (
    ModelCollection,
    PenaltyConfig,
    candidate_bandwidth,
    model_bandwidth,
    moshun_select,
    penalty,
)
from .seminorm import (
    ClassConfig,
    Sample,
    bernstein_event_holds,
    empirical_seminorm_h,
    gamma_cap,
    mass_seminorm_h,
    seminorm_h,
)
from .theory import empirical_kappa, kappa_certificate

__all__ = [
    "CellCounts",
    "ClassConfig",
    "DyadicCell",
    "FitResult",
    "HunConfig",
    "LevelRangeError",
    "ModelCollection",
    "ModelSpec",
    "PenaltyConfig",
    "PiecewisePoly",
    "Rectangle",
    "Sample",
    "SolverError",
    "bernstein_event_holds",
    "candidate_bandwidth",
    "cell_of",
    "chebyshev_value",
    "coarsen",
    "coarsest_level",
    "empirical_kappa",
    "empirical_seminorm_h",
    "epsilon_probe",
    "eval_poly",
    "fit_cell_minimax",
    "gamma_cap",
    "hun_estimate",
    "hun_fit",
    "hun_objective",
    "integrate_poly",
    "kappa_certificate",
    "mass_seminorm_h",
    "model_bandwidth",
    "moshun_select",
    "penalty",
    "refine_cell",
    "select_test_cell",
    "seminorm_h",
    "sup_norm",
    "t_statistic",
]
