import math

import numpy as np
import pytest

from suphun.approx import (
    SmoothnessSpec,
    approx_bound,
    approx_error,
    chebyshev_nodes,
    project_smooth,
    rate_params,
)
from suphun.dyadic import Rectangle

UNIT1 = Rectangle.unit(1)
UNIT2 = Rectangle.unit(2)


def tent(x):
    return 1.0 - np.abs(2.0 * x[:, 0] - 1.0)


def sinprod(x):
    return np.sin(np.pi * x[:, 0]) * np.sin(2 * np.pi * x[:, 1])


# analytic seminorms: oscillation of the floor(beta)-th partial derivative
FIXTURES = [
    ("tent", tent, UNIT1, SmoothnessSpec((1.0,), (4.0,))),
    ("sin-b1", sinprod, UNIT2, SmoothnessSpec((1.0, 1.0), (2 * math.pi, 4 * math.pi))),
    ("sin-b2", sinprod, UNIT2, SmoothnessSpec((2.0, 2.0), (2 * math.pi**2, 8 * math.pi**2))),
]


def test_identity_midpoints():
    g = project_smooth(lambda x: x[:, 0], (0,), (1,), UNIT1)
    np.testing.assert_allclose(g.coefs.ravel(), [0.25, 0.75])
    # attained at the left edge of each cell, which the half-open grid includes
    assert approx_error(lambda x: x[:, 0], g, 64) == 0.25


def test_constant_is_exact():
    g = project_smooth(lambda x: np.full(len(x), 3.5), (1, 2), (2, 1), UNIT2)
    assert approx_error(lambda x: np.full(len(x), 3.5), g, 17) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("level", [0, 2, 4])
def test_quadratic_reproduced(level):
    f = lambda x: x[:, 0] ** 2 - 0.3 * x[:, 0]
    g = project_smooth(f, (2,), (level,), UNIT1)
    assert approx_error(f, g, 64) <= 1e-10


def test_exact_match_is_zero():
    g = project_smooth(tent, (1,), (1,), UNIT1)
    assert approx_error(lambda x: g(x), g, 32) == 0.0


def test_grid_refinement_monotone():
    g = project_smooth(sinprod, (1, 0), (1, 2), UNIT2)
    vals = [approx_error(sinprod, g, G) for G in (32, 64, 128)]
    assert vals[0] <= vals[1] <= vals[2]
    with pytest.raises(ValueError):
        approx_error(sinprod, g, 16)


def test_chebyshev_nodes():
    assert chebyshev_nodes(0)[0] == pytest.approx(0.5)
    np.testing.assert_allclose(chebyshev_nodes(1), [(1 - math.sqrt(0.5)) / 2, (1 + math.sqrt(0.5)) / 2])


@pytest.mark.parametrize("name, f, support, spec", FIXTURES, ids=[f[0] for f in FIXTURES])
@pytest.mark.parametrize("level", [0, 1, 2, 3, 4])
def test_approximation_bound(name, f, support, spec, level):
    base = [int(math.floor(b)) for b in spec.beta]
    for extra in (0, 1, 2):
        degrees = tuple(v + extra for v in base)
        lv = (level,) * spec.d if spec.d == 1 or level <= 3 else (level, level - 1)
        g = project_smooth(f, degrees, lv, support)
        assert approx_error(f, g, 32) <= approx_bound(spec, lv, degrees)


@pytest.mark.parametrize("f, support", [(tent, UNIT1), (sinprod, UNIT2)], ids=["tent", "sin"])
def test_error_halving_lipschitz(f, support):
    d = support.d
    # from j = 3 on; the sine product is still pre-asymptotic at j = 2 (ratio 1.74)
    errs = [approx_error(f, project_smooth(f, (0,) * d, (j,) * d, support), 32) for j in range(3, 8)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios >= 1.8)


def test_rate_params_examples():
    beta, L, e = rate_params(SmoothnessSpec((1.0, 1.0), (2.0, 8.0)))
    assert (beta, L, e) == pytest.approx((1.0, 4.0, 0.25))
    assert rate_params(SmoothnessSpec((1.0,), (1.0,)))[2] == pytest.approx(1 / 3)
    assert SmoothnessSpec((0.7,) * 3, (1.0,) * 3).beta_harmonic == pytest.approx(0.7)


def test_smoothness_validation():
    with pytest.raises(ValueError):
        SmoothnessSpec((1.0,), (1.0, 2.0))
    with pytest.raises(ValueError):
        SmoothnessSpec((0.0,), (1.0,))
    with pytest.raises(ValueError):
        SmoothnessSpec((1.0,), (1.0,), sup_bound=0.0)
