import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from suphun.densities import get_density, sample_density
from suphun.dyadic import DyadicCell
from suphun.hun import (
    HunConfig,
    ModelSpec,
    epsilon_probe,
    hun_estimate,
    hun_fit,
    hun_objective,
    random_model_element,
    select_test_cell,
    t_statistic,
)
from suphun.poly import PiecewisePoly, integrate_poly
from suphun.selection import model_bandwidth
from suphun.seminorm import ClassConfig, Sample, histogram, seminorm_h, z_statistic

UNIFORM = PiecewisePoly.piecewise_constant((0,), [[0]], [1.0])
LEFT2 = PiecewisePoly.piecewise_constant((1,), [[0]], [2.0])


def test_config_validation():
    with pytest.raises(ValueError):
        HunConfig(h=0.0)
    with pytest.raises(ValueError):
        HunConfig(h=0.1, refine_l=0)
    with pytest.raises(ValueError):
        HunConfig(h=0.1, delta=-1.0)
    with pytest.raises(ValueError):
        ModelSpec((-1,), (2,))
    assert ModelSpec(1, (2, 3)).degrees == (1, 1)


# T statistic -------------------------------------------------------------------

def test_t_statistic_example():
    s = Sample([0.25, 0.75, 0.9])
    C = DyadicCell((1,), (1,))
    assert t_statistic(UNIFORM, LEFT2, C, 0.5, s) == pytest.approx(-1 / 6, rel=1e-14)


def test_t_statistic_centered_sample():
    s = Sample([0.25, 0.75])
    assert t_statistic(UNIFORM, UNIFORM, DyadicCell((1,), (0,)), 0.3, s) == 0.0


def test_t_statistic_is_an_empirical_mean(rng):
    pts = rng.uniform(size=50)
    C = DyadicCell((2,), (1,))
    whole = t_statistic(UNIFORM, LEFT2, C, 0.1, Sample(pts))
    parts = np.mean([t_statistic(UNIFORM, LEFT2, C, 0.1, Sample([x])) for x in pts])
    assert whole == pytest.approx(parts, abs=1e-14)


@pytest.mark.parametrize("name", ["step3", "tent"])
def test_t_statistic_unbiased(name):
    spec = get_density(name)
    p, q = UNIFORM, LEFT2
    C, h, B = DyadicCell((2,), (1,)), 0.05, 10_000
    tau = 1.0 if integrate_poly(p - q, C.rect) >= 0 else -1.0
    delta = tau * (integrate_poly(p, C.rect) - float(spec.mass(C.lo[None], C.hi[None])[0])) / (C.volume + h)
    x = sample_density(spec, B, seed=11).points
    # one observation per replication
    t = tau * (integrate_poly(p, C.rect) - C.contains(x)) / (C.volume + h)
    assert abs(t.mean() - delta) <= 3 * t.std(ddof=1) / np.sqrt(B)
    assert t_statistic(p, q, C, h, Sample(x)) == pytest.approx(t.mean(), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_deviation_bounded_by_z(seed):
    spec = get_density("step3")
    rng = np.random.default_rng(seed)
    model = ModelSpec((1,), (2,))
    p, q = random_model_element(model, rng), random_model_element(model, rng)
    C = select_test_cell(p - q, 1)
    s = sample_density(spec, 400, seed)
    h = 0.02
    tau = 1.0 if integrate_poly(p - q, C.rect) >= 0 else -1.0
    delta = tau * (integrate_poly(p, C.rect) - float(spec.mass(C.lo[None], C.hi[None])[0])) / (C.volume + h)
    Z = z_statistic(s, spec, h, ClassConfig(1, C.level, C.level))
    assert abs(t_statistic(p, q, C, h, s) - delta) <= Z + 1e-12


# test cells ----------------------------------------------------------------------

@pytest.mark.parametrize(
    "diff, expected",
    [
        (UNIFORM, DyadicCell((1,), (0,))),
        (PiecewisePoly((0,), (1,), [[0]], [[0.0, 1.0]]), DyadicCell((1,), (1,))),
        (PiecewisePoly.piecewise_constant((0,), [[1], [0]], [-5.0, 2.0]), DyadicCell((1,), (2,))),
    ],
)
def test_select_test_cell_examples(diff, expected):
    assert select_test_cell(diff, 1) == expected


def test_select_test_cell_degenerate():
    cell, flag = select_test_cell(PiecewisePoly.zero((2,), (0,)), 1, with_flag=True)
    assert flag and cell == DyadicCell((3,), (0,))


# objective and fit ----------------------------------------------------------------

def test_objective_examples():
    hist = histogram(Sample([0.25, 0.75]), (1,))
    assert hun_objective(UNIFORM, hist, 0.5) == 0.0
    assert hun_objective(PiecewisePoly.zero((0,), (0,)), hist, 0.5) == pytest.approx(0.5)
    empty = histogram(Sample(np.empty((0, 1))), (1,))
    assert hun_objective(PiecewisePoly.zero((0,), (0,)), empty, 0.5) == 0.0


def test_estimate_recovers_uniform():
    est = hun_estimate(Sample([0.25, 0.75]), ModelSpec((0,), (0,)), HunConfig(h=0.5))
    assert est.level == (0,)
    np.testing.assert_allclose(est.coefs.ravel(), [1.0], atol=1e-12)


def test_estimate_supported_on_occupied_cell():
    est = hun_estimate(Sample([0.55, 0.6, 0.7]), ModelSpec((0,), (2,)), HunConfig(h=0.1))
    np.testing.assert_array_equal(est.keys, [[2]])


def test_empty_sample_is_flagged():
    fit = hun_fit(Sample(np.empty((0, 2))), ModelSpec((1, 1), (1, 1)), 1)
    assert fit.empty and fit.estimate.is_zero


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        hun_fit(Sample(np.zeros((3, 2))), ModelSpec((0,), (1,)), 1)


@given(
    st.integers(0, 2),
    st.integers(0, 3),
    st.integers(1, 2),
    st.sampled_from([1e-3, 0.05, 1.0]),
    st.integers(0, 2**31 - 1),
)
@settings(max_examples=20)
def test_minimizer_certificate(r, j, l, h, seed):
    model = ModelSpec((r,), (j,))
    s = sample_density(get_density("step3"), 300, seed)
    fit = hun_fit(s, model, l)
    best = hun_objective(fit.estimate, fit.histogram, h)
    rng = np.random.default_rng(seed)
    for _ in range(50):
        p = random_model_element(model, rng)
        p = PiecewisePoly(p.level, p.degrees, p.keys, p.coefs * rng.choice([0.1, 1.0]) + fit.estimate.refine_to(p.level).coefs.mean())
        assert best <= hun_objective(p, fit.histogram, h) + 1e-9
    # perturbations of the fit itself
    for _ in range(20):
        noise = PiecewisePoly(fit.estimate.level, fit.estimate.degrees, fit.estimate.keys,
                              fit.estimate.coefs + 1e-3 * rng.standard_normal(fit.estimate.coefs.shape))
        assert best <= hun_objective(noise, fit.histogram, h) + 1e-9


def test_cell_objectives_match_counts():
    s = sample_density(get_density("step3"), 500, 4)
    fit = hun_fit(s, ModelSpec((0,), (2,)), 1)
    h = 1e-9
    # the cell sup at vanishing h is max F / (n mu)
    mu = 2.0 ** -3
    assert hun_objective(fit.estimate, fit.histogram, h) == pytest.approx(fit.max_cell_objective / (s.n * (mu + h)), rel=1e-7)


def test_error_decreases_with_n():
    spec = get_density("step3")
    model = ModelSpec((0,), (3,))
    grid = (np.arange(4096) + 0.5) / 4096
    errs = []
    for n in (500, 5000, 50000):
        e = [np.abs(hun_fit(sample_density(spec, n, seed), model, 1).estimate(grid[:, None]) - spec.pdf(grid[:, None])).max() for seed in range(5)]
        errs.append(np.mean(e))
    assert errs[0] > errs[1] > errs[2]


# epsilon probe --------------------------------------------------------------------

@pytest.mark.parametrize("h", [2.0**-8, 2.0**-4, 1.0])
def test_epsilon_zero_for_constants(h):
    assert epsilon_probe(ModelSpec((0,), (2,)), h, 1, 50, seed=0) == pytest.approx(0.0, abs=1e-12)


def test_epsilon_quadratic_below_one():
    eps = epsilon_probe(ModelSpec((2,), (1,)), 2.0**-6, 3, 200, seed=1)
    assert 0.0 <= eps < 1.0


def test_epsilon_validation():
    with pytest.raises(ValueError):
        epsilon_probe(ModelSpec((0,), (1,)), 0.1, 1, 0, seed=0)


@pytest.mark.parametrize("seed", range(8))
def test_oracle_inequality_with_z(seed):
    spec = get_density("step3")
    model = ModelSpec((0,), (3,))
    l = 1
    h = model_bandwidth(model)
    fine = model.fine_level(l)
    K = ClassConfig(1, fine, fine)
    eps = epsilon_probe(model, h, l, 50, seed=seed)
    s = sample_density(spec, 2000, seed)
    p_hat = hun_fit(s, model, l).estimate
    p_bar = spec.as_poly()
    lhs = (1 - eps) * seminorm_h(p_bar - p_hat, h, K)
    assert lhs <= 2 * z_statistic(s, spec, h, K) + 1e-12
