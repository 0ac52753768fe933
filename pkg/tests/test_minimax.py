import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from suphun.dyadic import DyadicCell
from suphun.minimax import CellCounts, chebyshev_value, fit_cell_minimax, subcell_design


def cc1(counts, n, level=0, key=0, l=1):
    return CellCounts(DyadicCell((level,), (key,)), l, np.asarray(counts, dtype=float), n)


def test_chebyshev_value_examples():
    cc = cc1([3, 1], 4)
    assert chebyshev_value([0.0], cc, (0,)) == 3.0
    assert chebyshev_value([1.0], cc, (0,)) == 1.0
    assert chebyshev_value([2.0, -2.0], cc, (1,)) == pytest.approx(0.0, abs=1e-15)


def test_fit_constant():
    res = fit_cell_minimax(cc1([3, 1], 4), (0,))
    assert res.coeffs[0] == pytest.approx(1.0, abs=1e-12)
    assert res.objective == pytest.approx(1.0, abs=1e-12)


def test_fit_linear_interpolates():
    res = fit_cell_minimax(cc1([3, 1], 4), (1,))
    np.testing.assert_allclose(res.coeffs, [2.0, -2.0], atol=1e-12)
    assert res.objective == pytest.approx(0.0, abs=1e-12)


def test_empty_cell_short_circuits():
    res = fit_cell_minimax(cc1([0, 0, 0, 0], 10, l=2), (2,))
    assert res.objective == 0.0 and not np.any(res.coeffs)


def test_sparse_counts_and_validation():
    cell = DyadicCell((0, 0), (0, 0))
    cc = CellCounts(cell, 1, {(1, 0): 2}, 2)
    np.testing.assert_array_equal(cc.counts, [0, 0, 2, 0])
    with pytest.raises(ValueError):
        CellCounts(cell, 1, [1, 2, 3], 6)
    with pytest.raises(ValueError):
        CellCounts(cell, 1, [1, -1, 0, 0], 6)
    with pytest.raises(ValueError):
        CellCounts(cell, 0, [1], 1)


def test_subcell_design_rows_sum_to_cell_integral():
    A = subcell_design((1, 2), (2, 1))
    # monomial u^a v^b integrates to 1/((a+1)(b+1)) over the unit square
    np.testing.assert_allclose(A.sum(axis=0), [1, 1 / 2, 1 / 2, 1 / 4, 1 / 3, 1 / 6])


@st.composite
def cell_counts(draw):
    d = draw(st.integers(1, 2))
    l = draw(st.integers(1, 3 if d == 1 else 2))
    level = tuple(draw(st.lists(st.integers(0, 3), min_size=d, max_size=d)))
    index = tuple(draw(st.integers(0, 2**j - 1)) for j in level)
    degrees = tuple(draw(st.lists(st.integers(0, 2), min_size=d, max_size=d)))
    counts = draw(st.lists(st.integers(0, 30), min_size=2 ** (l * d), max_size=2 ** (l * d)))
    n = sum(counts) + draw(st.integers(1, 50))
    return CellCounts(DyadicCell(level, index), l, np.array(counts, float), n), degrees


@given(cell_counts(), st.integers(0, 2**31 - 1))
@settings(max_examples=60)
def test_fit_is_optimal_against_random_candidates(case, seed):
    cc, degrees = case
    res = fit_cell_minimax(cc, degrees)
    assert res.objective >= 0.0
    assert res.objective == pytest.approx(chebyshev_value(res.coeffs, cc, degrees), abs=1e-9)
    rng = np.random.default_rng(seed)
    scale = np.abs(res.coeffs).max() + 1.0
    for _ in range(100):
        v = res.coeffs + rng.normal(size=res.coeffs.shape) * scale * rng.choice([1e-3, 0.1, 1.0])
        assert res.objective <= chebyshev_value(v, cc, degrees) + 1e-9


@given(cell_counts(), st.integers(0, 2**31 - 1))
def test_objective_is_convex(case, seed):
    cc, degrees = case
    rng = np.random.default_rng(seed)
    shape = tuple(r + 1 for r in degrees)
    a, b = rng.normal(size=shape) * 5, rng.normal(size=shape) * 5
    lam = rng.uniform()
    mid = chebyshev_value(lam * a + (1 - lam) * b, cc, degrees)
    assert mid <= lam * chebyshev_value(a, cc, degrees) + (1 - lam) * chebyshev_value(b, cc, degrees) + 1e-9


@given(cell_counts())
def test_doubling_doubles_objective(case):
    cc, degrees = case
    twice = CellCounts(cc.cell, cc.refine_l, 2 * cc.counts, 2 * cc.n_total)
    assert fit_cell_minimax(twice, degrees).objective == pytest.approx(
        2 * fit_cell_minimax(cc, degrees).objective, rel=1e-9, abs=1e-9
    )


@given(st.integers(0, 40), st.integers(0, 40), st.integers(0, 6), st.integers(1, 100))
def test_constant_fit_closed_form(a, b, level, extra):
    # max(|a - m c|, |b - m c|) is minimized at m c = (a + b) / 2 with value |a - b| / 2
    n = a + b + extra
    cc = cc1([a, b], n, level=level, key=0)
    res = fit_cell_minimax(cc, (0,))
    m = n * 2.0 ** (-level) / 2
    assert res.objective == pytest.approx(abs(a - b) / 2, abs=1e-8)
    if a + b:
        assert res.coeffs[0] == pytest.approx((a + b) / (2 * m), abs=1e-8)
