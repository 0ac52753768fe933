import math

import pytest

from suphun import experiment
from suphun.config import load_config, parse_ints
from suphun.densities import get_density, sample_density
from suphun.experiment import (
    CSV_HEADER,
    ExperimentConfig,
    RiskReport,
    oracle_display,
    rate_slope,
    read_csv,
    risk_experiment,
    row_seed,
    sup_error,
)
from suphun.hun import ModelSpec, epsilon_probe
from suphun.poly import PiecewisePoly
from suphun.selection import model_bandwidth


def _rows(pairs):
    return RiskReport([{"n": n, "sup_error": e, "status": "ok"} for n, e in pairs])


def test_rate_slope_exact_synthetic():
    ns = [2**k for k in range(8, 15)]
    rep = _rows([(n, 3.0 * (n / math.log(n)) ** (-1 / 3)) for n in ns])
    assert rate_slope(rep) == pytest.approx(-1 / 3, abs=1e-9)


def test_rate_slope_constant_and_errors():
    assert rate_slope(_rows([(n, 0.2) for n in (10, 20, 40, 80)])) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        rate_slope(_rows([(n, 0.2) for n in (10, 20, 40)]))


def test_failed_rows_are_ignored_by_means():
    rep = _rows([(10, 1.0), (10, 3.0)])
    rep.rows.append({"n": 10, "sup_error": float("nan"), "status": "error:X"})
    assert rep.mean_error_by_n() == {10: 2.0}


def test_empty_config_gives_empty_report():
    assert risk_experiment(None).rows == []
    assert risk_experiment(ExperimentConfig()).rows == []
    assert risk_experiment(ExperimentConfig()).to_csv() == ",".join(CSV_HEADER) + "\n"


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(estimator="kde")
    with pytest.raises(ValueError):
        ExperimentConfig(n_values=(1,))


def test_row_seed_is_order_free():
    a = row_seed(5, "tent", 1024, 3)
    assert a == row_seed(5, "tent", 1024, 3)
    assert len({row_seed(5, "tent", n, r) for n in (1024, 2048) for r in range(50)}) == 100
    assert a != row_seed(6, "tent", 1024, 3) and a != row_seed(5, "step3", 1024, 3)


def test_sup_error_grid():
    zero = PiecewisePoly.zero((0,), (0,))
    # midpoints never hit the tent apex exactly
    assert sup_error(get_density("tent"), zero, 4096) == pytest.approx(2 - 2 / 4096, rel=1e-12)
    exact = get_density("step3").as_poly()
    assert sup_error(get_density("step3"), exact) == 0.0


def test_error_row_recorded(monkeypatch):
    calls = {"k": 0}
    real = experiment.sample_density

    def flaky(spec, n, seed):
        calls["k"] += 1
        if calls["k"] == 2:
            raise RuntimeError("boom")
        return real(spec, n, seed)

    monkeypatch.setattr(experiment, "sample_density", flaky)
    rep = risk_experiment(ExperimentConfig(n_values=(64,), reps=3, grid=512))
    assert [r["status"] for r in rep.rows] == ["ok", "error:RuntimeError", "ok"]
    assert ",error:RuntimeError" in rep.to_csv()


def test_csv_roundtrip_and_threads(monkeypatch):
    cfg = ExperimentConfig(estimator="moshun", density="twolevel", j_max=(4,), n_values=(128, 256), reps=3, base_seed=9, grid=512)
    monkeypatch.setenv(experiment.THREADS_ENV, "1")
    one = risk_experiment(cfg)
    monkeypatch.setenv(experiment.THREADS_ENV, "2")
    two = risk_experiment(cfg)
    assert one.to_csv() == two.to_csv()
    back = read_csv(one.to_csv())
    assert back.mean_error_by_n() == one.mean_error_by_n()
    assert "wall_time" in one.to_json() and "wall_time" not in one.to_csv()


def test_hun_risk_decreases_with_n():
    cfg = ExperimentConfig(density="step3", level=(3,), n_values=tuple(2**k for k in range(8, 15)), reps=20, base_seed=1, grid=1024)
    means = list(risk_experiment(cfg).mean_error_by_n().values())
    assert all(a > b for a, b in zip(means, means[1:]))


@pytest.mark.parametrize("seed", range(5))
def test_oracle_display_rows(seed):
    spec = get_density("step3")
    model = ModelSpec((0,), (3,))
    h = model_bandwidth(model)
    eps = epsilon_probe(model, h, 2, 20, seed=seed)
    s = sample_density(spec, 2000, row_seed(seed, "step3", 2000, 0))
    check = oracle_display(s, spec, model, 2, h, 2.0, eps)
    assert check.holds or not check.omega


def test_parse_ints():
    assert parse_ints("2^3..2^5") == (8, 16, 32)
    assert parse_ints("1, 2,3") == (1, 2, 3)


def test_load_config(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(
        "[density]\nname = tent\n[model]\nlevel = 4\nrefine_l = 2\n"
        "[collection]\nj_max = 8\nisotropic = no\nmode = exact-lp\n"
        "[penalty]\na = 2.5\n[experiment]\nestimator = moshun\nn = 2^8..2^9\nreps = 4\ngrid = 1024\n"
    )
    cfg = load_config(str(path), reps=7, density=None)
    assert cfg.density == "tent" and cfg.level == (4,) and cfg.refine_l == 2
    assert cfg.j_max == (8,) and cfg.isotropic is False and cfg.mode == "exact-lp"
    assert cfg.a == 2.5 and cfg.estimator == "moshun" and cfg.n_values == (256, 512)
    assert cfg.reps == 7 and cfg.grid == 1024
    bad = tmp_path / "bad.ini"
    bad.write_text("[densty]\nname = tent\n")
    with pytest.raises(ValueError):
        load_config(str(bad))


def test_two_dimensional_rows_broadcast_levels():
    cfg = ExperimentConfig(density="step2", level=(2,), n_values=(300,), reps=1, grid=64)
    rows = risk_experiment(cfg).rows
    assert rows[0]["status"] == "ok" and rows[0]["level"] == "2x2"
