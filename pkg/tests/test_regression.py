import numpy as np
import pytest
from hypothesis import given, strategies as st

from flas.errors import InsufficientData, RankDeficient, TooFewRows
from flas.forecasting.performance import (DEFAULT_PREDICTORS, estimate_rt, fit_performance_model,
                                          kpi_ranking, relative_errors)
from flas.forecasting.regression import LinearModel, kfold_cv, ols_fit, solve_ols
from flas.forecasting.scaling_time import fit_scaling_time, forecast_scaling_time
from flas.metrics import CleanSample

ZERO = dict(cpu_user=0, cpu_system=0, cpu_idle=100, cpu_wait=0, ctx_switches=0, intr=0,
            mem_used=0, mem_free=1, mem_cache=0, mem_buffers=0, disk_read=0, disk_write=0,
            net_recv=0, net_send=0, mem_used_pct=0, outlier_flag=False)


def _sample(t=0, **kw):
    return CleanSample(t=t, **{**ZERO, **kw})


def test_scaling_time_planted_plane():
    rng = np.random.default_rng(1)
    N, S = rng.uniform(0, 40000, 30), rng.uniform(0, 3e5, 30)
    rows = np.c_[N, S, 1 + 5e-5 * N + 1e-5 * S]
    m = fit_scaling_time(rows)
    assert m.intercept == pytest.approx(1, abs=1e-6)
    assert m.coef("notif_rate") == pytest.approx(5e-5, abs=1e-6)
    assert m.coef("stored_subs") == pytest.approx(1e-5, abs=1e-6)
    assert m.r2 == pytest.approx(1.0)


def test_scaling_time_degenerate_inputs():
    with pytest.raises(RankDeficient):
        fit_scaling_time([(100, 200, 1.5)] * 5)
    with pytest.raises(InsufficientData):
        fit_scaling_time([(1, 2, 1.0), (3, 4, 2.0)])
    rng = np.random.default_rng(2)
    rows = np.c_[rng.uniform(0, 1e4, 10), rng.uniform(0, 1e5, 10), np.full(10, 2.0)]
    m = fit_scaling_time(rows)
    assert m.intercept == pytest.approx(2.0) and np.allclose(m.coefficients, 0, atol=1e-12)


def test_forecast_scaling_time():
    m = LinearModel(1.0, (5e-5, 1e-5), ("notif_rate", "stored_subs"))
    assert forecast_scaling_time(m, 10000, 100000) == pytest.approx(2.5)
    assert forecast_scaling_time(m, 0, 0) == 1.0
    neg = LinearModel(-5.0, (0.0, 0.0), ("notif_rate", "stored_subs"))
    assert forecast_scaling_time(neg, 1, 1, dt=0.5) == 0.5


@given(st.integers(0, 2**31), st.integers(1, 5), st.integers(0, 20))
def test_ols_recovers_planted_coefficients(seed, p, extra):
    rng = np.random.default_rng(seed)
    n = p + 2 + extra
    X = rng.uniform(-100, 100, (n, p))
    beta = rng.uniform(-5, 5, p + 1)
    y = beta[0] + X @ beta[1:]
    got = solve_ols(X, y)
    assert np.allclose(got, beta, atol=1e-6)


@given(st.integers(0, 2**31))
def test_normal_equations(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 4)) * [1, 10, 100, 1000]
    y = rng.normal(size=60) * 50
    beta = solve_ols(X, y)
    A = np.c_[np.ones(60), X]
    resid = y - A @ beta
    scale = np.abs(A).T @ np.abs(y)
    assert np.all(np.abs(A.T @ resid) <= 1e-7 * scale)


def test_collinear_design_rejected():
    x = np.arange(10.0)
    with pytest.raises(RankDeficient):
        solve_ols(np.c_[x, 2 * x], x)
    with pytest.raises(RankDeficient):
        solve_ols(np.c_[x, np.full(10, 3.0)], x)
    with pytest.raises(InsufficientData):
        solve_ols(np.c_[x[:2], x[:2] ** 2], x[:2])


def test_model_text_round_trip_is_exact():
    rng = np.random.default_rng(5)
    m = ols_fit(rng.normal(size=(20, 3)), rng.normal(size=20), ["a", "b", "c"])
    back = LinearModel.from_text(m.to_text())
    assert back == m and back.to_text() == m.to_text()


def test_kfold_examples():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(1000, 3))
    r2, mae = kfold_cv(X, 1 + X @ [1.0, -2.0, 0.5], k=10)
    assert r2 == pytest.approx(1.0, abs=1e-9) and mae < 1e-9
    r2, _ = kfold_cv(X, rng.normal(size=1000), k=10)
    assert r2 <= 0.1
    with pytest.raises(TooFewRows):
        kfold_cv(X[:5], X[:5, 0], k=10)
    assert kfold_cv(X[:50], X[:50, 0] + X[:50, 1], seed=3) == kfold_cv(X[:50], X[:50, 0] + X[:50, 1], seed=3)


def _planted_rows(n=80, seed=7):
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        vals = {name: float(rng.uniform(0, 100)) for name in DEFAULT_PREDICTORS}
        vals["ctx_switches"] = float(rng.uniform(0, 5000))
        s = _sample(i, **vals)
        rt = 0.01 * s.mem_used_pct + 1e-5 * s.ctx_switches
        rows.append((s, rt, 100.0 * s.cpu_user))
    return rows


def test_performance_model_planted():
    rt_model, x_model = fit_performance_model(_planted_rows())
    assert rt_model.coef("mem_used_pct") == pytest.approx(0.01, abs=1e-6)
    assert rt_model.coef("ctx_switches") == pytest.approx(1e-5, abs=1e-6)
    for name in DEFAULT_PREDICTORS:
        if name not in ("mem_used_pct", "ctx_switches"):
            assert abs(rt_model.coef(name)) < 1e-6
    assert abs(rt_model.intercept) < 1e-6
    assert x_model.coef("cpu_user") == pytest.approx(100.0, abs=1e-6)
    assert kpi_ranking(rt_model, _planted_rows())[0][0] == "mem_used_pct"
    assert estimate_rt(rt_model, _sample(mem_used_pct=50.0)) == pytest.approx(0.5, abs=1e-6)
    assert np.all(relative_errors(rt_model, _planted_rows()[1:]) < 1e-6)


def test_performance_model_rejects_degenerate_rows():
    rows = _planted_rows(1) * 40
    with pytest.raises((InsufficientData, RankDeficient)):
        fit_performance_model(rows)
    with pytest.raises(InsufficientData):
        fit_performance_model(_planted_rows(10))


def test_outlier_rows_are_skipped():
    rows = _planted_rows()
    bad = (_sample(999, mem_used_pct=1.0, outlier_flag=True), 1e6, 0.0)
    a, _ = fit_performance_model(rows)
    b, _ = fit_performance_model(rows + [bad])
    assert a == b


def test_estimate_rt_clamps_at_zero():
    m = LinearModel(-1.0, (0.0,), ("cpu_user",))
    assert estimate_rt(m, _sample()) == 0.0
    assert estimate_rt(LinearModel(0.0, (1.0,), ("cpu_user",)), _sample()) == 0.0
