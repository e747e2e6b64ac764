import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flas.errors import InsufficientHistory, TooShort
from flas.forecasting.trend import (HARMONIC_AR, PURE_AR, TrendModel, ar2_stationary,
                                    fit_trend_model, forecast_trend, score_candidates)

T = np.arange(400)


def _series(values):
    return np.c_[T[:len(values)], values]


def test_clean_sinusoid_selects_harmonic():
    amp = 0.02
    m = fit_trend_model(_series(0.05 + amp * np.sin(2 * np.pi * T / 100)), seasonal_period=100)
    assert m.kind == HARMONIC_AR
    assert m.cv_mae < 1e-6 * amp


def test_white_noise_has_no_spurious_skill():
    noise = np.random.default_rng(0).normal(size=400)
    scores = score_candidates(_series(noise))
    m = fit_trend_model(_series(noise))
    assert m.cv_mae >= 0.9 * scores["naive"]


def test_constant_series_gives_zero_trend():
    m = fit_trend_model(_series(np.full(400, 0.05)))
    assert m.mean == 0 and m.ar_coeffs == (0.0, 0.0)
    f = forecast_trend(m, [0.0, 0.0, 0.0], 10, 2.0, 4)
    assert f.values == (0.0,) * 4


def test_too_short():
    with pytest.raises(TooShort):
        fit_trend_model(_series(np.zeros(150)), seasonal_period=100)


@settings(max_examples=8)
@given(st.integers(0, 2**31))
def test_selection_never_picks_worse_candidate(seed):
    rng = np.random.default_rng(seed)
    x = np.sin(2 * np.pi * T[:300] / 100) * rng.uniform(0, 2) + np.cumsum(rng.normal(size=300)) * 0.1
    scores = score_candidates(_series(x))
    m = fit_trend_model(_series(x))
    other = PURE_AR if m.kind == HARMONIC_AR else HARMONIC_AR
    assert m.cv_mae <= scores[other][1]


def _ar_model(phi=(0.5, -0.2)):
    return TrendModel(HARMONIC_AR, 50.0, 0.1, ((0.3, -0.1), (0.05, 0.02)), phi)


def _oracle(model, hist, last, targets):
    r = [hist[-2] - model.seasonal(last - 1), hist[-1] - model.seasonal(last)]
    for _ in range(max(targets) - last):
        r.append(model.ar_coeffs[0] * r[-1] + model.ar_coeffs[1] * r[-2])
    return [float(model.seasonal(t)) + r[1 + t - last] for t in targets]


def test_forecast_offsets_and_recursion():
    m = _ar_model()
    hist = [0.4, -0.3, 0.2]
    f = forecast_trend(m, hist, 100, 2.3, 4)
    assert f.ticks == (103, 104, 105, 106)
    assert np.allclose(f.values, _oracle(m, hist, 100, list(f.ticks)), atol=1e-12)
    assert forecast_trend(m, hist, 100, 3.0, 1).ticks == (103,)
    assert forecast_trend(m, hist, 100, 1.0, 1, dt=0.5).ticks == (102,)


def test_memoryless_ar_returns_seasonal_component():
    m = _ar_model((0.0, 0.0))
    f = forecast_trend(m, [5.0, 7.0], 20, 1.0, 5)
    assert np.allclose(f.values, m.seasonal(np.array(f.ticks)))


def test_full_period_offset():
    m = TrendModel(HARMONIC_AR, 100.0, 0.0, ((1.0, 0.5),))
    hist = list(m.seasonal(np.arange(8, 11)))
    f = forecast_trend(m, hist, 10, 100.0, 1)
    assert f.values[0] == pytest.approx(float(m.seasonal(10)), abs=1e-6)


@given(st.integers(1, 8), st.floats(0, 20), st.lists(st.floats(-5, 5), min_size=2, max_size=6))
def test_prefix_consistent_and_deterministic(h, t_sa, hist):
    m = _ar_model()
    a = forecast_trend(m, hist, 50, t_sa, h)
    b = forecast_trend(m, hist, 50, t_sa, h + 1)
    assert a.values == b.values[:h]
    assert a == forecast_trend(m, hist, 50, t_sa, h)


def test_settled_history_lookup():
    # targets at or before the last settled tick read the history directly
    m = _ar_model()
    hist = [1.0, 2.0, 3.0, 4.0]
    f = forecast_trend(m, hist, 10, 0.0, 3, last_tick=11)
    assert f.values[:2] == (3.0, 4.0)
    with pytest.raises(InsufficientHistory):
        forecast_trend(m, [1.0], 10, 1.0, 2)
    with pytest.raises(InsufficientHistory):
        forecast_trend(m, hist, 2, 0.0, 1, last_tick=11)


def test_stationarity_region():
    assert ar2_stationary(0.5, 0.3) and ar2_stationary(0.0, 0.0)
    assert not ar2_stationary(0.7, 0.4)
    assert not ar2_stationary(0.0, -1.0)
    assert not ar2_stationary(-1.5, 0.6)


def test_text_round_trip():
    m = TrendModel(HARMONIC_AR, 100.0, 0.1 / 3, ((math.pi, -1e-17), (2.0, 3.0)), (0.3, -0.1),
                   0.2, 1e-5, 0.9, 0.01, 11, 2, 1.0, 5)
    back = TrendModel.from_text(m.to_text())
    assert back == m
    legacy = "\n".join(l for l in m.to_text().splitlines() if not l.startswith("median_width"))
    assert TrendModel.from_text(legacy).median_width == 1
