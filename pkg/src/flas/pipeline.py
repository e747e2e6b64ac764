"""Trained predictor bundle used by the decider, and the training step."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InsufficientHistory, TooShort
from .forecasting.performance import (estimate_rt, fit_performance_model, kpi_ranking)
from .forecasting.regression import LinearModel, kfold_cv
from .forecasting.scaling_time import fit_scaling_time, forecast_scaling_time
from .forecasting.smoothing import settle_lag, settled_trend
from .forecasting.trend import ForecastVector, TrendModel, fit_trend_model, forecast_trend
from .metrics import CleanSample

# response times are modelled in milliseconds by the trend forecaster, so the
# trend thresholds read as "ms of response time per second"
TREND_UNIT = 1000.0


@dataclass(frozen=True)
class ScalerModels:
    scaling_time: LinearModel
    trend: TrendModel
    rt_model: LinearModel
    x_model: Optional[LinearModel] = None
    dt: float = 1.0

    def forecast_t(self, notif_rate: float, stored_subs: float) -> float:
        return forecast_scaling_time(self.scaling_time, notif_rate, stored_subs, self.dt)

    def estimate_rt(self, sample: CleanSample) -> float:
        return estimate_rt(self.rt_model, sample)

    def smoothed_history(self, history):
        """Settled smoothed derivative of (t, rt) pairs as (last_tick, values)."""
        lag = settle_lag(self.trend.sg_window, self.trend.median_width)
        # settled values never depend on points more than 2*lag back, so a
        # short tail is enough and keeps the per-tick cost flat
        tail = history[-(2 * lag + 8):]
        if len(tail) < 2 * lag + 2:
            raise InsufficientHistory(f"{len(tail)} estimates, need {2 * lag + 2}")
        values = np.array([v for _, v in tail]) * TREND_UNIT
        try:
            first, s = settled_trend(values, self.dt, self.trend.sg_window, self.trend.sg_degree,
                                     self.trend.median_width)
        except TooShort as exc:
            raise InsufficientHistory(str(exc)) from exc
        last_tick = int(tail[0][0]) + first + s.size - 1
        return last_tick, s

    def forecast_trend(self, history, t0: int, t_sa_pred: float, h: int) -> ForecastVector:
        last_tick, s = self.smoothed_history(history)
        return forecast_trend(self.trend, s, t0, t_sa_pred, h, self.dt, last_tick)


@dataclass(frozen=True)
class FitReport:
    scaling_time_r2: float
    scaling_time_mae: float
    scaling_time_cv_r2: float
    scaling_time_cv_mae: float
    trend_kind: str
    trend_cv_mae: float
    rt_r2: float
    rt_mae: float
    rt_cv_r2: float
    rt_cv_mae: float
    x_r2: float
    x_mae: float
    kpi_rt: tuple
    kpi_x: tuple

    def to_text(self) -> str:
        lines = [f"{k}={v}" for k, v in self.__dict__.items() if not k.startswith("kpi")]
        lines.append("kpi_rt=" + ",".join(f"{n}:{s:.4g}" for n, s in self.kpi_rt))
        lines.append("kpi_x=" + ",".join(f"{n}:{s:.4g}" for n, s in self.kpi_x))
        return "\n".join(lines) + "\n"


def estimated_series(rt_model: LinearModel, rt_series, samples):
    """Replace the response times of ``rt_series`` with model estimates."""
    if len(samples) != len(rt_series):
        raise ValueError("samples must align with the response-time series")
    return [(t, estimate_rt(rt_model, smp)) for (t, _), smp in zip(rt_series, samples)]


def train_models(scaling_rows, rt_series, perf_rows, dt=1.0, seasonal_period=100,
                 sg_window=11, sg_degree=2, harmonics=8, cv_seed=0, median_width=5,
                 rt_samples=None):
    """Fit all three forecasters. Returns ``(ScalerModels, FitReport)``.

    With ``rt_samples`` the trend model is fitted to the performance model's
    estimates for those samples, which is the signal the decider sees at run
    time, instead of the exact response times in ``rt_series``.
    """
    st = fit_scaling_time(scaling_rows)
    rows = np.asarray(scaling_rows, dtype=float)
    k = min(10, len(rows))
    st_cv = kfold_cv(rows[:, :2], rows[:, 2], k=k, seed=cv_seed) if k >= 2 else (math.nan, math.nan)

    rt_model, x_model = fit_performance_model(perf_rows)
    if rt_samples:
        rt_series = estimated_series(rt_model, rt_series, rt_samples)
    series = np.asarray(rt_series, dtype=float).copy()
    series[:, 1] *= TREND_UNIT
    trend = fit_trend_model(series, dt, seasonal_period, sg_window, sg_degree, harmonics,
                            median_width=median_width)

    clean = [r for r in perf_rows if not r[0].outlier_flag]
    X = np.array([[r[0].get(n) for n in rt_model.predictor_names] for r in clean])
    y = np.array([r[1] for r in clean])
    rt_cv = kfold_cv(X, y, k=10, seed=cv_seed, names=list(rt_model.predictor_names))

    report = FitReport(st.r2, st.mae, st_cv[0], st_cv[1], trend.kind, trend.cv_mae,
                       rt_model.r2, rt_model.mae, rt_cv[0], rt_cv[1], x_model.r2, x_model.mae,
                       tuple(kpi_ranking(rt_model, perf_rows, "rt")),
                       tuple(kpi_ranking(x_model, perf_rows, "x")))
    return ScalerModels(st, trend, rt_model, x_model, dt), report


def profile_for(kind, sim_params=None, seed: int = 1000, metric_params=None,
                trend_matchers: Optional[int] = None, mix_spec=None):
    """Collect the training sets used for scenario ``kind``.

    Scaling times and performance rows come from the profiling mix.  The
    response-time series comes from a run of the scenario itself under a
    different seed, since the seasonal pattern the trend model learns is
    scenario specific.  That run holds enough matchers for the peak and never
    rescales, so the series shows how load moves the response time without
    saturation blow-ups or the profiler's own reconfigurations.

    ``kind`` may also be a full ``WorkloadSpec``; ``mix_spec`` replaces the
    default profiling mix.  Both are re-seeded from ``seed``.
    """
    from .evaluation import TrainingSets, demand_series, profiling_run
    from .sim import ServiceConfig
    from .workload import WorkloadSpec

    mix_spec = replace(mix_spec or WorkloadSpec("profiling_mix"), seed=seed)
    mix = profiling_run([mix_spec], sim_params, seed=seed, metric_params=metric_params)
    base = kind if isinstance(kind, WorkloadSpec) else WorkloadSpec(kind)
    spec = replace(base, seed=seed + 1)
    m = trend_matchers or int(demand_series(spec, sim_params).max())
    trend_run = profiling_run([spec], sim_params, seed=seed + 1, thresholds=(),
                              metric_params=metric_params, require_events=False,
                              initial_config=ServiceConfig(matcher_instances=m))
    return TrainingSets(mix.scaling_times, trend_run.rt_series, mix.perf_rows, mix.events,
                        [row[0] for row in trend_run.perf_rows])


def build_models(kind: str, sim_params=None, seed: int = 1000, metric_params=None,
                 seasonal_period: int = 100, sg_window: int = 11, sg_degree: int = 2,
                 harmonics: int = 8, median_width: int = 5,
                 trend_matchers: Optional[int] = None, mix_spec=None):
    """Profile and train in one go. Returns ``(ScalerModels, FitReport)``."""
    sets = profile_for(kind, sim_params, seed, metric_params, trend_matchers, mix_spec)
    dt = sim_params.dt if sim_params is not None else 1.0
    return train_models(sets.scaling_times, sets.rt_series, sets.perf_rows, dt,
                        seasonal_period, sg_window, sg_degree, harmonics,
                        median_width=median_width, rt_samples=sets.rt_samples)
