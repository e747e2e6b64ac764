from .performance import (DEFAULT_PREDICTORS, estimate_rt, estimate_throughput,
                          fit_performance_model, kpi_ranking, relative_errors)
from .regression import LinearModel, kfold_cv, ols_fit, solve_ols
from .scaling_time import fit_scaling_time, forecast_scaling_time
from .smoothing import first_derivative, savgol_coeffs, savgol_filter, settle_lag
from .trend import ForecastVector, TrendModel, fit_trend_model, forecast_trend

__all__ = [
    "DEFAULT_PREDICTORS", "estimate_rt", "estimate_throughput", "fit_performance_model",
    "kpi_ranking", "relative_errors", "LinearModel", "kfold_cv", "ols_fit", "solve_ols",
    "fit_scaling_time", "forecast_scaling_time", "first_derivative", "savgol_coeffs",
    "savgol_filter", "settle_lag", "ForecastVector", "TrendModel", "fit_trend_model",
    "forecast_trend",
]
