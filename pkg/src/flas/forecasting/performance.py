"""Performance forecaster: maps clean resource metrics to RT' and X'."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import InsufficientData
from ..metrics import CleanSample
from .regression import LinearModel, ols_fit, standardized_coefficients

# cpu_idle, mem_free and mem_used are exact linear combinations of the others
# (CPU shares sum to 100, memory fields sum to the node total) so they are left
# out to keep the design full rank.
DEFAULT_PREDICTORS = (
    "cpu_user", "cpu_system", "cpu_wait",
    "ctx_switches", "intr",
    "mem_used_pct", "mem_cache", "mem_buffers",
    "disk_read", "disk_write",
    "net_recv", "net_send",
)


def feature_row(sample: CleanSample, names: Sequence[str] = DEFAULT_PREDICTORS) -> list:
    return [sample.get(n) for n in names]


def _matrix(perf_rows, names):
    rows = [r for r in perf_rows if not r[0].outlier_flag]
    X = np.array([feature_row(r[0], names) for r in rows], dtype=float).reshape(len(rows), len(names))
    rt = np.array([r[1] for r in rows], dtype=float)
    x = np.array([r[2] for r in rows], dtype=float)
    return X, rt, x


def fit_performance_model(perf_rows, predictors: Sequence[str] = DEFAULT_PREDICTORS):
    """OLS models for RT (seconds) and throughput from clean metric rows.

    ``perf_rows`` holds ``(CleanSample, rt, throughput)`` triples.  Rows whose
    sample carries the outlier flag are skipped.  Returns ``(rt_model, x_model)``.
    """
    names = tuple(predictors)
    X, rt, x = _matrix(perf_rows, names)
    if len(rt) < len(names) + 2:
        raise InsufficientData(f"{len(rt)} usable rows for {len(names)} predictors")
    return ols_fit(X, rt, names), ols_fit(X, x, names)


def estimate_rt(rt_model: LinearModel, sample: CleanSample) -> float:
    return max(rt_model.predict_one(feature_row(sample, rt_model.predictor_names)), 0.0)


def estimate_throughput(x_model: LinearModel, sample: CleanSample) -> float:
    return max(x_model.predict_one(feature_row(sample, x_model.predictor_names)), 0.0)


def kpi_ranking(model: LinearModel, perf_rows, target: str = "rt"):
    """Predictors ordered by standardized coefficient magnitude, largest first."""
    X, rt, x = _matrix(perf_rows, model.predictor_names)
    scores = standardized_coefficients(model, X, rt if target == "rt" else x)
    return sorted(scores.items(), key=lambda kv: -kv[1])


def relative_errors(rt_model: LinearModel, perf_rows) -> np.ndarray:
    """|RT' - RT| / RT over every row, outliers included."""
    est = np.array([estimate_rt(rt_model, r[0]) for r in perf_rows])
    true = np.array([r[1] for r in perf_rows], dtype=float)
    return np.abs(est - true) / true
