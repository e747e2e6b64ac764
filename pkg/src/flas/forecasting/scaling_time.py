"""Scaling-time forecaster: T'(N, S) = b0 + b1*N + b2*S."""

from __future__ import annotations

import numpy as np

from ..errors import InsufficientData
from .regression import LinearModel, ols_fit

PREDICTORS = ("notif_rate", "stored_subs")


def fit_scaling_time(rows) -> LinearModel:
    """OLS fit on rows of (N, S, T_sa)."""
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise InsufficientData("need at least three (N, S, T) rows")
    if arr.shape[1] != 3:
        raise ValueError("rows must be (N, S, T_sa) triples")
    if np.any(arr[:, 2] <= 0):
        raise ValueError("scaling times must be positive")
    return ols_fit(arr[:, :2], arr[:, 2], PREDICTORS)


def forecast_scaling_time(model: LinearModel, notif_rate: float, stored_subs: float,
                          dt: float = 1.0) -> float:
    return max(model.predict_one((notif_rate, stored_subs)), dt)
