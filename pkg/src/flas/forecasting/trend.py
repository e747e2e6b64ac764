"""Response-time trend model: harmonic regression with AR(2) errors.

The modelled signal is the Savitzky-Golay-smoothed first derivative of the
response time.  Two candidates are fitted, a seasonal one (mean + K Fourier
pairs + AR(2) residuals) and a non-seasonal one (mean + AR(2)), and the one
with the lower rolling-origin cross-validation MAE wins.

Smoothing is centred, so the derivative at tick t is only final once raw data
up to ``t + lag`` has arrived.  Cross-validation respects that: a forecast
"one tick ahead of the raw data" is ``lag + 1`` steps ahead of the last
settled smoothed value.  Runtime forecasting does the same.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..errors import InsufficientHistory, NonStationary, RankDeficient, TooShort
from .regression import fmt, parse_model_text, r2_score, solve_ols
from .smoothing import settle_lag, settled_trend

HARMONIC_AR = "harmonic_ar"
PURE_AR = "pure_ar"


@dataclass(frozen=True)
class TrendModel:
    kind: str
    period: float
    mean: float
    fourier_coeffs: tuple          # ((a_1, b_1), ..., (a_K, b_K))
    ar_coeffs: tuple = (0.0, 0.0)
    residual_sigma: float = 0.0
    cv_mae: float = float("nan")
    r2: float = float("nan")
    mae: float = float("nan")
    sg_window: int = 11
    sg_degree: int = 2
    dt: float = 1.0
    median_width: int = 1

    @property
    def harmonics(self) -> int:
        return len(self.fourier_coeffs)

    @property
    def lag(self) -> int:
        return settle_lag(self.sg_window, self.median_width)

    def seasonal(self, ticks) -> np.ndarray:
        """Deterministic part (mean + Fourier terms) at absolute ticks."""
        t = np.asarray(ticks, dtype=float)
        out = np.full(t.shape, self.mean)
        for k, (a, b) in enumerate(self.fourier_coeffs, start=1):
            w = 2.0 * math.pi * k * t / self.period
            out = out + a * np.cos(w) + b * np.sin(w)
        return out

    def is_stationary(self) -> bool:
        return ar2_stationary(*self.ar_coeffs)

    def to_text(self) -> str:
        lines = [
            f"kind={self.kind}",
            f"period={fmt(self.period)}",
            f"harmonics={self.harmonics}",
            f"intercept={fmt(self.mean)}",
        ]
        for k, (a, b) in enumerate(self.fourier_coeffs, start=1):
            lines += [f"a{k}={fmt(a)}", f"b{k}={fmt(b)}"]
        lines += [
            f"ar1={fmt(self.ar_coeffs[0])}",
            f"ar2={fmt(self.ar_coeffs[1])}",
            f"residual_sigma={fmt(self.residual_sigma)}",
            f"cv_mae={fmt(self.cv_mae)}",
            f"r2={fmt(self.r2)}",
            f"mae={fmt(self.mae)}",
            f"sg_window={self.sg_window}",
            f"sg_degree={self.sg_degree}",
            f"dt={fmt(self.dt)}",
            f"median_width={self.median_width}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TrendModel":
        d = parse_model_text(text)
        k = int(d["harmonics"])
        return cls(
            kind=d["kind"],
            period=float(d["period"]),
            mean=float(d["intercept"]),
            fourier_coeffs=tuple((float(d[f"a{i}"]), float(d[f"b{i}"])) for i in range(1, k + 1)),
            ar_coeffs=(float(d["ar1"]), float(d["ar2"])),
            residual_sigma=float(d["residual_sigma"]),
            cv_mae=float(d["cv_mae"]),
            r2=float(d["r2"]),
            mae=float(d["mae"]),
            sg_window=int(d["sg_window"]),
            sg_degree=int(d["sg_degree"]),
            dt=float(d["dt"]),
            median_width=int(d.get("median_width", 1)),
        )


@dataclass(frozen=True)
class ForecastVector:
    t0: int
    t_sa_pred: float
    values: tuple
    ticks: tuple = field(default=())

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("a forecast holds at least one value")

    def __len__(self):
        return len(self.values)


def ar2_stationary(phi1: float, phi2: float) -> bool:
    """Both roots of 1 - phi1 z - phi2 z^2 lie outside the unit circle."""
    return phi1 + phi2 < 1.0 and phi2 - phi1 < 1.0 and abs(phi2) < 1.0


def _fourier_design(ticks, period, harmonics):
    t = np.asarray(ticks, dtype=float)
    cols = []
    for k in range(1, harmonics + 1):
        w = 2.0 * math.pi * k * t / period
        cols += [np.cos(w), np.sin(w)]
    return np.column_stack(cols) if cols else np.empty((t.size, 0))


def _fit_ar2(resid, scale):
    """Conditional least squares AR(2) without intercept."""
    r = np.asarray(resid, dtype=float)
    rms = float(np.sqrt(np.mean(r ** 2))) if r.size else 0.0
    # residuals at rounding level carry no dynamics worth modelling
    if r.size < 6 or rms <= 1e-9 * max(scale, 1e-300):
        return (0.0, 0.0), rms
    A = np.column_stack([r[1:-1], r[:-2]])
    phi, *_ = np.linalg.lstsq(A, r[2:], rcond=None)
    innov = r[2:] - A @ phi
    return (float(phi[0]), float(phi[1])), float(np.std(innov))


def _fit_candidate(kind, ticks, values, period, harmonics, smooth):
    k = harmonics if kind == HARMONIC_AR else 0
    X = _fourier_design(ticks, period, k)
    beta = solve_ols(X, values)
    pairs = tuple((float(beta[1 + 2 * i]), float(beta[2 + 2 * i])) for i in range(k))
    model = TrendModel(kind, float(period), float(beta[0]), pairs, **smooth)
    resid = values - model.seasonal(ticks)
    scale = float(np.sqrt(np.mean(np.asarray(values) ** 2)))
    phi, sigma = _fit_ar2(resid, scale)
    fitted = model.seasonal(ticks)
    fitted[2:] += phi[0] * resid[1:-1] + phi[1] * resid[:-2]
    return TrendModel(kind, float(period), model.mean, pairs, phi, sigma,
                      r2=r2_score(values, fitted), mae=float(np.mean(np.abs(values - fitted))),
                      **smooth)


def _project(model: TrendModel, ticks_hist, hist, targets) -> np.ndarray:
    """Recursive forecast at absolute ``targets`` (all beyond the history)."""
    last = int(ticks_hist[-1])
    r1 = hist[-1] - model.seasonal(last)
    r2 = hist[-2] - model.seasonal(last - 1)
    phi1, phi2 = model.ar_coeffs
    horizon = int(max(targets)) - last
    resid = np.empty(max(horizon, 0) + 1)
    resid[0] = r1
    prev, prev2 = r1, r2
    for step in range(1, horizon + 1):
        cur = phi1 * prev + phi2 * prev2
        resid[step] = cur
        prev2, prev = prev, cur
    targets = np.asarray(targets, dtype=int)
    return model.seasonal(targets) + resid[targets - last]


def _as_series(rt_series):
    arr = np.asarray(rt_series, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("rt_series must be (t, RT) pairs")
    t, rt = arr[:, 0], arr[:, 1]
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("rt_series ticks must be strictly increasing")
    if t.size > 1 and np.any(np.diff(t) != 1):
        raise ValueError("rt_series must hold consecutive ticks")
    return t.astype(int), rt


def smoothed_training_series(rt_series, dt=1.0, sg_window=11, sg_degree=2, median_width=1):
    """Settled smoothed derivative of a (t, RT) series as (ticks, values)."""
    t, rt = _as_series(rt_series)
    first, s = settled_trend(rt, dt, sg_window, sg_degree, median_width)
    return t[first:first + s.size], s


def score_candidates(rt_series, dt=1.0, seasonal_period=100, sg_window=11, sg_degree=2,
                     harmonics=8, cv_fraction=0.2, median_width=1):
    """Fit both candidates and their CV MAE.

    Returns ``{kind: (model or None, cv_mae, error or None)}`` plus the naive
    zero-forecast MAE on the same origins under key ``"naive"``.
    """
    t, rt = _as_series(rt_series)
    if t.size == 0 or t[-1] - t[0] + 1 < 2 * seasonal_period:
        raise TooShort("series must span at least two seasonal periods")
    if harmonics < 1:
        raise ValueError("harmonic candidate needs at least one harmonic")
    ticks, s = smoothed_training_series(rt_series, dt, sg_window, sg_degree, median_width)
    lag = settle_lag(sg_window, median_width)
    smooth = dict(sg_window=sg_window, sg_degree=sg_degree, dt=dt, median_width=median_width)
    steps = lag + 1
    n = s.size
    min_train = max(2 * harmonics + 4, 12)
    first_origin = max(n - int(math.ceil(cv_fraction * n)), min_train + steps)
    if first_origin >= n:
        raise TooShort("not enough points left for rolling-origin validation")
    origins = range(first_origin, n)

    out = {"naive": float(np.mean(np.abs(s[first_origin:])))}
    for kind in (HARMONIC_AR, PURE_AR):
        try:
            model = _fit_candidate(kind, ticks, s, seasonal_period, harmonics, smooth)
        except RankDeficient as exc:
            out[kind] = (None, float("inf"), exc)
            continue
        errs = []
        for o in origins:
            end = o - steps + 1
            sub = _fit_candidate(kind, ticks[:end], s[:end], seasonal_period, harmonics, smooth)
            pred = _project(sub, ticks[:end], s[:end], [ticks[o]])[0]
            errs.append(abs(pred - s[o]))
        cv = float(np.mean(errs))
        model = replace(model, cv_mae=cv)
        err = None if model.is_stationary() else NonStationary(
            f"{kind} AR coefficients {model.ar_coeffs} are not stationary")
        out[kind] = (model, cv, err)
    return out


def fit_trend_model(rt_series, dt=1.0, seasonal_period=100, sg_window=11, sg_degree=2,
                    harmonics=8, cv_fraction=0.2, median_width=1) -> TrendModel:
    """Select the trend model with the lowest rolling-origin CV MAE.

    ``median_width > 1`` runs a centred running median over the response time
    before differentiating, which strips isolated one- or two-tick excursions.
    """
    scores = score_candidates(rt_series, dt, seasonal_period, sg_window, sg_degree,
                              harmonics, cv_fraction, median_width)
    usable = [(cv, kind) for kind in (HARMONIC_AR, PURE_AR)
              for model, cv, err in [scores[kind]] if model is not None and err is None]
    if not usable:
        errors = [scores[k][2] for k in (HARMONIC_AR, PURE_AR)]
        if any(isinstance(e, NonStationary) for e in errors):
            raise NonStationary("; ".join(str(e) for e in errors if e))
        raise RankDeficient("; ".join(str(e) for e in errors if e))
    # ties go to the simpler model
    best = min(usable, key=lambda item: (item[0], item[1] == HARMONIC_AR))
    return scores[best[1]][0]


def forecast_trend(model: TrendModel, history: Sequence[float], t0: int, t_sa_pred: float,
                   h: int, dt: Optional[float] = None,
                   last_tick: Optional[int] = None) -> ForecastVector:
    """Forecast the smoothed derivative at ``t0 + ceil(T'/dt) + i`` for i < h.

    ``history`` holds consecutive settled values, the last one at
    ``last_tick`` (default ``t0``).
    """
    if h < 1:
        raise ValueError("horizon h must be >= 1")
    hist = np.asarray(history, dtype=float)
    if hist.size < 2:
        raise InsufficientHistory("AR(2) needs the two most recent values")
    dt = model.dt if dt is None else dt
    last = t0 if last_tick is None else int(last_tick)
    offset = max(0, math.ceil(t_sa_pred / dt - 1e-9))
    targets = [t0 + offset + i for i in range(h)]
    values = np.empty(h)
    future = [i for i, tt in enumerate(targets) if tt > last]
    past = [i for i, tt in enumerate(targets) if tt <= last]
    for i in past:
        idx = hist.size - 1 - (last - targets[i])
        if idx < 0:
            raise InsufficientHistory(f"no history at tick {targets[i]}")
        values[i] = hist[idx]
    if future:
        ticks_hist = np.arange(last - hist.size + 1, last + 1)
        values[future] = _project(model, ticks_hist, hist, [targets[i] for i in future])
    return ForecastVector(t0, float(t_sa_pred), tuple(float(v) for v in values), tuple(targets))
