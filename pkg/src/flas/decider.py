"""Per-tick scaling decision combining trend forecasts and reactive thresholds.

``decide`` is a pure function: every piece of controller memory (estimate
buffer, cool-down counter, estimate history used by the trend forecaster) is
passed in and handed back.  The forecasters are reached through a duck-typed
``models`` object so tests can plug in stubs:

* ``models.forecast_t(notif_rate, stored_subs) -> seconds``
* ``models.forecast_trend(history, t0, t_sa_pred, h) -> ForecastVector``
  where ``history`` is a tuple of ``(t, rt_est)`` pairs in seconds
* ``models.estimate_rt(sample) -> seconds``
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple, Optional, Sequence

from .errors import DecisionUnavailable, InsufficientHistory

log = logging.getLogger(__name__)

# the trend forecaster never needs more than this many past estimates
HISTORY_LIMIT = 64


class Verdict(str, Enum):
    NONE = "none"
    SCALE_OUT = "scale_out"
    SCALE_IN = "scale_in"


class Trigger(str, Enum):
    PROACTIVE = "proactive"
    REACTIVE = "reactive"
    COOLDOWN = "cooldown"
    NONE = "none"


@dataclass(frozen=True)
class DeciderConfig:
    h: int = 4
    react_w: int = 2
    inc_trend_th: float = 0.9     # ms of RT per second
    dec_trend_th: float = -0.9
    react_upper_th: float = 0.750  # seconds
    react_lower_th: float = 0.010
    majority: int = 3
    cooldown_multiplier: float = 2.0

    def __post_init__(self):
        if self.h < 1:
            raise ValueError("h must be >= 1")
        if not 1 <= self.majority <= self.h:
            raise ValueError("majority must lie in [1, h]")
        if self.react_w < 1:
            raise ValueError("react_w must be >= 1")
        if not self.dec_trend_th < 0 < self.inc_trend_th:
            raise ValueError("trend thresholds must straddle zero")
        if not 0 < self.react_lower_th < self.react_upper_th:
            raise ValueError("need 0 < react_lower_th < react_upper_th")
        if self.cooldown_multiplier < 0:
            raise ValueError("cooldown_multiplier must be >= 0")

    def proactive_only(self) -> "DeciderConfig":
        # a window no run can fill switches the reactive conditions off
        return replace(self, react_w=10 ** 9)

    def reactive_only(self) -> "DeciderConfig":
        return replace(self, inc_trend_th=math.inf, dec_trend_th=-math.inf)


@dataclass(frozen=True)
class EstimateBuffer:
    values: tuple = ()

    def __post_init__(self):
        ts = [t for t, _ in self.values]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("buffer ticks must be strictly increasing")

    def append(self, t: int, rt: float) -> "EstimateBuffer":
        return EstimateBuffer(self.values + ((t, float(rt)),))

    def clear(self) -> "EstimateBuffer":
        return EstimateBuffer()

    def last(self, n: int) -> list:
        return [v for _, v in self.values[-n:]] if n <= len(self.values) else []

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class Decision:
    verdict: Verdict = Verdict.NONE
    trigger: Trigger = Trigger.NONE
    t_sa_pred: Optional[float] = None

    def __post_init__(self):
        if (self.verdict is Verdict.NONE) != (self.t_sa_pred is None):
            raise ValueError("t_sa_pred is set exactly when a scaling verdict is given")


@dataclass(frozen=True)
class LoadView:
    """What the controller knows about the current load."""
    t: int
    notif_rate: float
    stored_subs: float
    matchers: int = 1


class DecideResult(NamedTuple):
    decision: Decision
    buffer: EstimateBuffer
    cooldown: int
    history: tuple
    rt_est: float
    forecast: Optional[tuple]


def inc_trend(forecast, th: float, majority: int) -> bool:
    values = getattr(forecast, "values", forecast)
    return sum(v > th for v in values) >= majority


def dec_trend(forecast, th: float, majority: int) -> bool:
    values = getattr(forecast, "values", forecast)
    return sum(v < th for v in values) >= majority


def rt_above_th(buffer: EstimateBuffer, th: float, react_w: int) -> bool:
    last = buffer.last(react_w)
    return bool(last) and all(v > th for v in last)


def rt_below_th(buffer: EstimateBuffer, th: float, react_w: int) -> bool:
    last = buffer.last(react_w)
    return bool(last) and all(v < th for v in last)


def cool_down_time(t_sa: float, config: DeciderConfig, dt: float = 1.0) -> int:
    if t_sa <= 0:
        raise ValueError("t_sa must be > 0")
    return max(0, math.ceil(config.cooldown_multiplier * t_sa / dt - 1e-9))


def _segment(history):
    """Trailing run of history entries recorded under the current matcher count.

    A reconfiguration shifts the response-time level abruptly; differentiating
    across it would feed the trend forecaster a spike that is not load.
    """
    if not history:
        return ()
    m = history[-1][2]
    i = len(history)
    while i > 0 and history[i - 1][2] == m:
        i -= 1
    return tuple((t, v) for t, v, _ in history[i:])


def decide(t0: int, load: LoadView, buffer: EstimateBuffer, sample, models,
           config: DeciderConfig, cooldown: int, history: Sequence = (),
           allow_scale_in: bool = True, dt: float = 1.0) -> DecideResult:
    """One control-loop iteration.

    Order: cool-down gate, forecast T', forecast the trend, estimate RT',
    append it, scale-out check, scale-in check.  While the trend forecaster
    lacks history (start of a run, right after a reconfiguration) only the
    reactive conditions are evaluated.  Any other forecaster failure yields no
    action for this tick.
    """
    history = tuple(history)
    if cooldown > 0:
        rt_est = models.estimate_rt(sample)
        history = (history + ((t0, rt_est, load.matchers),))[-HISTORY_LIMIT:]
        return DecideResult(Decision(Verdict.NONE, Trigger.COOLDOWN), buffer.append(t0, rt_est),
                            cooldown - 1, history, rt_est, None)

    forecast = None
    try:
        t_pred = models.forecast_t(load.notif_rate, load.stored_subs)
        try:
            forecast = models.forecast_trend(_segment(history), t0, t_pred, config.h)
        except InsufficientHistory:
            forecast = None
        rt_est = models.estimate_rt(sample)
    except Exception as exc:  # noqa: BLE001 - any forecaster failure degrades to no action
        err = DecisionUnavailable(f"t={t0}: {exc}")
        log.warning("decision unavailable: %s", err)
        return DecideResult(Decision(), buffer, 0, history, float("nan"), None)

    buffer = buffer.append(t0, rt_est)
    history = (history + ((t0, rt_est, load.matchers),))[-HISTORY_LIMIT:]
    fvals = tuple(forecast.values) if forecast is not None else None

    verdict, trigger = Verdict.NONE, Trigger.NONE
    if fvals is not None and inc_trend(fvals, config.inc_trend_th, config.majority):
        verdict, trigger = Verdict.SCALE_OUT, Trigger.PROACTIVE
    elif rt_above_th(buffer, config.react_upper_th, config.react_w):
        verdict, trigger = Verdict.SCALE_OUT, Trigger.REACTIVE
    elif allow_scale_in:
        if fvals is not None and dec_trend(fvals, config.dec_trend_th, config.majority):
            verdict, trigger = Verdict.SCALE_IN, Trigger.PROACTIVE
        elif rt_below_th(buffer, config.react_lower_th, config.react_w):
            verdict, trigger = Verdict.SCALE_IN, Trigger.REACTIVE

    if verdict is Verdict.NONE:
        return DecideResult(Decision(), buffer, 0, history, rt_est, fvals)
    # provisional cool-down from the predicted time; the run loop replaces it
    # once the actual duration is known
    cd = max(1, cool_down_time(t_pred, config, dt)) if config.cooldown_multiplier > 0 else 0
    return DecideResult(Decision(verdict, trigger, float(t_pred)), buffer.clear(), cd,
                        history, rt_est, fvals)


@dataclass
class CpuThresholdRule:
    """Baseline: scale out after more than ``periods`` consecutive ticks above ``upper``."""
    upper: float = 80.0
    lower: float = 40.0
    periods: int = 2
    above: int = 0
    below: int = 0

    def observe(self, cpu: float) -> Verdict:
        self.above = self.above + 1 if cpu > self.upper else 0
        self.below = self.below + 1 if cpu < self.lower else 0
        if self.above > self.periods:
            return Verdict.SCALE_OUT
        if self.below > self.periods:
            return Verdict.SCALE_IN
        return Verdict.NONE

    def reset(self):
        self.above = self.below = 0
