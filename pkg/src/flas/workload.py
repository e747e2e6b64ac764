"""Deterministic subscription-workload generators.

Each generator returns one ``WorkloadPoint`` per tick.  Notification rate is
constant within a scenario; the subscription and unsubscription rates carry
the shape of the test case.  Peaks are raised-cosine pulses so the stored
subscription count (and hence response time) rises smoothly; spikes are
square pulses.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields, replace
from typing import List, Optional

import numpy as np

from .errors import InvalidSpec
from .sim import WorkloadPoint

KINDS = (
    "stationary_peak",
    "nonstationary_peak",
    "steady_increase",
    "isolated_spike",
    "spike_train",
    "profiling_mix",
)
SCENARIOS = KINDS[:5]

# sub-seed streams derived from a run seed
STREAM_SCALING_TIME = 1
STREAM_METRICS = 2
STREAM_WORKLOAD = 3


def sub_seed(seed: int, stream: int) -> int:
    """Fixed splitting rule from one run seed to independent sub-seeds."""
    return (int(seed) * 1000003 + int(stream)) % (2 ** 32)


def sub_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(sub_seed(seed, stream))


_DEFAULTS = {
    "stationary_peak": dict(base_sub_rate=0.0, peak_sub_rate=80000.0, period=100, peak_width=6),
    "nonstationary_peak": dict(base_sub_rate=0.0, peak_sub_rate=40000.0, period=100, peak_width=6),
    "steady_increase": dict(base_sub_rate=0.0, peak_sub_rate=500.0, ramp=500.0, max_subs=100000.0),
    "isolated_spike": dict(base_sub_rate=30000.0, peak_sub_rate=120000.0, spike_width=1,
                           spike_count=1, initial_subs=60000.0),
    "spike_train": dict(base_sub_rate=30000.0, peak_sub_rate=120000.0, spike_width=1,
                        spike_count=30, initial_subs=60000.0),
    "profiling_mix": dict(base_sub_rate=0.0, peak_sub_rate=80000.0, period=100, peak_width=6),
}


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str
    duration: Optional[int] = None
    seed: int = 0
    base_sub_rate: Optional[float] = None
    peak_sub_rate: Optional[float] = None
    period: Optional[int] = None
    ramp: Optional[float] = None          # subscriptions/s added by steady_increase
    spike_width: Optional[int] = None
    spike_count: Optional[int] = None
    notif_rate: float = 10000.0
    peak_width: Optional[int] = None      # ticks of each raised-cosine subscription wave
    unsub_width: Optional[int] = None     # ticks of the matching unsubscription wave
    max_subs: Optional[float] = None      # steady_increase stops adding here
    initial_subs: Optional[float] = None  # stored subscriptions before tick 0

    def resolved(self) -> "WorkloadSpec":
        """Copy with kind-specific defaults filled in and invariants checked."""
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown workload kind {self.kind!r}")
        fill = {"duration": 600 if self.kind != "profiling_mix" else None, "initial_subs": 0.0}
        fill.update(_DEFAULTS[self.kind])
        updates = {k: v for k, v in fill.items() if getattr(self, k) is None}
        spec = replace(self, **updates)
        if spec.unsub_width is None and spec.peak_width is not None:
            spec = replace(spec, unsub_width=4 * spec.peak_width)
        if spec.kind == "profiling_mix" and spec.duration is None:
            spec = replace(spec, duration=len(_profiling_segments(spec)))
        spec._validate()
        return spec

    def _validate(self):
        if self.duration is None or self.duration <= 0:
            raise InvalidSpec("duration must be > 0")
        if self.notif_rate < 0:
            raise InvalidSpec("notif_rate must be >= 0")
        base = self.base_sub_rate or 0.0
        peak = self.peak_sub_rate if self.peak_sub_rate is not None else base
        if base < 0 or peak < base:
            raise InvalidSpec("need peak_sub_rate >= base_sub_rate >= 0")
        if self.kind in ("stationary_peak", "nonstationary_peak"):
            if self.period is None or self.period < 4:
                raise InvalidSpec("period must be >= 4 ticks")
            if self.peak_width is None or self.peak_width < 1 or self.unsub_width < 1:
                raise InvalidSpec("peak_width and unsub_width must be >= 1")
            if self.peak_width + self.unsub_width + 2 * (self.period // 4) > self.period:
                raise InvalidSpec("peak and unsubscription waves do not fit in the period")
        if self.kind == "stationary_peak" and self.period > self.duration / 2:
            raise InvalidSpec("seasonal kinds need period <= duration / 2")
        if self.kind == "nonstationary_peak" and self.period > self.duration / 2:
            raise InvalidSpec("nonstationary_peak needs period <= duration / 2")
        if self.kind == "steady_increase" and (self.ramp is None or self.ramp < 0 or self.max_subs < 0):
            raise InvalidSpec("steady_increase needs ramp >= 0 and max_subs >= 0")
        if self.kind in ("isolated_spike", "spike_train"):
            if self.spike_width < 1 or self.spike_count < 1:
                raise InvalidSpec("spike_width and spike_count must be >= 1")
            if 2 * self.spike_width * self.spike_count > self.duration:
                raise InvalidSpec("spikes do not fit in the duration")
        if self.initial_subs < 0:
            raise InvalidSpec("initial_subs must be >= 0")


def cosine_wave(width: int, peak: float) -> np.ndarray:
    """Raised-cosine pulse whose samples sum to ``peak * width / 2``."""
    if width == 1:
        return np.array([peak / 2.0])
    k = np.arange(width) + 0.5
    return peak * np.sin(math.pi * k / width) ** 2


def _peak_cycle(length: int, width: int, peak: float, start: int, hold: int,
                unsub_width: Optional[int] = None):
    """Sub wave at ``start``; an unsub wave removing the same total starts
    ``hold`` ticks after it ends and spreads over ``unsub_width`` ticks."""
    uw = unsub_width or width
    sub = np.zeros(length)
    unsub = np.zeros(length)
    sub[start:start + width] = cosine_wave(width, peak)
    u0 = start + width + hold
    unsub[u0:u0 + uw] = cosine_wave(uw, peak * width / uw)
    return sub, unsub


def _points(notif, sub, unsub, t0=0) -> List[WorkloadPoint]:
    return [WorkloadPoint(t0 + i, float(n), float(s), float(u))
            for i, (n, s, u) in enumerate(zip(notif, sub, unsub))]


def _stationary(spec):
    P, w = spec.period, spec.peak_width
    one_sub, one_unsub = _peak_cycle(P, w, spec.peak_sub_rate - spec.base_sub_rate, P // 4, P // 4,
                                     spec.unsub_width)
    reps = -(-spec.duration // P)
    sub = np.tile(one_sub, reps)[:spec.duration] + spec.base_sub_rate
    unsub = np.tile(one_unsub, reps)[:spec.duration] + spec.base_sub_rate
    return sub, unsub


def nonstationary_start(spec) -> int:
    """Seeded onset tick of the single nonstationary peak."""
    P, w = spec.period, spec.peak_width
    latest = spec.duration - (w + spec.unsub_width + P // 4) - P // 4
    rng = sub_rng(spec.seed, STREAM_WORKLOAD)
    return int(rng.integers(spec.duration // 6, max(latest, spec.duration // 6 + 1)))


def _nonstationary(spec):
    P, w = spec.period, spec.peak_width
    start = nonstationary_start(spec)
    sub, unsub = _peak_cycle(spec.duration, w, spec.peak_sub_rate - spec.base_sub_rate, start, P // 4,
                             spec.unsub_width)
    return sub + spec.base_sub_rate, unsub + spec.base_sub_rate


def _steady(spec):
    sub = np.zeros(spec.duration)
    total = spec.initial_subs
    for i in range(spec.duration):
        if total + spec.ramp * 1.0 > spec.max_subs:
            break
        sub[i] = spec.ramp
        total += spec.ramp
    return sub, np.zeros(spec.duration)


def spike_start(spec) -> int:
    if spec.kind == "isolated_spike":
        return spec.duration // 2
    return spec.duration // 3


def _spikes(spec):
    base, hi, w = spec.base_sub_rate, spec.peak_sub_rate, spec.spike_width
    sub = np.full(spec.duration, base)
    unsub = np.full(spec.duration, base)
    t = spike_start(spec)
    for _ in range(spec.spike_count):
        if t + 2 * w > spec.duration:
            raise InvalidSpec("spikes do not fit after the start offset")
        sub[t:t + w] = hi
        # the spike's extra subscriptions leave during the following gap
        unsub[t + w:t + 2 * w] = hi
        t += 2 * w
    return sub, unsub


# (kind, notif_rate, peak_sub_rate) for the profiling mix
_MIX_PEAKS = (
    (6000.0, 120000.0), (8000.0, 80000.0), (10000.0, 80000.0), (12000.0, 40000.0),
    (14000.0, 60000.0), (16000.0, 40000.0), (7000.0, 160000.0), (11000.0, 120000.0),
    (9000.0, 100000.0), (13000.0, 80000.0), (15000.0, 60000.0), (5000.0, 200000.0),
)


def _profiling_segments(spec) -> List[tuple]:
    """Rows of (notif, sub, unsub) covering every scenario shape."""
    P, w = spec.period, spec.peak_width
    rows = []

    def add(notif, sub, unsub):
        rows.extend(zip(np.full(len(sub), notif), sub, unsub))

    scale = spec.peak_sub_rate / 80000.0
    for notif, peak in _MIX_PEAKS:
        sub, unsub = _peak_cycle(P, w, peak * scale, P // 4, P // 4, spec.unsub_width)
        add(notif, sub, unsub)
    # slow climb then drain
    climb = replace(spec, kind="steady_increase", duration=240, ramp=500.0 * scale,
                    max_subs=110000.0 * scale, initial_subs=0.0)
    sub, unsub = _steady(climb)
    add(10000.0, sub, unsub)
    drained = float(sub.sum())
    add(10000.0, np.zeros(20), np.full(20, drained / 20))
    # fill to the spike baseline, a lone spike, a train, then drain
    base = 60000.0 * scale
    add(10000.0, np.full(10, base / 10), np.zeros(10))
    for notif, count in ((10000.0, 1), (12000.0, 12), (9000.0, 20)):
        s = replace(spec, kind="spike_train", duration=4 * count + 20, base_sub_rate=30000.0 * scale,
                    peak_sub_rate=120000.0 * scale, spike_width=1, spike_count=count)
        sub, unsub = _spikes(s)
        add(notif, sub, unsub)
    add(10000.0, np.zeros(10), np.full(10, base / 10))
    return rows


def _profiling(spec):
    rows = _profiling_segments(spec)
    reps = -(-spec.duration // len(rows))
    arr = np.array(rows * reps)[:spec.duration]
    return arr[:, 0], arr[:, 1], arr[:, 2]


def generate(spec: WorkloadSpec) -> List[WorkloadPoint]:
    spec = spec.resolved()
    if spec.kind == "profiling_mix":
        notif, sub, unsub = _profiling(spec)
        return _points(notif, sub, unsub)
    fn = {
        "stationary_peak": _stationary,
        "nonstationary_peak": _nonstationary,
        "steady_increase": _steady,
        "isolated_spike": _spikes,
        "spike_train": _spikes,
    }[spec.kind]
    sub, unsub = fn(spec)
    return _points(np.full(spec.duration, spec.notif_rate), sub, unsub)


def write_workload_csv(path, points) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "notif_rate", "sub_rate", "unsub_rate"])
        for p in points:
            w.writerow([p.t, repr(p.notif_rate), repr(p.sub_rate), repr(p.unsub_rate)])


def read_workload_csv(path) -> List[WorkloadPoint]:
    with open(path, newline="", encoding="utf-8") as fh:
        pts = [WorkloadPoint(int(r["t"]), float(r["notif_rate"]), float(r["sub_rate"]),
                             float(r["unsub_rate"])) for r in csv.DictReader(fh)]
    for p in pts:
        if min(p.notif_rate, p.sub_rate, p.unsub_rate) < 0:
            raise InvalidSpec(f"negative rate at t={p.t}")
    return pts


SPEC_FIELDS = tuple(f.name for f in fields(WorkloadSpec))
