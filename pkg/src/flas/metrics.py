"""Synthetic dstat-like resource metrics and their preprocessing.

The emulator reports per-matcher-node averages derived from the simulator's
ground truth.  ``preprocess`` turns the sub-samples of one monitoring period
into a single clean row: per-channel median/MAD outlier rejection, averaging,
and compound utilisation percentages.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EmptyWindow
from .sim import SystemState, WorkloadPoint

CHANNELS = (
    "cpu_user", "cpu_system", "cpu_idle", "cpu_wait",
    "ctx_switches", "intr",
    "mem_used", "mem_free", "mem_cache", "mem_buffers",
    "disk_read", "disk_write",
    "net_recv", "net_send",
)
_IDX = {name: i for i, name in enumerate(CHANNELS)}

GIB = 1024.0 ** 3
MIB = 1024.0 ** 2

# MAD of a normal sample times this factor estimates its standard deviation
MAD_TO_SIGMA = 1.4826


@dataclass(frozen=True)
class MetricParams:
    noise_sigma: float = 0.03
    outlier_prob: float = 0.005
    outlier_scale: float = 5.0
    samples_per_tick: int = 5
    mem_total: float = 16 * GIB
    mem_base: float = 1 * GIB
    bytes_per_sub: float = 8192.0
    bytes_per_queued_msg: float = 1024.0
    cache_base: float = 2 * GIB
    cache_per_sub: float = 2048.0
    buffers_base: float = 4 * MIB
    # kernel buffers hold the undelivered backlog together with its pending
    # match state, so their size follows the outstanding work in seconds
    buffer_bytes_per_pending_s: float = 128 * MIB
    msg_bytes: float = 1024.0

    @classmethod
    def noiseless(cls, **kw) -> "MetricParams":
        return cls(noise_sigma=0.0, outlier_prob=0.0, **kw)


@dataclass(frozen=True)
class MetricSample:
    t: int
    cpu_user: float
    cpu_system: float
    cpu_idle: float
    cpu_wait: float
    ctx_switches: float
    intr: float
    mem_used: float
    mem_free: float
    mem_cache: float
    mem_buffers: float
    disk_read: float
    disk_write: float
    net_recv: float
    net_send: float

    def values(self) -> np.ndarray:
        return np.array([getattr(self, c) for c in CHANNELS], dtype=float)

    @classmethod
    def from_values(cls, t: int, values: Sequence[float]) -> "MetricSample":
        return cls(t, *(float(v) for v in values))


@dataclass(frozen=True)
class CleanSample:
    t: int
    cpu_user: float
    cpu_system: float
    cpu_idle: float
    cpu_wait: float
    ctx_switches: float
    intr: float
    mem_used: float
    mem_free: float
    mem_cache: float
    mem_buffers: float
    disk_read: float
    disk_write: float
    net_recv: float
    net_send: float
    mem_used_pct: float
    outlier_flag: bool = False

    def get(self, name: str) -> float:
        return float(getattr(self, name))


CLEAN_FIELDS = tuple(f.name for f in fields(CleanSample))
PREDICTOR_CHANNELS = CHANNELS + ("mem_used_pct",)


def _noiseless_values(state: SystemState, wp: WorkloadPoint, p: MetricParams) -> np.ndarray:
    m = state.config.matcher_instances
    cap = state.capacity if state.capacity > 0 else 1.0
    util = min(max(wp.notif_rate / cap, 0.0), 1.0)
    subs = state.stored_subs / m
    queued = state.queue / m

    cpu_user = 100.0 * util
    cpu_system = 0.1 * (100.0 - cpu_user) * util
    # repartitioning moves state over the network and blocks worker threads
    cpu_wait = 0.2 * (100.0 - cpu_user - cpu_system) if state.in_scaling is not None else 0.0
    cpu_idle = 100.0 - cpu_user - cpu_system - cpu_wait

    n_rate = wp.notif_rate / m
    x_rate = state.throughput / m
    churn = (wp.sub_rate + wp.unsub_rate) / m
    busy = 1.0 if (wp.notif_rate > 0 or churn > 0) else 0.0

    ctx = busy * 200.0 + 0.5 * n_rate + 1.5 * x_rate
    intr = busy * 500.0 + 0.3 * n_rate + 0.1 * churn
    mem_used = p.mem_base + p.bytes_per_sub * subs + p.bytes_per_queued_msg * queued
    mem_cache = p.cache_base + p.cache_per_sub * subs
    pending_s = state.queue / cap
    mem_buffers = p.buffers_base + p.buffer_bytes_per_pending_s * pending_s
    mem_free = max(p.mem_total - mem_used - mem_cache - mem_buffers, 0.0)
    disk_read = busy * 16384.0
    disk_write = busy * 65536.0 + 256.0 * churn
    net_recv = p.msg_bytes * (n_rate + churn)
    net_send = 2.0 * p.msg_bytes * x_rate
    return np.array([cpu_user, cpu_system, cpu_idle, cpu_wait, ctx, intr,
                     mem_used, mem_free, mem_cache, mem_buffers,
                     disk_read, disk_write, net_recv, net_send])


def _fix_cpu(rows: np.ndarray) -> None:
    """Clip CPU shares to [0, 100] and make idle absorb the remainder."""
    busy = rows[:, [0, 1, 3]].clip(0.0, 100.0)
    total = busy.sum(axis=1)
    over = total > 100.0
    busy[over] *= (100.0 / total[over])[:, None]
    rows[:, [0, 1, 3]] = busy
    rows[:, 2] = np.maximum(100.0 - busy.sum(axis=1), 0.0)


def emit_window(state: SystemState, wp: WorkloadPoint, params: MetricParams,
                rng: Optional[np.random.Generator], n: Optional[int] = None) -> np.ndarray:
    """``n`` raw sub-samples of one monitoring period as an (n, 14) array."""
    n = params.samples_per_tick if n is None else n
    base = _noiseless_values(state, wp, params)
    rows = np.tile(base, (n, 1))
    if rng is not None and params.noise_sigma > 0:
        rows *= 1.0 + params.noise_sigma * rng.standard_normal(rows.shape)
    if rng is not None and params.outlier_prob > 0:
        spikes = rng.random(rows.shape) < params.outlier_prob
        rows[spikes] *= params.outlier_scale
    np.maximum(rows, 0.0, out=rows)
    _fix_cpu(rows)
    return rows


def emit_metrics(state: SystemState, wp: WorkloadPoint, params: MetricParams,
                 rng: Optional[np.random.Generator]) -> MetricSample:
    return MetricSample.from_values(state.t, emit_window(state, wp, params, rng, 1)[0])


# Tolerance floor relative to the channel median.  With only a handful of
# sub-samples the MAD itself is noisy and a bare k*MAD rule rejects ordinary
# measurement jitter on most ticks; the floor sits near three sigma of the
# emulator's relative noise so only genuine spikes are dropped.
REL_FLOOR = 0.1


def preprocess_array(window: np.ndarray, outlier_k: float = 3.0, rel_floor: float = REL_FLOOR):
    """Array form of :func:`preprocess`: returns (channel means, outlier flag)."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 2 or window.shape[0] == 0:
        raise EmptyWindow("monitoring window holds no samples")
    if outlier_k <= 0:
        raise ValueError("outlier_k must be > 0")
    med = np.median(window, axis=0)
    dev = np.abs(window - med)
    mad = MAD_TO_SIGMA * np.median(dev, axis=0)
    tol = np.maximum(np.maximum(outlier_k * mad, rel_floor * np.abs(med)), 1e-9)
    keep = dev <= tol
    counts = keep.sum(axis=0)
    # averaging offsets from the median keeps constant windows exact
    offs = np.where(keep, window - med, 0.0).sum(axis=0)
    means = med + offs / np.maximum(counts, 1)
    flag = bool((~keep).any())
    return means, flag


def _mem_pct(values: np.ndarray) -> float:
    used, free, cache, buffers = values[6], values[7], values[8], values[9]
    total = used + free + cache + buffers
    return 100.0 * used / total if total > 0 else 0.0


def clean_from_values(t: int, means: np.ndarray, flag: bool) -> CleanSample:
    return CleanSample(t, *(float(v) for v in means), mem_used_pct=_mem_pct(means),
                       outlier_flag=flag)


def preprocess(window: Sequence[MetricSample], outlier_k: float = 3.0,
               rel_floor: float = REL_FLOOR) -> CleanSample:
    """Collapse one monitoring period of raw samples into a CleanSample."""
    if len(window) == 0:
        raise EmptyWindow("monitoring window holds no samples")
    arr = np.array([s.values() for s in window])
    means, flag = preprocess_array(arr, outlier_k, rel_floor)
    return clean_from_values(window[-1].t, means, flag)


def sample_tick(state: SystemState, wp: WorkloadPoint, params: MetricParams,
                rng: Optional[np.random.Generator], outlier_k: float = 3.0) -> CleanSample:
    """Emit and preprocess the sub-samples of the current tick."""
    means, flag = preprocess_array(emit_window(state, wp, params, rng), outlier_k)
    return clean_from_values(state.t, means, flag)


def write_raw_csv(path, samples: Iterable[MetricSample]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t",) + CHANNELS)
        for s in samples:
            d = asdict(s)
            w.writerow([d["t"]] + [repr(d[c]) for c in CHANNELS])


def read_raw_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return [MetricSample(int(r["t"]), *(float(r[c]) for c in CHANNELS))
                for r in csv.DictReader(fh)]
