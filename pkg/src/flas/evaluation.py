"""Run orchestration and the provisioning / SLA / scaling-time reports.

A run ticks the simulator, the metrics emulator and one auto-scaler variant
over a generated workload.  Per tick the order is: advance the service,
sample metrics, decide, start a scaling action if one was ordered, record.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .decider import (CpuThresholdRule, DeciderConfig, Decision, EstimateBuffer, LoadView,
                      Trigger, Verdict, cool_down_time, decide)
from .errors import (EmptyTrace, FlasError, MismatchedRuns, NoScalingEventsRecorded,
                     SimulationError)
from .metrics import CleanSample, MetricParams, sample_tick
from .sim import (ScaleKind, ScalingEvent, ServiceConfig, SimParams, SystemState, WorkloadPoint,
                  begin_scaling, initial_state, minimal_sufficient_matchers, step)
from .workload import (STREAM_METRICS, STREAM_SCALING_TIME, WorkloadSpec, generate, sub_rng)

VARIANTS = ("flas", "proactive_only", "reactive_only", "cpu_threshold", "no_scaling")
MODEL_VARIANTS = ("flas", "proactive_only", "reactive_only")
DEFAULT_SLA = 1.0
_MODEL_API = ("forecast_t", "forecast_trend", "estimate_rt")

TRACE_HEADER = ("t", "notif_rate", "sub_rate", "stored_subs", "matchers", "queue", "rt_ms",
                "rt_est_ms", "throughput", "cooldown", "decision", "trigger", "event_id")

# workload-utilisation trigger pairs (scale out above, scale in below) cycled
# through during profiling so some actions start only after saturation sets in
PROFILING_THRESHOLDS = ((0.9, 0.4), (1.2, 0.4), (1.5, 0.45), (1.0, 0.35))


@dataclass(frozen=True)
class TraceRow:
    t: int
    notif_rate: float
    sub_rate: float
    stored_subs: float
    matchers: int
    queue: float
    rt: float
    rt_est: float
    throughput: float
    cooldown: int
    decision: str
    trigger: str
    event_id: Optional[int]
    capacity: float = math.nan


@dataclass(frozen=True)
class EventRecord:
    event: ScalingEvent
    trigger: str

    @property
    def kind(self) -> str:
        return self.event.kind.value


@dataclass
class RunTrace:
    rows: List[TraceRow]
    events: List[EventRecord] = field(default_factory=list)
    kind: str = ""
    variant: str = ""
    seed: int = 0
    dt: float = 1.0

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class DemandEntry:
    t_dp: int
    required_matchers: int
    direction: str


@dataclass(frozen=True)
class DemandSchedule:
    entries: tuple
    duration: int
    initial_matchers: int = 1
    start: int = 0
    dt: float = 1.0

    def series(self) -> np.ndarray:
        """Required matcher count per tick."""
        out = np.full(self.duration, self.initial_matchers, dtype=float)
        for e in self.entries:
            out[e.t_dp - self.start:] = e.required_matchers
        return out

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class ScalingSummary:
    avg_t_scale_out: Optional[float]
    avg_t_scale_in: Optional[float]
    rel_err_t_scale_out: Optional[float]
    rel_err_t_scale_in: Optional[float]
    n_scale_out: int
    n_scale_in: int


@dataclass(frozen=True)
class EvaluationReport:
    over_provisioning_pct: float
    under_provisioning_pct: float
    sla_violation_pct: float
    avg_t_scale_in: Optional[float]
    avg_t_scale_out: Optional[float]
    rel_err_t_scale_in: Optional[float]
    rel_err_t_scale_out: Optional[float]
    events: tuple = ()


REPORT_FIELDS = ("over_provisioning_pct", "under_provisioning_pct", "sla_violation_pct",
                 "avg_t_scale_in", "avg_t_scale_out", "rel_err_t_scale_in", "rel_err_t_scale_out")


@dataclass
class TrainingSets:
    scaling_times: List[tuple]
    rt_series: List[tuple]
    perf_rows: List[tuple]
    events: List[ScalingEvent] = field(default_factory=list)
    # metric samples aligned with rt_series, when the series is to be fitted
    # on estimated rather than true response times
    rt_samples: List[CleanSample] = field(default_factory=list)


# ---------------------------------------------------------------- running


def _variant_config(variant: str, config: DeciderConfig) -> DeciderConfig:
    if variant == "proactive_only":
        return config.proactive_only()
    if variant == "reactive_only":
        return config.reactive_only()
    return config


def run_scenario(spec: WorkloadSpec, variant: str = "flas", models=None,
                 sim_params: Optional[SimParams] = None,
                 decider_config: Optional[DeciderConfig] = None, seed: int = 0,
                 metric_params: Optional[MetricParams] = None,
                 workload: Optional[Sequence[WorkloadPoint]] = None,
                 initial_config: Optional[ServiceConfig] = None) -> RunTrace:
    """Simulate one scenario under one auto-scaler variant."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if variant in MODEL_VARIANTS and models is None:
        raise ValueError(f"variant {variant} needs fitted models")
    if models is not None and not all(hasattr(models, a) for a in _MODEL_API):
        raise TypeError(f"models must provide {', '.join(_MODEL_API)}")
    params = sim_params or SimParams()
    cfg = _variant_config(variant, decider_config or DeciderConfig())
    mparams = metric_params or MetricParams()
    spec = spec.resolved()
    points = list(workload) if workload is not None else generate(spec)
    rng_t = sub_rng(seed, STREAM_SCALING_TIME)
    rng_m = sub_rng(seed, STREAM_METRICS)

    state = initial_state(params, spec.initial_subs, initial_config)
    buffer, cooldown, history = EstimateBuffer(), 0, ()
    cpu_rule = CpuThresholdRule()
    prev_sample: Optional[CleanSample] = None
    rows, events = [], []
    next_id = 1
    for wp in points:
        try:
            state = step(state, wp, params)
            sample = sample_tick(state, wp, mparams, rng_m)
            m = state.config.matcher_instances
            rt_est = math.nan
            if variant in MODEL_VARIANTS:
                load = LoadView(wp.t, wp.notif_rate, state.stored_subs, m)
                res = decide(wp.t, load, buffer, sample, models, cfg, cooldown, history,
                             allow_scale_in=m > 1, dt=params.dt)
                decision, buffer, cooldown, history = res.decision, res.buffer, res.cooldown, res.history
                rt_est = res.rt_est
            elif variant == "cpu_threshold":
                decision, cooldown = _cpu_decision(cpu_rule, prev_sample, cooldown, m, models, wp, state)
                if models is not None:
                    rt_est = models.estimate_rt(sample)
            else:
                decision = Decision()
            prev_sample = sample

            event_id = None
            if decision.verdict is not Verdict.NONE:
                kind = ScaleKind(decision.verdict.value)
                state = begin_scaling(state, kind, decision.t_sa_pred, wp, params, rng_t, next_id)
                ev = state.in_scaling
                events.append(EventRecord(ev, decision.trigger.value))
                event_id = next_id
                next_id += 1
                # hold off until the action completes plus a stabilisation window
                cooldown = (ev.rp - ev.tp) + cool_down_time(ev.t_actual, cfg, params.dt)
                cpu_rule.reset()
            elif state.in_scaling is not None:
                event_id = state.in_scaling.event_id
        except FlasError as exc:
            raise SimulationError(wp.t, exc) from exc
        rows.append(TraceRow(wp.t, wp.notif_rate, wp.sub_rate, state.stored_subs, m,
                             state.queue, state.rt, rt_est, state.throughput, cooldown,
                             decision.verdict.value, decision.trigger.value, event_id,
                             state.capacity))
    return RunTrace(rows, events, spec.kind, variant, seed, params.dt)


def _cpu_decision(rule, prev_sample, cooldown, m, models, wp, state):
    """CPU-threshold baseline acting on the last completed monitoring period."""
    if cooldown > 0:
        return Decision(Verdict.NONE, Trigger.COOLDOWN), cooldown - 1
    if prev_sample is None:
        return Decision(), 0
    verdict = rule.observe(prev_sample.cpu_user)
    if verdict is Verdict.SCALE_IN and m < 2:
        verdict = Verdict.NONE
    if verdict is Verdict.NONE:
        return Decision(), 0
    t_pred = models.forecast_t(wp.notif_rate, state.stored_subs) if models is not None else math.nan
    return Decision(verdict, Trigger.REACTIVE, t_pred), 0


# ---------------------------------------------------------------- profiling


def workload_utilisation(notif_rate, stored_subs, matchers, params: SimParams) -> float:
    return notif_rate * (1.0 + params.kappa * stored_subs) / (matchers * params.mu0)


def profiling_run(specs: Sequence[WorkloadSpec], sim_params: Optional[SimParams] = None,
                  thresholds=PROFILING_THRESHOLDS, seed: int = 0,
                  metric_params: Optional[MetricParams] = None,
                  require_events: bool = True,
                  initial_config: Optional[ServiceConfig] = None) -> TrainingSets:
    """Collect training data under workload-threshold scaling rules.

    An empty ``thresholds`` disables scaling, so the run stays at
    ``initial_config`` throughout.
    """
    if not specs:
        raise ValueError("profiling needs at least one workload spec")
    params = sim_params or SimParams()
    mparams = metric_params or MetricParams()
    rng_t = sub_rng(seed, STREAM_SCALING_TIME)
    rng_m = sub_rng(seed, STREAM_METRICS)
    out = TrainingSets([], [], [])
    offset = 0
    k = 0
    for spec in specs:
        spec = spec.resolved()
        state = initial_state(params, spec.initial_subs, initial_config)
        cooldown = 0
        points = generate(spec)
        for wp in points:
            state = step(state, wp, params)
            sample = sample_tick(state, wp, mparams, rng_m)
            out.rt_series.append((offset + wp.t, state.rt))
            out.perf_rows.append((sample, state.rt, state.throughput))
            if cooldown > 0:
                cooldown -= 1
                continue
            if state.in_scaling is not None or not thresholds:
                continue
            m = state.config.matcher_instances
            u = workload_utilisation(wp.notif_rate, state.stored_subs, m, params)
            hi, lo = thresholds[k % len(thresholds)]
            kind = None
            if u > hi:
                kind = ScaleKind.SCALE_OUT
            elif u < lo and m > 1:
                kind = ScaleKind.SCALE_IN
            if kind is None:
                continue
            state = begin_scaling(state, kind, math.nan, wp, params, rng_t, len(out.events) + 1)
            ev = state.in_scaling
            out.events.append(ev)
            out.scaling_times.append((ev.notif_rate, ev.stored_subs, ev.t_actual))
            cooldown = ev.rp - ev.tp + 1
            k += 1
        offset += len(points)
    if require_events and not out.scaling_times:
        raise NoScalingEventsRecorded("profiling thresholds never fired")
    return out


# ---------------------------------------------------------------- demand


def demand_series(spec: WorkloadSpec, sim_params: Optional[SimParams] = None,
                  sla_max_rt: float = DEFAULT_SLA, workload=None) -> np.ndarray:
    """Minimal sufficient matcher count per tick along the no-scaling baseline."""
    params = sim_params or SimParams()
    spec = spec.resolved()
    points = list(workload) if workload is not None else generate(spec)
    state = initial_state(params, spec.initial_subs)
    out = np.empty(len(points))
    for i, wp in enumerate(points):
        state = step(state, wp, params)
        out[i] = minimal_sufficient_matchers(wp, state.stored_subs, params, sla_max_rt)
    return out


def demand_points(spec: WorkloadSpec, sim_params: Optional[SimParams] = None,
                  sla_max_rt: float = DEFAULT_SLA, workload=None,
                  initial_matchers: int = 1) -> DemandSchedule:
    params = sim_params or SimParams()
    need = demand_series(spec, params, sla_max_rt, workload)
    entries = []
    prev = initial_matchers
    for t, m in enumerate(need):
        m = int(m)
        if m != prev:
            entries.append(DemandEntry(t, m, "up" if m > prev else "down"))
            prev = m
    return DemandSchedule(tuple(entries), len(need), initial_matchers, 0, params.dt)


# ---------------------------------------------------------------- reports


def _sorted_rows(trace: RunTrace):
    return sorted(trace.rows, key=lambda r: r.t)


def provisioning_report(trace: RunTrace, schedule: DemandSchedule):
    """(over_pct, under_pct): share of runtime with more / fewer matchers than required.

    Integrating the gap tick by tick reproduces the per-event intervals: a
    scale-out finishing at RP after its demand point DP contributes RP - DP of
    under-provisioning, one finishing early contributes DP - RP of
    over-provisioning, and scale-ins mirror this.  A demand point with no
    matching action accrues until the end of the run.
    """
    rows = _sorted_rows(trace)
    if not rows:
        raise EmptyTrace("trace has no rows")
    if len(rows) != schedule.duration or rows[0].t != schedule.start:
        raise MismatchedRuns(f"trace covers {len(rows)} ticks, schedule {schedule.duration}")
    have = np.array([r.matchers for r in rows], dtype=float)
    need = schedule.series()
    over = float(np.count_nonzero(have > need))
    under = float(np.count_nonzero(have < need))
    n = len(rows)
    return 100.0 * over / n, 100.0 * under / n


def sla_violation(trace: RunTrace, sla_max_rt: float = DEFAULT_SLA) -> float:
    if not trace.rows:
        raise EmptyTrace("trace has no rows")
    bad = sum(1 for r in trace.rows if r.rt > sla_max_rt)
    return 100.0 * bad / len(trace.rows)


def violation_ticks(trace: RunTrace, sla_max_rt: float = DEFAULT_SLA) -> int:
    return sum(1 for r in trace.rows if r.rt > sla_max_rt)


def _mean(xs):
    xs = [x for x in xs if not math.isnan(x)]
    return float(np.mean(xs)) if xs else None


def scaling_report(trace_or_events) -> ScalingSummary:
    """Per-kind mean duration and mean signed relative prediction error (%)."""
    records = getattr(trace_or_events, "events", trace_or_events)
    events = [getattr(r, "event", r) for r in records]
    out = [e for e in events if ScaleKind(e.kind) is ScaleKind.SCALE_OUT]
    inn = [e for e in events if ScaleKind(e.kind) is ScaleKind.SCALE_IN]

    def rel(es):
        return _mean([100.0 * (e.t_predicted - e.t_actual) / e.t_actual for e in es])

    return ScalingSummary(
        _mean([e.t_actual for e in out]), _mean([e.t_actual for e in inn]),
        rel(out), rel(inn), len(out), len(inn))


def evaluate(trace: RunTrace, schedule: DemandSchedule,
             sla_max_rt: float = DEFAULT_SLA) -> EvaluationReport:
    over, under = provisioning_report(trace, schedule)
    s = scaling_report(trace)
    summaries = tuple(event_summary(r) for r in trace.events)
    return EvaluationReport(over, under, sla_violation(trace, sla_max_rt),
                            s.avg_t_scale_in, s.avg_t_scale_out,
                            s.rel_err_t_scale_in, s.rel_err_t_scale_out, summaries)


def event_summary(record: EventRecord) -> dict:
    e = record.event
    return {"event_id": e.event_id, "kind": e.kind.value, "trigger": record.trigger,
            "tp": e.tp, "rp": e.rp, "t_actual": e.t_actual, "t_predicted": e.t_predicted,
            "matchers_before": e.config_before.matcher_instances,
            "matchers_after": e.config_after.matcher_instances}


def first_crossing(trace: RunTrace, level: float) -> Optional[int]:
    for r in _sorted_rows(trace):
        if r.rt > level:
            return r.t
    return None


@dataclass(frozen=True)
class ComparisonCell:
    kind: str
    variant: str
    sla_violation_pct: float
    over_provisioning_pct: float
    under_provisioning_pct: float
    runs: int
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def compare(specs: Sequence[WorkloadSpec], variants: Sequence[str], seeds=20,
            models_for: Optional[Callable[[WorkloadSpec], object]] = None,
            sim_params: Optional[SimParams] = None,
            decider_config: Optional[DeciderConfig] = None,
            sla_max_rt: float = DEFAULT_SLA,
            metric_params: Optional[MetricParams] = None) -> List[ComparisonCell]:
    """Mean SLA violation and provisioning per (spec, variant) across seeds."""
    if not specs:
        raise ValueError("compare needs at least one spec")
    if len(variants) < 2:
        raise ValueError("compare needs at least two variants")
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    params = sim_params or SimParams()
    cells = []
    for spec in specs:
        spec = spec.resolved()
        schedule = demand_points(spec, params, sla_max_rt)
        models = models_for(spec) if models_for is not None else None
        for variant in variants:
            sla, over, under = [], [], []
            try:
                for seed in seed_list:
                    trace = run_scenario(spec, variant, models, params, decider_config, seed,
                                         metric_params)
                    o, u = provisioning_report(trace, schedule)
                    sla.append(sla_violation(trace, sla_max_rt))
                    over.append(o)
                    under.append(u)
                cells.append(ComparisonCell(spec.kind, variant, float(np.mean(sla)),
                                            float(np.mean(over)), float(np.mean(under)),
                                            len(seed_list)))
            except Exception as exc:  # noqa: BLE001 - a failed cell must not sink the table
                cells.append(ComparisonCell(spec.kind, variant, math.nan, math.nan, math.nan,
                                            len(sla), f"{type(exc).__name__}: {exc}"))
    return cells


# ---------------------------------------------------------------- CSV I/O


def _na(x, fmt=repr):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    return fmt(x)


def write_trace_csv(path, trace: RunTrace, full_precision: bool = False) -> None:
    header = list(TRACE_HEADER) + (["rt_s", "rt_est_s"] if full_precision else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in trace.rows:
            row = [r.t, repr(r.notif_rate), repr(r.sub_rate), repr(r.stored_subs), r.matchers,
                   repr(r.queue), int(round(r.rt * 1000.0)),
                   _na(r.rt_est, lambda v: str(int(round(v * 1000.0)))),
                   repr(r.throughput), r.cooldown, r.decision, r.trigger, _na(r.event_id, str)]
            if full_precision:
                row += [repr(r.rt), _na(r.rt_est)]
            w.writerow(row)


def read_trace_csv(path) -> RunTrace:
    """Rebuild a trace (rows only) from CSV; full-precision columns win when present."""

    def num(s, cast=float):
        return math.nan if s == "NA" else cast(s)

    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for d in csv.DictReader(fh):
            rt = float(d["rt_s"]) if "rt_s" in d else int(d["rt_ms"]) / 1000.0
            if "rt_est_s" in d:
                est = num(d["rt_est_s"])
            else:
                est = num(d["rt_est_ms"]) / 1000.0
            rows.append(TraceRow(int(d["t"]), float(d["notif_rate"]), float(d["sub_rate"]),
                                 float(d["stored_subs"]), int(d["matchers"]), float(d["queue"]),
                                 rt, est, float(d["throughput"]), int(d["cooldown"]),
                                 d["decision"], d["trigger"],
                                 None if d["event_id"] == "NA" else int(d["event_id"])))
    return RunTrace(rows)


def write_report_csv(path, entries: Iterable[tuple]) -> None:
    """``entries`` holds (kind, variant, EvaluationReport) triples."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scenario", "variant") + REPORT_FIELDS)
        for kind, variant, rep in entries:
            w.writerow([kind, variant] + [_na(getattr(rep, f), lambda v: f"{v:.6g}")
                                          for f in REPORT_FIELDS])


def write_events_csv(path, trace: RunTrace) -> None:
    cols = ("event_id", "kind", "trigger", "tp", "rp", "t_actual", "t_predicted",
            "matchers_before", "matchers_after")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for rec in trace.events:
            d = event_summary(rec)
            w.writerow([_na(d[c], str) if isinstance(d[c], float) else d[c] for c in cols])


def write_comparison_csv(path, cells: Iterable[ComparisonCell]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scenario", "variant", "sla_violation_pct", "over_provisioning_pct",
                    "under_provisioning_pct", "runs", "status"))
        for c in cells:
            w.writerow([c.kind, c.variant, _na(c.sla_violation_pct, lambda v: f"{v:.6g}"),
                        _na(c.over_provisioning_pct, lambda v: f"{v:.6g}"),
                        _na(c.under_provisioning_pct, lambda v: f"{v:.6g}"), c.runs,
                        "failed: " + c.error if c.failed else "ok"])
