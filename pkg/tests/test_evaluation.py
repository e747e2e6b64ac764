import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flas.errors import EmptyTrace, MismatchedRuns, NoScalingEventsRecorded
from flas.evaluation import (DemandEntry, DemandSchedule, RunTrace, TraceRow, compare,
                             demand_points, demand_series, evaluate, profiling_run,
                             provisioning_report, read_trace_csv, run_scenario, scaling_report,
                             sla_violation, write_trace_csv)
from flas.metrics import MetricParams
from flas.sim import ScaleKind, WorkloadPoint
from flas.workload import WorkloadSpec


def _trace(matchers, rts=None):
    rts = rts if rts is not None else [0.1] * len(matchers)
    rows = [TraceRow(t, 1e4, 0.0, 0.0, m, 0.0, rt, math.nan, 1e4, 0, "none", "none", None)
            for t, (m, rt) in enumerate(zip(matchers, rts))]
    return RunTrace(rows)


def _schedule(n, *entries, initial=1):
    return DemandSchedule(tuple(DemandEntry(t, m, d) for t, m, d in entries), n, initial)


def test_late_scale_out_is_under_provisioning():
    sched = _schedule(100, (10, 2, "up"))
    trace = _trace([1] * 12 + [2] * 88)
    assert provisioning_report(trace, sched) == (0.0, 2.0)


def test_late_scale_in_is_over_provisioning():
    sched = _schedule(200, (100, 1, "down"), initial=2)
    trace = _trace([2] * 104 + [1] * 96)
    assert provisioning_report(trace, sched) == (2.0, 0.0)


def test_early_scale_out_is_over_provisioning():
    sched = _schedule(100, (10, 2, "up"))
    assert provisioning_report(_trace([1] * 7 + [2] * 93), sched) == (3.0, 0.0)


def test_perfect_anticipation_and_missed_demand():
    sched = _schedule(100, (10, 2, "up"), (60, 1, "down"))
    assert provisioning_report(_trace([1] * 10 + [2] * 50 + [1] * 40), sched) == (0.0, 0.0)
    # no action at all: under from the first DP to the second
    assert provisioning_report(_trace([1] * 100), sched) == (0.0, 50.0)


def test_mismatched_and_empty():
    with pytest.raises(MismatchedRuns):
        provisioning_report(_trace([1] * 10), _schedule(20))
    with pytest.raises(EmptyTrace):
        sla_violation(RunTrace([]))


def test_sla_violation_examples():
    assert sla_violation(_trace([1] * 600)) == 0.0
    assert sla_violation(_trace([1] * 600, [1.5] * 6 + [0.1] * 594)) == pytest.approx(1.0)
    # exactly at the limit is not a violation
    assert sla_violation(_trace([1] * 4, [1.0] * 4)) == 0.0


class _Ev:
    def __init__(self, kind, t_actual, t_predicted):
        self.kind, self.t_actual, self.t_predicted = kind, t_actual, t_predicted


def test_scaling_report_relative_error():
    s = scaling_report([_Ev(ScaleKind.SCALE_OUT, 2.0, 2.5)])
    assert s.rel_err_t_scale_out == pytest.approx(25.0)
    assert s.avg_t_scale_out == 2.0
    assert s.avg_t_scale_in is None and s.rel_err_t_scale_in is None
    s = scaling_report([_Ev("scale_in", 3.0, 3.0), _Ev("scale_in", 1.0, 0.5)])
    assert s.rel_err_t_scale_in == pytest.approx(-25.0) and s.n_scale_in == 2


def test_single_peak_demand_has_two_entries():
    spec = WorkloadSpec("nonstationary_peak", seed=4)
    sched = demand_points(spec)
    assert [e.direction for e in sched.entries] == ["up", "down"]
    assert sched.entries[0].required_matchers > 1


@pytest.mark.parametrize("kind", ["stationary_peak", "steady_increase", "spike_train"])
def test_demand_directions_alternate_and_double(kind):
    sched = demand_points(WorkloadSpec(kind))
    dirs = [e.direction for e in sched.entries]
    assert all(a != b for a, b in zip(dirs, dirs[1:]))
    for e in sched.entries:
        assert e.required_matchers & (e.required_matchers - 1) == 0


def test_quiet_workload_has_empty_schedule():
    spec = WorkloadSpec("steady_increase", ramp=0.0, notif_rate=1000.0)
    assert len(demand_points(spec)) == 0


def test_cpu_threshold_first_scale_out_at_tick_3():
    pts = [WorkloadPoint(t, 60000.0) for t in range(20)]
    trace = run_scenario(WorkloadSpec("steady_increase", duration=20, ramp=0.0), "cpu_threshold",
                         metric_params=MetricParams.noiseless(), workload=pts)
    first = next(r.t for r in trace.rows if r.decision == "scale_out")
    assert first == 3


@pytest.mark.parametrize("kind", ["stationary_peak", "spike_train"])
def test_no_scaling_keeps_matchers(kind):
    trace = run_scenario(WorkloadSpec(kind), "no_scaling")
    assert set(trace.column("matchers")) == {1.0}
    assert scaling_report(trace).n_scale_out == 0 and not trace.events


def test_no_scaling_violates_more_than_flas(scenario_models):
    spec = WorkloadSpec("stationary_peak")
    models = scenario_models("stationary_peak")
    base = sla_violation(run_scenario(spec, "no_scaling", seed=0))
    assert base > sla_violation(run_scenario(spec, "flas", models, seed=0))


def test_profiling_mix_records_enough_events():
    sets = profiling_run([WorkloadSpec("profiling_mix", seed=1000)], seed=1000)
    assert len(sets.scaling_times) >= 20
    assert all(t > 0 and math.isfinite(t) for _, _, t in sets.scaling_times)
    ticks = [t for t, _ in sets.rt_series]
    assert all(b > a for a, b in zip(ticks, ticks[1:]))


def test_flat_workload_records_nothing():
    with pytest.raises(NoScalingEventsRecorded):
        profiling_run([WorkloadSpec("steady_increase", ramp=0.0, notif_rate=100.0)])


def test_compare_variant_against_itself():
    cells = compare([WorkloadSpec("spike_train")], ["no_scaling", "no_scaling"], seeds=2)
    a, b = cells
    assert (a.sla_violation_pct, a.over_provisioning_pct, a.under_provisioning_pct) == \
        (b.sla_violation_pct, b.over_provisioning_pct, b.under_provisioning_pct)


def test_compare_marks_failed_cells():
    cells = compare([WorkloadSpec("spike_train")], ["no_scaling", "flas"], seeds=1)
    assert not cells[0].failed and cells[1].failed


@settings(max_examples=20)
@given(st.lists(st.sampled_from([1, 2, 4]), min_size=30, max_size=30),
       st.lists(st.floats(0, 3), min_size=30, max_size=30), st.randoms())
def test_reports_ignore_row_order(ms, rts, rnd):
    trace = _trace(ms, rts)
    sched = _schedule(30, (5, 2, "up"), (20, 1, "down"))
    shuffled = RunTrace(rnd.sample(trace.rows, len(trace.rows)))
    assert provisioning_report(trace, sched) == provisioning_report(shuffled, sched)
    assert sla_violation(trace) == sla_violation(shuffled)
    over, under = provisioning_report(trace, sched)
    assert 0 <= over + under <= 100


def test_trace_csv_round_trip(tmp_path):
    trace = run_scenario(WorkloadSpec("isolated_spike"), "cpu_threshold", seed=2)
    path = tmp_path / "t.csv"
    write_trace_csv(path, trace, full_precision=True)
    back = read_trace_csv(path)
    assert [r.rt for r in back.rows] == [r.rt for r in trace.rows]
    assert [r.matchers for r in back.rows] == [r.matchers for r in trace.rows]
    write_trace_csv(path, trace)
    assert path.read_text().splitlines()[0].startswith("t,notif_rate,sub_rate,stored_subs")


def test_evaluate_bundles_everything():
    spec = WorkloadSpec("spike_train")
    trace = run_scenario(spec, "cpu_threshold", seed=1)
    rep = evaluate(trace, demand_points(spec))
    assert 0 <= rep.over_provisioning_pct <= 100
    assert len(rep.events) == len(trace.events)
    assert np.array_equal(demand_series(spec), demand_points(spec).series())
