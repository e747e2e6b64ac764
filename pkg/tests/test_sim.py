import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flas.errors import AtMinimum, ScalingInProgress, Unsatisfiable
from flas.sim import (ScaleKind, ServiceConfig, SimParams, WorkloadPoint, begin_scaling,
                      capacity, initial_state, minimal_sufficient_matchers, service_time, step,
                      ticks_for, true_scaling_time)

P = SimParams(kappa=1e-5)


def test_capacity_examples():
    one, two = ServiceConfig(), ServiceConfig(matcher_instances=2)
    assert capacity(one, 0, P, False) == 20000
    assert capacity(one, 100000, P, False) == pytest.approx(10000, rel=1e-12)
    assert capacity(two, 100000, P, True) == pytest.approx(16000, rel=1e-12)


def test_config_invariants():
    with pytest.raises(ValueError):
        ServiceConfig(matcher_instances=3)
    with pytest.raises(ValueError):
        ServiceConfig(ap_instances=0)
    assert str(ServiceConfig().doubled()) == "1-2-1"
    with pytest.raises(AtMinimum):
        ServiceConfig().halved()


def test_step_at_exact_capacity_keeps_queue_empty():
    s = step(initial_state(P), WorkloadPoint(0, 20000.0), P)
    assert s.queue == 0 and not s.saturated
    assert s.rt == pytest.approx(P.base_service_time)


def test_step_saturated_tick():
    params = SimParams(kappa=1e-5, mu0=10000.0)
    s = step(initial_state(params), WorkloadPoint(0, 12000.0), params)
    assert s.queue == pytest.approx(2000.0)
    assert s.throughput == pytest.approx(10000.0)
    assert s.saturated


def test_queue_grows_linearly_under_overload():
    params = SimParams(mu0=10000.0, kappa=0.0)
    s = initial_state(params)
    queues, rts = [], []
    for t in range(10):
        s = step(s, WorkloadPoint(t, 15000.0), params)
        queues.append(s.queue)
        rts.append(s.rt)
    # hand-iterated recurrence: q_t = 5000 (t + 1)
    assert queues == pytest.approx([5000.0 * (t + 1) for t in range(10)])
    assert all(b > a for a, b in zip(rts, rts[1:]))


def test_true_scaling_time_examples():
    wp = WorkloadPoint(0, 10000.0)
    const = SimParams(t_coeffs=(1.0, 0.0, 0.0))
    assert true_scaling_time(wp, 0.0, const, None) == 1.0
    affine = SimParams(t_coeffs=(1.0, 5e-5, 1e-5))
    assert true_scaling_time(wp, 100000.0, affine, None) == pytest.approx(2.5)
    a = true_scaling_time(wp, 5e4, P, np.random.default_rng(7))
    b = true_scaling_time(wp, 5e4, P, np.random.default_rng(7))
    assert a == b


@given(st.floats(0, 20000), st.floats(0, 3e5), st.integers(0, 2 ** 31))
def test_scaling_time_noise_stays_in_band(n, s, seed):
    base = true_scaling_time(WorkloadPoint(0, n), s, P, None)
    noisy = true_scaling_time(WorkloadPoint(0, n), s, P, np.random.default_rng(seed))
    assert abs(noisy - base) <= P.t_noise * base + 1e-12


def test_begin_scaling_lifecycle():
    params = SimParams(t_coeffs=(2.5, 0.0, 0.0), t_noise=0.0)
    s = step(initial_state(params), WorkloadPoint(100, 1000.0), params)
    s = begin_scaling(s, ScaleKind.SCALE_OUT, 2.0, WorkloadPoint(100, 1000.0), params, None)
    ev = s.in_scaling
    assert (ev.tp, ev.rp) == (100, 103)
    assert str(ev.config_after) == "1-2-1"
    with pytest.raises(ScalingInProgress):
        begin_scaling(s, ScaleKind.SCALE_OUT, 2.0, WorkloadPoint(100, 1000.0), params, None)
    for t in (101, 102):
        s = step(s, WorkloadPoint(t, 1000.0), params)
        assert s.config.matcher_instances == 1
        assert s.capacity == pytest.approx(0.8 * params.mu0)
    s = step(s, WorkloadPoint(103, 1000.0), params)
    assert s.config.matcher_instances == 2 and s.in_scaling is None
    with pytest.raises(AtMinimum):
        begin_scaling(initial_state(params), ScaleKind.SCALE_IN, 1.0,
                      WorkloadPoint(0, 0.0), params, None)


def test_ticks_for_ceiling():
    assert ticks_for(2.5, 1.0) == 3
    assert ticks_for(2.0000000000000004, 1.0) == 2
    assert ticks_for(0.1, 1.0) == 1


def test_minimal_sufficient_matchers_examples():
    wp = WorkloadPoint(0, 10000.0)
    assert minimal_sufficient_matchers(wp, 0.0, P, 1.0) == 1
    # capacity(1) = 9000 needs 1 + kappa S = 20000 / 9000
    s = (20000.0 / 9000.0 - 1.0) / P.kappa
    assert minimal_sufficient_matchers(wp, s, P, 1.0) == 2
    with pytest.raises(Unsatisfiable):
        minimal_sufficient_matchers(WorkloadPoint(0, 1e30), 0.0, P, 1.0)


def test_minimal_sufficient_matchers_sweep_matches_scan():
    wp = WorkloadPoint(0, 10000.0)
    for s in np.linspace(0, 200000, 81):
        oracle = next(m for m in (1, 2, 4, 8) if 20000.0 * m / (1 + 1e-5 * s) >= 10000.0)
        assert minimal_sufficient_matchers(wp, s, P, 1.0) == oracle


@given(st.lists(st.tuples(st.floats(0, 60000), st.floats(0, 50000), st.floats(0, 50000)),
                min_size=1, max_size=40),
       st.sampled_from([1, 2, 4]))
def test_conservation_and_capacity_bound(rates, m):
    s = initial_state(P, 0.0, ServiceConfig(matcher_instances=m))
    for t, (n, sub, unsub) in enumerate(rates):
        prev = s.queue
        s = step(s, WorkloadPoint(t, n, sub, unsub), P)
        assert abs(n * P.dt - (s.throughput * P.dt + s.queue - prev)) <= 1e-9 * max(1.0, n)
        assert s.queue >= 0
        assert s.throughput <= s.capacity * (1 + 1e-12)
        assert s.rt >= P.base_service_time
        assert s.saturated == (n > s.capacity)


@given(st.floats(0, 5e5), st.floats(0, 5e5))
def test_capacity_monotone_in_subs_and_linear_in_matchers(a, b):
    lo, hi = sorted((a, b))
    one = ServiceConfig()
    assert capacity(one, hi, P, False) <= capacity(one, lo, P, False)
    four = ServiceConfig(matcher_instances=4)
    assert capacity(four, a, P, False) == pytest.approx(4 * capacity(one, a, P, False))


@given(st.floats(0, 1e5), st.floats(0, 1e5))
def test_rt_nondecreasing_in_queue(q1, q2):
    lo, hi = sorted((q1, q2))
    wp = WorkloadPoint(0, 0.0)
    a = step(initial_state(P).__class__(queue=lo), wp, P)
    b = step(initial_state(P).__class__(queue=hi), wp, P)
    assert b.rt >= a.rt


def test_service_time_partitions_subscriptions():
    two = ServiceConfig(matcher_instances=2)
    assert service_time(two, 1e5, P) == pytest.approx(P.base_service_time * 1.5)
    assert math.isclose(service_time(ServiceConfig(), 0, P), P.base_service_time)
