import statistics

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flas.errors import EmptyWindow
from flas.metrics import (CHANNELS, CLEAN_FIELDS, MetricParams, MetricSample, REL_FLOOR,
                          clean_from_values, emit_metrics, emit_window, preprocess,
                          preprocess_array, read_raw_csv, sample_tick, write_raw_csv)
from flas.sim import ServiceConfig, SimParams, WorkloadPoint, initial_state, step

P = SimParams()
QUIET = MetricParams.noiseless()


def _state(n=10000.0, subs=0.0, m=1):
    s = initial_state(P, subs, ServiceConfig(matcher_instances=m))
    return step(s, WorkloadPoint(0, n), P)


def test_idle_system():
    s = emit_metrics(_state(0.0), WorkloadPoint(0, 0.0), QUIET, None)
    assert s.cpu_user == 0 and s.cpu_idle == 100 and s.net_recv == 0


def test_half_load_maps_to_half_cpu():
    s = emit_metrics(_state(10000.0), WorkloadPoint(0, 10000.0), QUIET, None)
    assert s.cpu_user == pytest.approx(50.0)


def test_emit_is_seed_deterministic():
    st_, wp = _state(), WorkloadPoint(0, 10000.0)
    a = emit_window(st_, wp, MetricParams(), np.random.default_rng(3))
    b = emit_window(st_, wp, MetricParams(), np.random.default_rng(3))
    assert np.array_equal(a, b)
    assert np.array_equal(emit_window(st_, wp, QUIET, None), emit_window(st_, wp, QUIET, None))


def test_cpu_shares_sum_to_100():
    w = emit_window(_state(30000.0, 2e5), WorkloadPoint(0, 30000.0), MetricParams(),
                    np.random.default_rng(0), 200)
    assert np.allclose(w[:, :4].sum(axis=1), 100.0)
    assert (w >= 0).all()


def test_constant_window_passes_through():
    row = MetricSample.from_values(4, np.arange(1, 15, dtype=float))
    c = preprocess([row] * 5)
    assert not c.outlier_flag
    assert [c.get(ch) for ch in CHANNELS] == list(np.arange(1, 15, dtype=float))


def test_single_spike_is_dropped():
    col = np.array([10, 10, 10, 10, 1000], dtype=float)
    means, flag = preprocess_array(np.tile(col[:, None], (1, 14)), outlier_k=3)
    assert flag and np.allclose(means, 10.0)
    # same verdict under the bare k*MAD rule
    means, flag = preprocess_array(np.tile(col[:, None], (1, 14)), outlier_k=3, rel_floor=0.0)
    assert flag and np.allclose(means, 10.0)


def test_empty_window():
    with pytest.raises(EmptyWindow):
        preprocess([])
    with pytest.raises(EmptyWindow):
        preprocess_array(np.empty((0, 14)))


def test_mem_used_pct():
    vals = np.zeros(14)
    vals[6], vals[7] = 1.0, 3.0
    assert clean_from_values(0, vals, False).mem_used_pct == pytest.approx(25.0)


def _oracle(col, k, rel_floor):
    med = statistics.median(col)
    mad = 1.4826 * statistics.median([abs(x - med) for x in col])
    tol = max(k * mad, rel_floor * abs(med), 1e-9)
    kept = [x for x in col if abs(x - med) <= tol]
    return (sum(kept) / len(kept) if kept else med), len(kept) < len(col)


@given(st.lists(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=3),
                min_size=1, max_size=8),
       st.floats(0.5, 5.0), st.sampled_from([0.0, REL_FLOOR]))
def test_preprocess_matches_bruteforce_oracle(rows, k, rel_floor):
    arr = np.array(rows)
    means, flag = preprocess_array(arr, k, rel_floor)
    flags = []
    for j in range(arr.shape[1]):
        want, f = _oracle(list(arr[:, j]), k, rel_floor)
        assert means[j] == pytest.approx(want, rel=1e-12, abs=1e-9)
        flags.append(f)
    assert flag == any(flags)


@given(st.lists(st.floats(0.1, 1e6), min_size=14, max_size=14), st.integers(1, 8))
def test_preprocess_idempotent_on_constant_windows(vals, n):
    arr = np.tile(np.array(vals), (n, 1))
    once, _ = preprocess_array(arr)
    twice, flag = preprocess_array(np.tile(once, (n, 1)))
    assert np.array_equal(once, twice) and not flag


def test_sample_tick_fields():
    c = sample_tick(_state(), WorkloadPoint(0, 10000.0), MetricParams(), np.random.default_rng(1))
    assert set(CLEAN_FIELDS) == set(c.__dataclass_fields__)
    assert 0 <= c.mem_used_pct <= 100


def test_raw_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    samples = [MetricSample.from_values(t, rng.random(14) * 100) for t in range(5)]
    path = tmp_path / "raw.csv"
    write_raw_csv(path, samples)
    assert read_raw_csv(path) == samples
