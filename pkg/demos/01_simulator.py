"""Walk through the fluid-queue service model.

Shows capacity versus stored subscriptions, what saturation does to the
response time, and one scaling action from trigger to completion.
"""

import numpy as np

from flas.sim import (ScaleKind, ServiceConfig, SimParams, WorkloadPoint, begin_scaling,
                      capacity, initial_state, minimal_sufficient_matchers, step)
from flas.workload import sub_rng

params = SimParams()

# Capacity falls as the subscription table grows.
print("stored subs   capacity (notif/s) with 1, 2, 4 matchers")
for subs in (0, 50_000, 100_000, 200_000):
    caps = [capacity(ServiceConfig(matcher_instances=m), subs, params, False) for m in (1, 2, 4)]
    print(f"{subs:>11,d}   " + "  ".join(f"{c:9.0f}" for c in caps))

# Drive one matcher past capacity for a few seconds, then back off.
state = initial_state(params, 50_000)
print("\ntick  notif/s   queue      rt (ms)")
for t, rate in enumerate([10_000] * 3 + [25_000] * 5 + [5_000] * 6):
    state = step(state, WorkloadPoint(t, rate), params)
    print(f"{t:4d}  {rate:7d}  {state.queue:8.0f}  {1000 * state.rt:9.1f}")

# How many matchers does that peak need to stay under one second?
need = minimal_sufficient_matchers(WorkloadPoint(0, 25_000), 50_000, params, 1.0)
print(f"\nminimal sufficient matchers for 25k notif/s at 50k subs: {need}")

# One scale-out: capacity drops to 80% until the new configuration is ready.
rng = sub_rng(0, 1)
wp = WorkloadPoint(20, 10_000)
state = begin_scaling(step(state, wp, params), ScaleKind.SCALE_OUT, 2.0, wp, params, rng, 1)
ev = state.in_scaling
print(f"\nscale-out triggered at tick {ev.tp}, ready at tick {ev.rp} "
      f"(actual {ev.t_actual:.2f} s, predicted {ev.t_predicted:.2f} s)")
for t in range(ev.tp + 1, ev.rp + 2):
    state = step(state, WorkloadPoint(t, 10_000), params)
    print(f"  tick {t}: matchers={state.config.matcher_instances} capacity={state.capacity:8.0f}")
