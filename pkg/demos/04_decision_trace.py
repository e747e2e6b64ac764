"""Follow the controller tick by tick through one stationary peak."""

from flas.evaluation import first_crossing, run_scenario
from flas.pipeline import build_models
from flas.workload import WorkloadSpec

spec = WorkloadSpec("stationary_peak", seed=1)
models = build_models(spec.kind)[0]
trace = run_scenario(spec, "flas", models, seed=1)
base = run_scenario(spec, "no_scaling", seed=1)

print("tick  subs/s    stored  matchers  rt ms  est ms  decision")
for r in trace.rows[20:60]:
    mark = f"{r.decision}/{r.trigger}" if r.decision != "none" else ""
    print(f"{r.t:4d} {r.sub_rate:7.0f} {r.stored_subs:9.0f} {r.matchers:6d} "
          f"{1000 * r.rt:7.1f} {1000 * r.rt_est:7.1f}  {mark}")

print(f"\nwithout scaling the response time first exceeds 1 s at tick {first_crossing(base, 1.0)}")
for rec in trace.events[:4]:
    e = rec.event
    print(f"{e.kind.value:9s} ({rec.trigger:9s}) tp={e.tp} rp={e.rp} "
          f"T={e.t_actual:.2f}s predicted {e.t_predicted:.2f}s")
