"""Profile, train and inspect the three forecasters for one scenario."""

import numpy as np

from flas.forecasting.performance import relative_errors
from flas.pipeline import build_models, profile_for
from flas.workload import WorkloadSpec

kind = "stationary_peak"
sets = profile_for(kind)
print(f"profiling recorded {len(sets.scaling_times)} scaling actions, "
      f"{len(sets.perf_rows)} metric rows, {len(sets.rt_series)} trend samples")

models, report = build_models(kind)
st = models.scaling_time
print("\nscaling time  T'(N, S) = "
      f"{st.intercept:.3f} + {st.coef('notif_rate'):.2e}*N + {st.coef('stored_subs'):.2e}*S"
      f"   (r2 {report.scaling_time_r2:.3f}, 10-fold r2 {report.scaling_time_cv_r2:.3f})")

print(f"\nresponse-time model r2 {report.rt_r2:.4f}; strongest predictors:")
for name, score in report.kpi_rt[:4]:
    print(f"  {name:14s} {score:.3f}")

t = models.trend
print(f"\ntrend model: {t.kind}, {t.harmonics} harmonics over {t.period:g} ticks, "
      f"AR({t.ar_coeffs[0]:.3f}, {t.ar_coeffs[1]:.3f}), CV MAE {t.cv_mae:.4f} ms/s")

held = WorkloadSpec("profiling_mix", seed=2000)
from flas.evaluation import profiling_run  # noqa: E402

err = relative_errors(models.rt_model, profiling_run([held], seed=2000).perf_rows)
print(f"\nheld-out RT estimate error: median {100 * np.median(err):.1f}%, "
      f"p99 {100 * np.percentile(err, 99):.1f}%")
