"""Run every scenario under every auto-scaler variant and print the table.

Pass a seed count as the first argument (default 5; the acceptance suite
uses 20).
"""

import sys

import numpy as np

from flas.evaluation import VARIANTS, compare
from flas.pipeline import build_models
from flas.workload import SCENARIOS, WorkloadSpec

seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 5
cache = {}


def models_for(spec):
    if spec.kind not in cache:
        cache[spec.kind] = build_models(spec.kind)[0]
    return cache[spec.kind]


cells = compare([WorkloadSpec(k) for k in SCENARIOS], VARIANTS, seeds, models_for)
print(f"{'scenario':20s} {'variant':15s} {'sla %':>7s} {'over %':>7s} {'under %':>8s}")
for c in cells:
    print(f"{c.kind:20s} {c.variant:15s} {c.sla_violation_pct:7.2f} "
          f"{c.over_provisioning_pct:7.2f} {c.under_provisioning_pct:8.2f}")

flas = [c.sla_violation_pct for c in cells if c.variant == "flas"]
print(f"\nworst flas SLA violation across scenarios: {np.max(flas):.2f}%")
