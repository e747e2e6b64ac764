"""Command-line entry point: profile, train, run, evaluate, compare.

Exit codes: 0 success, 2 configuration error, 3 profiling recorded no
scaling events, 4 model fit failure, 5 runtime error (tick in stderr).
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys

import numpy as np

from .config import RunConfig, load_config
from .datasets import (read_events_csv, read_models, read_training_sets, write_models,
                       write_training_sets)
from .errors import ConfigError, FlasError, NoScalingEventsRecorded, SimulationError
from .evaluation import (EvaluationReport, MODEL_VARIANTS, VARIANTS, compare, demand_points,
                         provisioning_report, read_trace_csv, scaling_report, sla_violation,
                         write_comparison_csv, write_events_csv, write_report_csv,
                         write_trace_csv, run_scenario)
from .pipeline import build_models, profile_for, train_models
from .workload import KINDS

EXIT_OK, EXIT_CONFIG, EXIT_NO_EVENTS, EXIT_FIT, EXIT_RUNTIME = 0, 2, 3, 4, 5

log = logging.getLogger("flas")

TRACE_NAME = "trace-{kind}-{variant}-{seed}.csv"
EVENTS_NAME = "events-{kind}-{variant}-{seed}.csv"
_TRACE_RE = re.compile(r"trace-(?P<kind>[a-z_]+)-(?P<variant>[a-z_]+)-(?P<seed>-?\d+)\.csv$")


class FitFailure(Exception):
    pass


def _out(args, cfg: RunConfig) -> str:
    out = args.out or cfg.out
    os.makedirs(out, exist_ok=True)
    return out


def _trend_kw(cfg: RunConfig) -> dict:
    t = cfg.trend
    return dict(seasonal_period=t["seasonal_period"], sg_window=t["sg_window"],
                sg_degree=t["sg_degree"], harmonics=t["harmonics"], median_width=t["median_width"])


def _models_for(cfg: RunConfig, spec, model_dir=None):
    if model_dir:
        try:
            return read_models(model_dir)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot load models from {model_dir}: {exc}") from exc
    try:
        models, _ = build_models(spec, cfg.sim, cfg.profile_seed, mix_spec=cfg.mix,
                                 **_trend_kw(cfg))
    except NoScalingEventsRecorded:
        raise
    except (FlasError, ValueError, np.linalg.LinAlgError) as exc:
        raise FitFailure(str(exc)) from exc
    return models


def cmd_profile(args, cfg: RunConfig) -> int:
    seed = cfg.profile_seed if args.seed is None else args.seed
    spec = cfg.spec(args.scenario)
    sets = profile_for(spec, cfg.sim, seed, mix_spec=cfg.mix)
    out = _out(args, cfg)
    for path in write_training_sets(out, sets):
        print(path)
    print(f"{len(sets.scaling_times)} scaling events, {len(sets.perf_rows)} performance rows")
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    data = args.data or args.out or cfg.out
    try:
        sets = read_training_sets(data)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read training data in {data}: {exc}") from exc
    try:
        models, report = train_models(sets.scaling_times, sets.rt_series, sets.perf_rows,
                                      cfg.sim.dt, rt_samples=sets.rt_samples, **_trend_kw(cfg))
    except (FlasError, ValueError, np.linalg.LinAlgError) as exc:
        raise FitFailure(f"{type(exc).__name__}: {exc}") from exc
    out = _out(args, cfg)
    for path in write_models(out, models):
        print(path)
    path = os.path.join(out, "fit_report.txt")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_text())
    print(path)
    return EXIT_OK


def cmd_run(args, cfg: RunConfig) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    spec = cfg.spec(args.scenario, seed)
    variant = args.variant
    models = None
    if variant in MODEL_VARIANTS or args.models:
        models = _models_for(cfg, spec, args.models)
    trace = run_scenario(spec, variant, models, cfg.sim, cfg.decider, seed)
    out = _out(args, cfg)
    name = dict(kind=spec.kind, variant=variant, seed=seed)
    path = os.path.join(out, TRACE_NAME.format(**name))
    write_trace_csv(path, trace, args.full_precision)
    write_events_csv(os.path.join(out, EVENTS_NAME.format(**name)), trace)
    print(path)
    print(f"sla_violation_pct={sla_violation(trace, cfg.sla_max_rt):.4g} "
          f"events={len(trace.events)}")
    return EXIT_OK


def cmd_evaluate(args, cfg: RunConfig) -> int:
    entries = []
    for path in args.traces:
        m = _TRACE_RE.search(os.path.basename(path))
        if not m:
            raise ConfigError(f"trace file name must look like {TRACE_NAME}: {path}")
        kind, variant, seed = m["kind"], m["variant"], int(m["seed"])
        try:
            trace = read_trace_csv(path)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read trace {path}: {exc}") from exc
        events_path = os.path.join(os.path.dirname(path),
                                   EVENTS_NAME.format(kind=kind, variant=variant, seed=seed))
        events = read_events_csv(events_path) if os.path.exists(events_path) else []
        spec = cfg.spec(kind, seed)
        over, under = provisioning_report(trace, demand_points(spec, cfg.sim, cfg.sla_max_rt))
        s = scaling_report(events)
        rep = EvaluationReport(over, under, sla_violation(trace, cfg.sla_max_rt),
                               s.avg_t_scale_in, s.avg_t_scale_out,
                               s.rel_err_t_scale_in, s.rel_err_t_scale_out, tuple(events))
        entries.append((kind, variant, rep))
    out = _out(args, cfg)
    path = os.path.join(out, "report.csv")
    write_report_csv(path, entries)
    print(path)
    return EXIT_OK


def cmd_compare(args, cfg: RunConfig) -> int:
    base = cfg.seed if args.seed is None else args.seed
    seeds = list(range(base, base + cfg.seeds))
    if len(cfg.variants) < 2:
        raise ConfigError("compare needs at least two variants")
    needs_models = any(v in MODEL_VARIANTS for v in cfg.variants)
    cache = {}

    def models_for(spec):
        if not needs_models:
            return None
        if spec.kind not in cache:
            cache[spec.kind] = _models_for(cfg, spec, None)
        return cache[spec.kind]

    cells = compare(cfg.specs, cfg.variants, seeds, models_for, cfg.sim, cfg.decider,
                    cfg.sla_max_rt)
    out = _out(args, cfg)
    path = os.path.join(out, "comparison.csv")
    write_comparison_csv(path, cells)
    summary = os.path.join(out, "comparison_summary.txt")
    with open(summary, "w", encoding="utf-8", newline="\n") as fh:
        for c in cells:
            status = f"FAILED ({c.error})" if c.failed else (
                f"sla={c.sla_violation_pct:.3f}% over={c.over_provisioning_pct:.3f}% "
                f"under={c.under_provisioning_pct:.3f}%")
            fh.write(f"{c.kind:20s} {c.variant:15s} runs={c.runs:3d} {status}\n")
    print(path)
    print(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file (default: built-in defaults)")
    common.add_argument("--out", help="output directory (default: [run] out)")
    common.add_argument("--seed", type=int, help="override the seed used by this command")
    common.add_argument("--full-precision", action="store_true",
                        help="add exact rt_s / rt_est_s columns to trace CSVs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="flas", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("profile", parents=[common], help="collect the training sets")
    sp.add_argument("--scenario", help="scenario whose trend is profiled")
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("train", parents=[common], help="fit models from training CSVs")
    sp.add_argument("--data", help="directory holding the training CSVs (default: --out)")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("run", parents=[common], help="simulate one scenario under one variant")
    sp.add_argument("--scenario", help="workload kind (default: [run] scenario)")
    sp.add_argument("--variant", default="flas", choices=VARIANTS)
    sp.add_argument("--models", help="model directory (default: profile and train in memory)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("evaluate", parents=[common], help="report on trace CSVs")
    sp.add_argument("traces", nargs="+", help="trace-<kind>-<variant>-<seed>.csv files")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("compare", parents=[common], help="variant comparison over seeds")
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if getattr(args, "scenario", None) and args.scenario not in KINDS:
            raise ConfigError(f"unknown scenario {args.scenario!r}")
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoScalingEventsRecorded as exc:
        print(f"profiling error: {exc}", file=sys.stderr)
        return EXIT_NO_EVENTS
    except FitFailure as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except SimulationError as exc:
        print(f"runtime error at tick {exc.tick}: {exc.cause}", file=sys.stderr)
        return EXIT_RUNTIME
    except FlasError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
