"""Run configuration: one flat ``key = value`` file with ``[section]`` headers.

Sections and keys (all optional, unknown ones are rejected)::

    [run]       seed, seeds, variants, out, profile_seed, scenario
    [sla]       max_rt_ms
    [sim]       mu0, kappa, base_service_time_ms, scaling_overhead_factor,
                t_a0, t_a1, t_a2, t_noise, dt
    [decider]   h, react_w, inc_trend_th, dec_trend_th, react_upper_th_ms,
                react_lower_th_ms, majority, cooldown_multiplier
    [trend]     seasonal_period, sg_window, sg_degree, harmonics, median_width
    [workload]  kinds, plus any WorkloadSpec field applied to every kind
    [workload.<kind>]   WorkloadSpec fields for one kind only

Randomness: every run draws from one integer ``seed``.  Sub-streams use
``(seed * 1000003 + stream) mod 2**32`` with stream 1 for scaling times,
2 for metric noise and 3 for workload phase.  Profiling uses
``profile_seed`` for the mix and ``profile_seed + 1`` for the trend run.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Optional, Tuple

from .decider import DeciderConfig
from .errors import ConfigError, InvalidSpec
from .evaluation import DEFAULT_SLA, VARIANTS
from .sim import SimParams
from .workload import KINDS, SCENARIOS, WorkloadSpec

_SIM_KEYS = ("mu0", "kappa", "base_service_time_ms", "scaling_overhead_factor",
             "t_a0", "t_a1", "t_a2", "t_noise", "dt")
_DECIDER_KEYS = ("h", "react_w", "inc_trend_th", "dec_trend_th", "react_upper_th_ms",
                 "react_lower_th_ms", "majority", "cooldown_multiplier")
_TREND_KEYS = ("seasonal_period", "sg_window", "sg_degree", "harmonics", "median_width")
_RUN_KEYS = ("seed", "seeds", "variants", "out", "profile_seed", "scenario")
_SPEC_KEYS = tuple(f.name for f in fields(WorkloadSpec) if f.name not in ("kind", "seed"))
_INT_SPEC_KEYS = ("duration", "period", "spike_width", "spike_count", "peak_width", "unsub_width")
_INT_KEYS = ("h", "react_w", "majority", "seed", "seeds", "profile_seed", "seasonal_period",
             "sg_window", "sg_degree", "harmonics", "median_width") + _INT_SPEC_KEYS


@dataclass(frozen=True)
class RunConfig:
    sim: SimParams = field(default_factory=SimParams)
    decider: DeciderConfig = field(default_factory=DeciderConfig)
    specs: Tuple[WorkloadSpec, ...] = tuple(WorkloadSpec(k) for k in SCENARIOS)
    mix: WorkloadSpec = WorkloadSpec("profiling_mix")
    sla_max_rt: float = DEFAULT_SLA
    variants: Tuple[str, ...] = VARIANTS
    seeds: int = 20
    seed: int = 0
    profile_seed: int = 1000
    out: str = "out"
    scenario: Optional[str] = None
    trend: Dict[str, int] = field(default_factory=lambda: dict(
        seasonal_period=100, sg_window=11, sg_degree=2, harmonics=8, median_width=5))

    def spec(self, kind: Optional[str] = None, seed: Optional[int] = None) -> WorkloadSpec:
        """Workload spec for ``kind`` (default: the configured scenario)."""
        kind = kind or self.scenario or self.specs[0].kind
        for s in self.specs:
            if s.kind == kind:
                break
        else:
            s = WorkloadSpec(kind)
        return replace(s, seed=self.seed if seed is None else seed)


def _number(section, key, raw):
    try:
        return int(raw) if key in _INT_KEYS else float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from None


def _check_keys(section, items, allowed):
    unknown = sorted(set(items) - set(allowed))
    if unknown:
        raise ConfigError(f"[{section}] unknown key(s): {', '.join(unknown)}")


def _list(raw):
    return tuple(x.strip() for x in raw.split(",") if x.strip())


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc

    known = {"run", "sla", "sim", "decider", "trend", "workload"}
    for name in cp.sections():
        if name not in known and not (name.startswith("workload.") and
                                      name.split(".", 1)[1] in KINDS):
            raise ConfigError(f"unknown section [{name}]")

    def section(name, allowed):
        items = dict(cp.items(name)) if cp.has_section(name) else {}
        _check_keys(name, items, allowed)
        return items

    cfg = RunConfig()
    updates = {}
    try:
        sim = {k: _number("sim", k, v) for k, v in section("sim", _SIM_KEYS).items()}
        if sim:
            if "base_service_time_ms" in sim:
                sim["base_service_time"] = sim.pop("base_service_time_ms") / 1000.0
            coeffs = list(cfg.sim.t_coeffs)
            for i, key in enumerate(("t_a0", "t_a1", "t_a2")):
                if key in sim:
                    coeffs[i] = sim.pop(key)
            updates["sim"] = replace(cfg.sim, t_coeffs=tuple(coeffs), **sim)

        dec = {k: _number("decider", k, v) for k, v in section("decider", _DECIDER_KEYS).items()}
        for key in ("react_upper_th_ms", "react_lower_th_ms"):
            if key in dec:
                dec[key[:-3]] = dec.pop(key) / 1000.0
        if dec:
            updates["decider"] = replace(cfg.decider, **dec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    sla = section("sla", ("max_rt_ms",))
    if "max_rt_ms" in sla:
        updates["sla_max_rt"] = _number("sla", "max_rt_ms", sla["max_rt_ms"]) / 1000.0
        if updates["sla_max_rt"] <= 0:
            raise ConfigError("[sla] max_rt_ms must be > 0")

    trend = {k: _number("trend", k, v) for k, v in section("trend", _TREND_KEYS).items()}
    if trend:
        updates["trend"] = {**cfg.trend, **trend}

    run = section("run", _RUN_KEYS)
    for key in ("seed", "seeds", "profile_seed"):
        if key in run:
            updates[key] = _number("run", key, run[key])
    if "out" in run:
        updates["out"] = run["out"]
    if "variants" in run:
        variants = _list(run["variants"])
        bad = [v for v in variants if v not in VARIANTS]
        if bad or not variants:
            raise ConfigError(f"[run] variants: unknown {bad or 'empty list'}")
        updates["variants"] = variants
    if "scenario" in run:
        if run["scenario"] not in KINDS:
            raise ConfigError(f"[run] scenario: unknown kind {run['scenario']!r}")
        updates["scenario"] = run["scenario"]

    wl = section("workload", ("kinds",) + _SPEC_KEYS)
    kinds = _list(wl.pop("kinds")) if "kinds" in wl else SCENARIOS
    common = {k: _number("workload", k, v) for k, v in wl.items()}
    specs = []
    for kind in kinds:
        if kind not in KINDS:
            raise ConfigError(f"[workload] kinds: unknown kind {kind!r}")
        own = section(f"workload.{kind}", _SPEC_KEYS)
        kw = {**common, **{k: _number(f"workload.{kind}", k, v) for k, v in own.items()}}
        specs.append(WorkloadSpec(kind, **kw))
    updates["specs"] = tuple(specs)
    mix_kw = section("workload.profiling_mix", _SPEC_KEYS)
    updates["mix"] = WorkloadSpec("profiling_mix", **{
        k: _number("workload.profiling_mix", k, v) for k, v in mix_kw.items()})

    cfg = replace(cfg, **updates)
    try:
        for s in cfg.specs + (cfg.mix,):
            s.resolved()
    except InvalidSpec as exc:
        raise ConfigError(f"workload: {exc}") from exc
    return cfg


def load_config(path: Optional[str]) -> RunConfig:
    """Read ``path``; ``None`` gives the built-in defaults."""
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, path)
