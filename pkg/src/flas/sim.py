"""Discrete-time fluid-queue model of a scalable publish/subscribe service.

Only the matcher operator scales; access point and exit point instances stay
fixed.  Time advances in ticks of ``dt`` seconds.  Every function here is pure:
states are frozen dataclasses and randomness comes from an explicit
``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .errors import AtMinimum, ScalingInProgress, Unsatisfiable

MAX_MATCHERS = 2 ** 20


class ScaleKind(str, Enum):
    SCALE_OUT = "scale_out"
    SCALE_IN = "scale_in"


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ServiceConfig:
    ap_instances: int = 1
    matcher_instances: int = 1
    ep_instances: int = 1

    def __post_init__(self):
        if not _is_power_of_two(self.matcher_instances):
            raise ValueError(f"matcher_instances must be a power of two, got {self.matcher_instances}")
        if self.ap_instances < 1 or self.ep_instances < 1:
            raise ValueError("ap_instances and ep_instances must be >= 1")

    def doubled(self) -> "ServiceConfig":
        return replace(self, matcher_instances=self.matcher_instances * 2)

    def halved(self) -> "ServiceConfig":
        if self.matcher_instances < 2:
            raise AtMinimum("cannot halve a single matcher")
        return replace(self, matcher_instances=self.matcher_instances // 2)

    def __str__(self):
        return f"{self.ap_instances}-{self.matcher_instances}-{self.ep_instances}"


@dataclass(frozen=True)
class SimParams:
    mu0: float = 20000.0
    kappa: float = 1.1e-5
    base_service_time: float = 0.008
    scaling_overhead_factor: float = 0.8
    t_coeffs: tuple = (1.0, 5e-5, 4e-6)
    dt: float = 1.0
    rng_seed: int = 0
    # relative half-width of the uniform noise on the true scaling time
    t_noise: float = 0.05

    def __post_init__(self):
        if self.mu0 <= 0:
            raise ValueError("mu0 must be > 0")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if not 0 < self.scaling_overhead_factor <= 1:
            raise ValueError("scaling_overhead_factor must be in (0, 1]")
        if len(self.t_coeffs) != 3 or min(self.t_coeffs) < 0:
            raise ValueError("t_coeffs must be three non-negative numbers")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.base_service_time <= 0:
            raise ValueError("base_service_time must be > 0")


@dataclass(frozen=True)
class WorkloadPoint:
    t: int
    notif_rate: float
    sub_rate: float = 0.0
    unsub_rate: float = 0.0


@dataclass(frozen=True)
class ScalingEvent:
    kind: ScaleKind
    tp: int
    rp: int
    t_actual: float
    t_predicted: float
    config_before: ServiceConfig
    config_after: ServiceConfig
    notif_rate: float = 0.0
    stored_subs: float = 0.0
    event_id: int = 0


@dataclass(frozen=True)
class SystemState:
    t: int = -1
    config: ServiceConfig = field(default_factory=ServiceConfig)
    stored_subs: float = 0.0
    queue: float = 0.0
    rt: float = 0.0
    throughput: float = 0.0
    capacity: float = 0.0
    in_scaling: Optional[ScalingEvent] = None
    saturated: bool = False
    notif_rate: float = 0.0


def initial_state(params: SimParams, stored_subs: float = 0.0,
                  config: Optional[ServiceConfig] = None) -> SystemState:
    """State before the first workload tick (t = -1), idle and empty."""
    config = config or ServiceConfig()
    cap = capacity(config, stored_subs, params, False)
    return SystemState(t=-1, config=config, stored_subs=float(stored_subs),
                       rt=service_time(config, stored_subs, params), capacity=cap)


def capacity(config: ServiceConfig, stored_subs: float, params: SimParams,
             scaling_active: bool) -> float:
    """Messages/s the matcher tier can process."""
    c = config.matcher_instances * params.mu0 / (1.0 + params.kappa * stored_subs)
    if scaling_active:
        c *= params.scaling_overhead_factor
    return c


def service_time(config: ServiceConfig, stored_subs: float, params: SimParams) -> float:
    # subscriptions are partitioned across matchers, so each message is matched
    # against stored_subs / m predicates
    m = config.matcher_instances
    return params.base_service_time * (1.0 + params.kappa * stored_subs / m)


def step(state: SystemState, wp: WorkloadPoint, params: SimParams) -> SystemState:
    """Advance the service by one tick under workload ``wp``."""
    dt = params.dt
    config = state.config
    event = state.in_scaling
    if event is not None and event.rp <= wp.t:
        config = event.config_after
        event = None

    subs = max(0.0, state.stored_subs + (wp.sub_rate - wp.unsub_rate) * dt)
    cap = capacity(config, subs, params, event is not None)
    lam = wp.notif_rate
    throughput = min(lam + state.queue / dt, cap)
    queue = state.queue + (lam - throughput) * dt
    if queue < 0.0:
        # rounding only; throughput already capped the drain
        queue = 0.0
    rt = service_time(config, subs, params) + queue / cap
    return SystemState(
        t=wp.t,
        config=config,
        stored_subs=subs,
        queue=queue,
        rt=rt,
        throughput=throughput,
        capacity=cap,
        in_scaling=event,
        saturated=lam > cap,
        notif_rate=lam,
    )


def true_scaling_time(wp: WorkloadPoint, stored_subs: float, params: SimParams,
                      rng: Optional[np.random.Generator]) -> float:
    """Ground-truth duration in seconds of a scaling action started under ``wp``.

    Affine in notification rate and stored subscriptions with a uniform
    relative perturbation of +/- ``params.t_noise``.  Passing ``rng=None``
    disables the noise.
    """
    a0, a1, a2 = params.t_coeffs
    base = a0 + a1 * wp.notif_rate + a2 * stored_subs
    eps = 0.0
    if rng is not None and params.t_noise > 0:
        eps = rng.uniform(-params.t_noise, params.t_noise) * base
    return max(base + eps, params.dt)


def ticks_for(duration: float, dt: float) -> int:
    # tolerate float noise such as 2.0000000000000004 / 1.0
    return max(1, math.ceil(duration / dt - 1e-9))


def begin_scaling(state: SystemState, kind: ScaleKind, predicted: float,
                  wp: WorkloadPoint, params: SimParams,
                  rng: Optional[np.random.Generator], event_id: int = 0) -> SystemState:
    """Start a scale-out (double) or scale-in (halve) at the current tick."""
    if state.in_scaling is not None:
        raise ScalingInProgress(f"event {state.in_scaling.event_id} still active at t={state.t}")
    kind = ScaleKind(kind)
    before = state.config
    after = before.doubled() if kind is ScaleKind.SCALE_OUT else before.halved()
    t_actual = true_scaling_time(wp, state.stored_subs, params, rng)
    event = ScalingEvent(
        kind=kind,
        tp=state.t,
        rp=state.t + ticks_for(t_actual, params.dt),
        t_actual=t_actual,
        t_predicted=float(predicted),
        config_before=before,
        config_after=after,
        notif_rate=wp.notif_rate,
        stored_subs=state.stored_subs,
        event_id=event_id,
    )
    return replace(state, in_scaling=event)


def minimal_sufficient_matchers(wp: WorkloadPoint, stored_subs: float, params: SimParams,
                                sla_max_rt: float) -> int:
    """Smallest power-of-two matcher count that keeps a steady state inside the SLA."""
    m = 1
    while m <= MAX_MATCHERS:
        config = ServiceConfig(matcher_instances=m)
        if (wp.notif_rate <= capacity(config, stored_subs, params, False)
                and service_time(config, stored_subs, params) <= sla_max_rt):
            return m
        m *= 2
    raise Unsatisfiable(f"no matcher count up to {MAX_MATCHERS} serves t={wp.t}")
