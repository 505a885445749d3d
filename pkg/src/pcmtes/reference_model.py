"""Fixed-step discrete model of the storage tank: the accuracy oracle.

State is the specific enthalpy of each capsule layer plus the temperature
of the (well-mixed, still) intermediate fluid. Every step evaluates all
fluxes at the current state and commits all updates simultaneously, so a
closed tank conserves internal energy to rounding error.

The explicit scheme is only stable up to a layer-count-dependent step
bound; requests beyond it are rejected unless explicitly overridden.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Optional

import numpy as np

from .capsule_geometry import internode_resistances, layer_radii, surface_resistance
from .circuits import BoundaryInputs, refrigerant_exchange, secondary_exchange
from .errors import StabilityError
from .properties import PcmProperties

if TYPE_CHECKING:  # pragma: no cover
    from .accelerated_model import SubIntervalTrace
    from .cli_io import RunConfig
    from .scenario_analysis import Scenario

# Maximum stable step for the default ten-layer discretisation; the bound
# tightens quadratically as layers shrink.
BASE_STABLE_DT = 2.0
BASE_N_LAY = 10


@dataclass
class CapsuleState:
    """Specific enthalpies of the equal-mass layers, innermost first (J/kg)."""

    h_layers: np.ndarray

    def copy(self) -> "CapsuleState":
        return CapsuleState(h_layers=self.h_layers.copy())


@dataclass
class TankState:
    T_int: float          # degC, intermediate fluid
    capsule: CapsuleState
    clock: float = 0.0    # s

    def copy(self) -> "TankState":
        return TankState(T_int=self.T_int, capsule=self.capsule.copy(), clock=self.clock)


@dataclass(frozen=True)
class StepRecord:
    clock: float                       # s, end of the step
    T_int: float                       # degC, after the step
    q_ref_per_pipe: float              # W, time-weighted over the step
    q_sec_per_pipe: float              # W
    q_pcm_per_capsule: float           # W
    charge_ratio: float                # frozen latent fraction in [0, 1]
    layer_enthalpies: tuple            # J/kg, innermost first, after the step
    layer_temperatures: tuple          # degC
    sub_intervals: tuple               # s, partition of the step (singleton here)
    trace: Optional["SubIntervalTrace"] = None
    flag: Optional[str] = None


@dataclass
class RunReport:
    model: str
    dt: float
    scenario_name: str
    records: list[StepRecord]
    final_state: TankState
    wall_time_s: float
    step_count: int
    sub_interval_count: int
    flag_count: int = 0


def max_stable_dt(n_lay: int) -> float:
    """Largest accepted fixed step (s) for `n_lay` layers."""
    return BASE_STABLE_DT * (BASE_N_LAY / n_lay) ** 2


def layer_temperatures(h_layers: np.ndarray, props: PcmProperties) -> np.ndarray:
    """Vectorised temperature-enthalpy map over a layer array."""
    below = np.minimum(h_layers - props.h_lat_minus, 0.0) / props.cp_solid
    above = np.maximum(h_layers - props.h_lat_plus, 0.0) / props.cp_liquid
    return props.T_lat + below + above


def charge_ratio(capsule, props: PcmProperties) -> float:
    """Fraction of total latent capacity currently stored frozen.

    1 means fully charged (all layers at or below the solid latency point),
    0 fully discharged. Sensible sub/superheat does not contribute.
    """
    h = getattr(capsule, "h_layers", capsule)
    frozen = np.clip(props.h_lat_plus - np.asarray(h, dtype=float), 0.0, props.h_fusion)
    return float(np.sum(frozen)) / (len(frozen) * props.h_fusion)


def step_reference(
    state: TankState,
    inputs: BoundaryInputs,
    dt: float,
    config: "RunConfig",
) -> tuple[TankState, StepRecord]:
    """Advance the tank by one fixed step of the layer-resolved model."""
    if dt <= 0.0:
        raise ValueError(f"step size must be positive, got {dt}")
    geom = config.capsule
    limit = max_stable_dt(geom.n_lay)
    if dt > limit * (1.0 + 1e-12) and not config.allow_unstable_dt:
        raise StabilityError(
            f"dt={dt} s exceeds the stability bound {limit} s for n_lay={geom.n_lay}"
        )

    props = config.pcm
    h = state.capsule.h_layers
    temps = layer_temperatures(h, props)
    radii = layer_radii(h, geom, props)
    r_wall, r_conv = surface_resistance(radii, geom)

    # Cooling power from each capsule to the intermediate fluid (negative
    # while charging: the fluid is colder than the outermost layer).
    q_pcm = (state.T_int - temps[-1]) / (r_wall + r_conv)

    if geom.n_lay > 1:
        links = internode_resistances(radii, h, props)
        q_between = (temps[1:] - temps[:-1]) / links
        q_ext = np.concatenate((q_between, (q_pcm,)))
        q_int = np.concatenate(((0.0,), q_between))
        net = q_ext - q_int
    else:
        net = np.array([q_pcm])

    h_new = h + net * (dt / geom.m_lay)

    ref = refrigerant_exchange(state.T_int, inputs, config.refrigerant, config.ref_pipe)
    sec = secondary_exchange(state.T_int, inputs, config.secondary, config.sec_pipe)
    total = (config.n_ref * ref.q_per_pipe + config.n_sec * sec.q_per_pipe
             + config.n_pcm * q_pcm)
    T_int_new = state.T_int - total * dt / (config.m_int * config.intermediate.cp)

    new_state = TankState(
        T_int=T_int_new,
        capsule=CapsuleState(h_layers=h_new),
        clock=state.clock + dt,
    )
    record = StepRecord(
        clock=new_state.clock,
        T_int=T_int_new,
        q_ref_per_pipe=ref.q_per_pipe,
        q_sec_per_pipe=sec.q_per_pipe,
        q_pcm_per_capsule=q_pcm,
        charge_ratio=charge_ratio(h_new, props),
        layer_enthalpies=tuple(h_new),
        layer_temperatures=tuple(layer_temperatures(h_new, props)),
        sub_intervals=(dt,),
        flag=ref.flag or sec.flag,
    )
    return new_state, record


StepFn = Callable[[TankState, BoundaryInputs, float, "RunConfig"], tuple[TankState, StepRecord]]


def run_scenario(
    step_fn: StepFn,
    model: str,
    initial: TankState,
    scenario: "Scenario",
    dt: float,
    config: "RunConfig",
) -> RunReport:
    """Drive a step function through every phase of a scenario.

    Phase durations that are not an exact multiple of `dt` get one trailing
    shorter step. Wall-clock time covers the stepping loop only.
    """
    state = initial.copy()
    records: list[StepRecord] = []
    flag_count = 0
    sub_interval_count = 0

    start = time.perf_counter()
    for phase in scenario.phases:
        n_steps = int(round(phase.duration / dt))
        if abs(n_steps * dt - phase.duration) > 1e-9 * max(phase.duration, dt):
            n_steps = int(phase.duration // dt)
        residual = phase.duration - n_steps * dt
        for _ in range(n_steps):
            state, rec = step_fn(state, phase.inputs, dt, config)
            records.append(rec)
            sub_interval_count += len(rec.sub_intervals)
            if rec.flag is not None:
                flag_count += 1
        if residual > 1e-9 * dt:
            state, rec = step_fn(state, phase.inputs, residual, config)
            records.append(rec)
            sub_interval_count += len(rec.sub_intervals)
            if rec.flag is not None:
                flag_count += 1
    wall = time.perf_counter() - start

    return RunReport(
        model=model,
        dt=dt,
        scenario_name=scenario.name,
        records=records,
        final_state=state,
        wall_time_s=wall,
        step_count=len(records),
        sub_interval_count=sub_interval_count,
        flag_count=flag_count,
    )


def run_reference(
    initial: TankState,
    scenario: "Scenario",
    dt: float,
    config: "RunConfig",
) -> RunReport:
    """Run the fixed-step model over a whole scenario."""
    return run_scenario(step_reference, "reference", initial, scenario, dt, config)
