"""Time-efficient variable-step model of the storage tank.

One major step of tens to hundreds of seconds is split into sub-intervals
at predicted latent-exhaustion instants, rather than error-controlled.
Within a sub-interval:

* the outermost layer still inside the latent band (the active layer, k0)
  exchanges heat at a constant rate set by the cluster of sensible layers
  outside it plus the capsule surface resistances;
* layers interior to k0 are left untouched;
* layers exterior to k0 are reassigned the steady-state conduction profile
  carried by that same rate, converted to enthalpy on each layer's current
  sensible branch. Applying the branch of the layer's pre-update zone is
  what lets a direction reversal pull sensible layers back into the latent
  band, re-activating the outermost one on the next scan.

When no layer is latent the capsule is lumped into a single node at its
mass-mean enthalpy; if that node drifts back across a latent boundary the
step splits there and the layered algorithm resumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .capsule_geometry import (
    LayerRadii,
    half_capsule_outer_resistance,
    internode_resistances,
    layer_radii,
    surface_resistance,
)
from .circuits import BoundaryInputs, refrigerant_exchange, secondary_exchange
from .errors import ProgressError
from .properties import PcmProperties, PhaseZone, temperature_of_enthalpy
from .reference_model import (
    CapsuleState,
    RunReport,
    StepRecord,
    TankState,
    charge_ratio,
    layer_temperatures,
    run_scenario,
)

if TYPE_CHECKING:  # pragma: no cover
    from .cli_io import RunConfig
    from .scenario_analysis import Scenario


@dataclass(frozen=True)
class SubInterval:
    duration: float              # s
    active_layer: Optional[int]  # 1-based layer index; None for the lumped fallback
    q_pcm: float                 # W per capsule during this sub-interval
    T_int_after: float           # degC


@dataclass(frozen=True)
class SubIntervalTrace:
    entries: tuple[SubInterval, ...]

    @property
    def durations(self) -> tuple[float, ...]:
        return tuple(e.duration for e in self.entries)


def find_outermost_latent(h_layers: np.ndarray, props: PcmProperties) -> Optional[int]:
    """Largest 1-based layer index inside the closed latent band, or None."""
    return _scan_latent(h_layers, props, len(h_layers))


def _scan_latent(h_layers: np.ndarray, props: PcmProperties, ceiling: int) -> Optional[int]:
    # Restricting the scan to indices <= ceiling implements the algorithm's
    # inward descent: once a layer has exhausted its latent energy within a
    # major step, the search continues strictly below it, even though the
    # exhausted layer still sits on the (closed) band boundary.
    h = h_layers[:ceiling]
    mask = (h >= props.h_lat_minus) & (h <= props.h_lat_plus)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return None
    return int(idx[-1]) + 1


def front_path_resistance(
    k0: int,
    radii: LayerRadii,
    h_layers: np.ndarray,
    props: PcmProperties,
    config: "RunConfig",
) -> float:
    """Thermal resistance from the intermediate fluid to the active layer's node.

    Surface (coating + convection) plus the node-chain resistances of the
    clustered sensible layers outside k0. Measuring to the node rather than
    the layer boundary keeps the quasi-static path identical to the
    fixed-step model's discrete conduction network; for k0 = n_lay it
    reduces to the bare surface resistance.
    """
    r_wall, r_conv = surface_resistance(radii, config.capsule)
    total = r_wall + r_conv
    if k0 < config.capsule.n_lay:
        links = internode_resistances(radii, h_layers, props)
        total += float(np.sum(links[k0 - 1:]))
    return total


def latent_front_power(state: TankState, k0: int, config: "RunConfig") -> float:
    """Cooling power (W) exchanged between the fluid and the active layer.

    Positive melts the layer (fluid warmer than the phase-change
    temperature), negative freezes it.
    """
    props, geom = config.pcm, config.capsule
    h = state.capsule.h_layers
    radii = layer_radii(h, geom, props)
    return (state.T_int - props.T_lat) / front_path_resistance(k0, radii, h, props, config)


def predict_transition(
    h_k0: float,
    q: float,
    dt_remaining: float,
    m_lay: float,
    props: PcmProperties,
) -> tuple[bool, float]:
    """Whether the active layer exhausts its latent energy within the window.

    Returns (transitions, time_to_boundary). Melting (q > 0) targets the
    liquid latency point, freezing the solid one. A transition landing
    exactly on the window end counts as a transition with zero residual.
    """
    if q == 0.0:
        return False, dt_remaining
    target = props.h_lat_plus if q > 0.0 else props.h_lat_minus
    dt_k0 = m_lay * (target - h_k0) / q
    return (dt_k0 <= dt_remaining), dt_k0


def _sensible_enthalpy(T: float, zone: PhaseZone, props: PcmProperties) -> float:
    # Branch formulas without wrong-side validation: a reassigned layer may
    # legitimately land back inside the latent band after a flow reversal.
    if zone is PhaseZone.SUBCOOLED:
        return props.h_lat_minus - props.cp_solid * (props.T_lat - T)
    return props.h_lat_plus + props.cp_liquid * (T - props.T_lat)


def _exterior_zone(h: float, props: PcmProperties) -> Optional[PhaseZone]:
    """Sensible branch an exterior layer belongs to, by its current state.

    A layer parked exactly on a band boundary (it transitioned there
    earlier) continues on the adjacent sensible branch. A layer strictly
    inside the band (pulled back by an earlier reversal) has no sensible
    branch; it keeps its enthalpy until the front scan reaches it.
    """
    if h <= props.h_lat_minus:
        return PhaseZone.SUBCOOLED
    if h >= props.h_lat_plus:
        return PhaseZone.SUPERHEATED
    return None


def _reassign_exterior(
    h: np.ndarray,
    k0: int,
    q: float,
    links: np.ndarray,
    props: PcmProperties,
) -> float:
    """Impose the steady-state conduction profile on layers outside k0.

    Node temperatures accumulate q times the internode resistances outward
    from the active layer's node (at the phase-change temperature), so
    consecutive exterior nodes reproduce q across their internode
    resistance exactly at assignment time.

    Returns the summed specific-enthalpy change of the reassigned layers
    (J/kg): their sensible drain physically flows through to the
    intermediate fluid and must appear in its energy balance.
    """
    T_node = props.T_lat
    delta = 0.0
    for k in range(k0 + 1, len(h) + 1):
        T_node += q * links[k - 2]
        zone = _exterior_zone(float(h[k - 1]), props)
        if zone is PhaseZone.SUBCOOLED:
            # A profile temperature on the far side of the phase-change
            # point means the layer is re-entering the latent band after a
            # flow reversal; it parks on the boundary (melting point
            # reached, no latent energy absorbed yet) rather than jumping
            # into the band.
            h_new = min(_sensible_enthalpy(T_node, zone, props), props.h_lat_minus)
        elif zone is PhaseZone.SUPERHEATED:
            h_new = max(_sensible_enthalpy(T_node, zone, props), props.h_lat_plus)
        else:
            continue
        delta += h_new - h[k - 1]
        h[k - 1] = h_new
    return delta


def _reverses_exterior(h: np.ndarray, k0: int, q: float,
                       props: PcmProperties) -> bool:
    """Whether the current rate pulls sensible exterior layers into the band.

    Freezing (q < 0) drags superheated exteriors back below the liquid
    latency point; melting (q > 0) drags subcooled exteriors back above the
    solid one. Either way the scan is stale and must rerun.
    """
    ext = h[k0:]
    if q < 0.0:
        return bool(np.any(ext > props.h_lat_plus))
    if q > 0.0:
        return bool(np.any(ext < props.h_lat_minus))
    return False


def _lump_target(mean_h: float, q: float, props: PcmProperties) -> Optional[float]:
    # Next latent boundary the lumped node would cross, given its direction.
    if q > 0.0:
        if mean_h < props.h_lat_minus:
            return props.h_lat_minus
        if mean_h < props.h_lat_plus:
            return props.h_lat_plus
        return None
    if q < 0.0:
        if mean_h > props.h_lat_plus:
            return props.h_lat_plus
        if mean_h > props.h_lat_minus:
            return props.h_lat_minus
        return None
    return None


def step_accelerated(
    state: TankState,
    inputs: BoundaryInputs,
    dt: float,
    config: "RunConfig",
) -> tuple[TankState, StepRecord]:
    """Advance the tank by one major step, splitting at layer transitions."""
    if dt <= 0.0:
        raise ValueError(f"step size must be positive, got {dt}")
    props, geom = config.pcm, config.capsule
    m_int_cp = config.m_int * config.intermediate.cp

    h = state.capsule.h_layers.copy()
    T_int = state.T_int
    remaining = dt
    ceiling = geom.n_lay
    entries: list[SubInterval] = []
    zero_count = 0
    q_ref_tw = q_sec_tw = q_pcm_tw = 0.0
    flag: Optional[str] = None

    while remaining > 1e-9 * dt:
        ref = refrigerant_exchange(T_int, inputs, config.refrigerant, config.ref_pipe)
        sec = secondary_exchange(T_int, inputs, config.secondary, config.sec_pipe)
        if flag is None:
            flag = ref.flag or sec.flag

        k0 = _scan_latent(h, props, ceiling)
        if k0 is not None:
            radii = layer_radii(h, geom, props)
            r_wall, r_conv = surface_resistance(radii, geom)
            if k0 < geom.n_lay:
                links = internode_resistances(radii, h, props)
                r_path = r_wall + r_conv + float(np.sum(links[k0 - 1:]))
            else:
                links = None
                r_path = r_wall + r_conv
            q = (T_int - props.T_lat) / r_path

            if links is not None and _reverses_exterior(h, k0, q, props):
                # The rate's sign would pull sensible exterior layers back
                # across a latent boundary: impose the profile now and let
                # the scan pick up the re-entered outermost layer before any
                # time is spent on the stale front.
                _reassign_exterior(h, k0, q, links, props)
                ceiling = geom.n_lay
                zero_count += 1
                if zero_count > geom.n_lay + 2:
                    raise ProgressError(
                        f"step at clock {state.clock} split {len(entries)} times "
                        "without consuming time"
                    )
                continue

            delta_ext = 0.0

            transitions, dt_k0 = predict_transition(
                float(h[k0 - 1]), q, remaining, geom.m_lay, props)
            duration = dt_k0 if transitions else remaining

            # The front rate flips sign the moment the fluid crosses the
            # phase-change temperature; with duties frozen, that instant is
            # known in closed form. Splitting there keeps a mode reversal
            # from running a whole step on a stale-direction rate.
            total_w = (config.n_ref * ref.q_per_pipe
                       + config.n_sec * sec.q_per_pipe + config.n_pcm * q)
            if total_w != 0.0:
                tau_flip = (T_int - props.T_lat) * m_int_cp / total_w
                if 0.0 < tau_flip < duration:
                    duration = tau_flip
                    transitions = False

            # Exterior profile and active-layer update both use the rate and
            # resistances of the sub-interval start state.
            if links is not None:
                delta_ext = _reassign_exterior(h, k0, q, links, props)
            if transitions:
                h[k0 - 1] = props.h_lat_plus if q > 0.0 else props.h_lat_minus
                ceiling = k0 - 1
            else:
                h[k0 - 1] += q * duration / geom.m_lay
            active: Optional[int] = k0
            # The fluid exchanges the front power plus the exterior layers'
            # sensible drain (which conducts through them into the fluid).
            q_pcm = q
            if duration > 0.0:
                q_pcm = q + delta_ext * geom.m_lay / duration
        else:
            mean_h = float(np.mean(h))
            radii = layer_radii(h, geom, props)
            r_half = half_capsule_outer_resistance(radii, h, props)
            r_wall, r_conv = surface_resistance(radii, geom)
            T_node = temperature_of_enthalpy(mean_h, props)
            q = (T_int - T_node) / (r_half + r_wall + r_conv)

            target = _lump_target(mean_h, q, props)
            duration = remaining
            if target is not None and q != 0.0:
                dt_cross = geom.m_capsule * (target - mean_h) / q
                if dt_cross <= remaining:
                    # The node crossed back into the latent band: the layered
                    # algorithm resumes with a fresh scan.
                    duration = dt_cross
                    ceiling = geom.n_lay
            h += q * duration / geom.m_capsule
            active = None
            q_pcm = q

        T_int -= (duration / m_int_cp) * (
            config.n_ref * ref.q_per_pipe
            + config.n_sec * sec.q_per_pipe
            + config.n_pcm * q_pcm
        )
        entries.append(SubInterval(duration, active, q_pcm, T_int))
        q_ref_tw += ref.q_per_pipe * duration
        q_sec_tw += sec.q_per_pipe * duration
        q_pcm_tw += q_pcm * duration
        remaining -= duration

        if duration == 0.0:
            zero_count += 1
            if zero_count > geom.n_lay + 2:
                raise ProgressError(
                    f"step at clock {state.clock} split {len(entries)} times "
                    "without consuming time"
                )

    consumed = dt - remaining if remaining > 0.0 else dt
    new_state = TankState(
        T_int=T_int,
        capsule=CapsuleState(h_layers=h),
        clock=state.clock + dt,
    )
    record = StepRecord(
        clock=new_state.clock,
        T_int=T_int,
        q_ref_per_pipe=q_ref_tw / consumed,
        q_sec_per_pipe=q_sec_tw / consumed,
        q_pcm_per_capsule=q_pcm_tw / consumed,
        charge_ratio=charge_ratio(h, props),
        layer_enthalpies=tuple(h),
        layer_temperatures=tuple(layer_temperatures(h, props)),
        sub_intervals=tuple(e.duration for e in entries),
        trace=SubIntervalTrace(entries=tuple(entries)),
        flag=flag,
    )
    return new_state, record


def step_all_sensible(
    state: TankState,
    inputs: BoundaryInputs,
    dt: float,
    config: "RunConfig",
) -> tuple[TankState, StepRecord]:
    """Lumped-capsule step for states with no latent layer.

    The capsule exchanges through the surface resistances plus the
    conduction path from its mid-volume radius; all layers receive the same
    enthalpy increment. If the node crosses back into the latent band the
    step splits at the crossing and the layered algorithm resumes.
    """
    if find_outermost_latent(state.capsule.h_layers, config.pcm) is not None:
        raise ValueError("capsule still has a latent layer; use step_accelerated")
    return step_accelerated(state, inputs, dt, config)


def run_accelerated(
    initial: TankState,
    scenario: "Scenario",
    dt: float,
    config: "RunConfig",
) -> RunReport:
    """Run the variable-step model over a whole scenario."""
    return run_scenario(step_accelerated, "accelerated", initial, scenario, dt, config)
