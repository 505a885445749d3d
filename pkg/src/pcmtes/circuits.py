"""Heat transfer between the intermediate fluid and the two pipe circuits.

The refrigerant circuit (charging) follows a moving-boundary split of each
pipe into a two-phase zone and a superheated-vapour zone. All three series
resistances (internal convection, wall conduction, external convection)
scale with 1/L, so the two-phase zone length has a closed form and no
iteration is needed: either the required evaporation duty fits inside the
pipe, leaving a vapour zone handled by an effectiveness-NTU term, or the
pipe is too short and the refrigerant leaves still two-phase.

The secondary circuit (discharging) is a single-phase effectiveness-NTU
exchanger over the full pipe length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError
from .properties import LiquidProperties, RefrigerantProperties

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PipeGeometry:
    n_pipes: int
    length: float         # m
    r_inner: float        # m
    r_outer: float        # m
    k_wall: float         # W/(m K)
    h_conv_int: float     # W/(m2 K), forced convection inside (primary regime)
    h_conv_ext: float     # W/(m2 K), natural convection outside
    h_conv_int_vapour: Optional[float] = None  # W/(m2 K), refrigerant vapour zone

    def __post_init__(self) -> None:
        if self.n_pipes < 1:
            raise ConfigError("pipe count must be at least 1")
        if not (0.0 < self.r_inner < self.r_outer):
            raise ConfigError("pipe radii must satisfy 0 < r_inner < r_outer")
        if self.length <= 0.0 or self.k_wall <= 0.0:
            raise ConfigError("pipe length and wall conductivity must be positive")
        if self.h_conv_int <= 0.0 or self.h_conv_ext <= 0.0:
            raise ConfigError("pipe convection coefficients must be positive")
        if self.h_conv_int_vapour is not None and self.h_conv_int_vapour <= 0.0:
            raise ConfigError("vapour-zone convection coefficient must be positive")


@dataclass(frozen=True)
class BoundaryInputs:
    """Boundary conditions imposed on the tank for one scenario phase."""

    mdot_ref: float   # kg/s through each refrigerant pipe
    h_ref_in: float   # J/kg, refrigerant inlet enthalpy (two-phase)
    T_ref_in: float   # degC, refrigerant inlet temperature (= saturation)
    mdot_sec: float   # kg/s through each secondary pipe
    T_sec_in: float   # degC, secondary inlet temperature

    def __post_init__(self) -> None:
        if self.mdot_ref < 0.0 or self.mdot_sec < 0.0:
            raise ValueError("mass flow rates must be non-negative")


@dataclass(frozen=True)
class CircuitResult:
    q_per_pipe: float                 # W, positive = heat removed from the intermediate fluid
    outlet_temperature: float         # degC
    outlet_enthalpy: Optional[float] = None   # J/kg, refrigerant only
    two_phase_length: Optional[float] = None  # m, refrigerant only
    wall_temperature: Optional[float] = None  # degC, secondary diagnostic
    flag: Optional[str] = None        # set when the exchange was clamped


def per_length_resistance(pipe: PipeGeometry, h_int: float) -> float:
    """Series thermal resistance of a unit pipe length, K m / W.

    Internal convection, cylindrical wall conduction and external convection
    in series; divide by a zone length to get that zone's resistance.
    """
    r_int = 1.0 / (h_int * _TWO_PI * pipe.r_inner)
    r_wall = math.log(pipe.r_outer / pipe.r_inner) / (_TWO_PI * pipe.k_wall)
    r_ext = 1.0 / (pipe.h_conv_ext * _TWO_PI * pipe.r_outer)
    return r_int + r_wall + r_ext


def vapour_zone_effectiveness(R: float, cp: float, mdot: float) -> float:
    """Effectiveness of the superheated vapour zone, in (0, 1).

    The still intermediate fluid is the infinite-capacity side, so the
    effectiveness reduces to 1 - exp(-NTU) with NTU = 1 / (R cp mdot).
    """
    if R <= 0.0 or cp <= 0.0 or mdot <= 0.0:
        raise ValueError("effectiveness arguments must be strictly positive")
    return 1.0 - math.exp(-1.0 / (R * cp * mdot))


def refrigerant_exchange(
    T_int: float,
    inputs: BoundaryInputs,
    props: RefrigerantProperties,
    pipe: PipeGeometry,
) -> CircuitResult:
    """Cooling power one refrigerant pipe extracts from the intermediate fluid.

    The two-phase zone length follows from requiring it to carry the full
    evaporation duty mdot * (h_sat_vapour - h_in). If that length fits in
    the pipe, the remainder is a superheated vapour zone; otherwise the
    whole pipe runs two-phase and the transfer is resistance-limited.
    """
    mdot = inputs.mdot_ref
    if mdot == 0.0:
        return CircuitResult(q_per_pipe=0.0, outlet_temperature=inputs.T_ref_in,
                             outlet_enthalpy=inputs.h_ref_in, two_phase_length=0.0)

    T_sat = props.T_sat
    dT = T_int - T_sat
    if dT <= 0.0:
        # Refrigerant warmer than the tank: outside the model's envelope.
        return CircuitResult(q_per_pipe=0.0, outlet_temperature=T_sat,
                             outlet_enthalpy=inputs.h_ref_in, two_phase_length=0.0,
                             flag="refrigerant-driving-difference-nonpositive")

    rho_two_phase = per_length_resistance(pipe, pipe.h_conv_int)
    q_two_phase_required = mdot * (props.h_sat_vapour - inputs.h_ref_in)
    length_two_phase = q_two_phase_required * rho_two_phase / dT

    if length_two_phase > pipe.length:
        # Pipe too short to evaporate everything: two-phase outlet.
        q2 = dT * pipe.length / rho_two_phase
        return CircuitResult(
            q_per_pipe=q2,
            outlet_temperature=T_sat,
            outlet_enthalpy=inputs.h_ref_in + q2 / mdot,
            two_phase_length=pipe.length,
        )

    q2 = q_two_phase_required
    vapour_length = pipe.length - length_two_phase
    if vapour_length > 0.0:
        h_int_vap = pipe.h_conv_int_vapour if pipe.h_conv_int_vapour is not None else pipe.h_conv_int
        r_vap = per_length_resistance(pipe, h_int_vap) / vapour_length
        eff = vapour_zone_effectiveness(r_vap, props.cp_vapour, mdot)
        qv = eff * props.cp_vapour * mdot * dT
    else:
        qv = 0.0
    return CircuitResult(
        q_per_pipe=q2 + qv,
        outlet_temperature=T_sat + qv / (props.cp_vapour * mdot),
        outlet_enthalpy=props.h_sat_vapour + qv / mdot,
        two_phase_length=length_two_phase,
    )


def secondary_exchange(
    T_int: float,
    inputs: BoundaryInputs,
    props: LiquidProperties,
    pipe: PipeGeometry,
) -> CircuitResult:
    """Cooling power one secondary pipe exchanges with the intermediate fluid.

    Negative whenever the secondary fluid enters warmer than the tank (the
    normal discharging direction). The pipe wall temperature is reported as
    a diagnostic from the mass-average fluid temperature.
    """
    mdot = inputs.mdot_sec
    if mdot == 0.0:
        return CircuitResult(q_per_pipe=0.0, outlet_temperature=inputs.T_sec_in)

    rho_l = per_length_resistance(pipe, pipe.h_conv_int)
    r_sec = rho_l / pipe.length
    eff = vapour_zone_effectiveness(r_sec, props.cp, mdot)
    q = eff * props.cp * mdot * (T_int - inputs.T_sec_in)
    T_out = inputs.T_sec_in + q / (props.cp * mdot)

    r_int = 1.0 / (pipe.h_conv_int * _TWO_PI * pipe.r_inner * pipe.length)
    r_wall = math.log(pipe.r_outer / pipe.r_inner) / (_TWO_PI * pipe.k_wall * pipe.length)
    T_wall = 0.5 * (inputs.T_sec_in + T_out) + q * (r_int + r_wall)
    return CircuitResult(q_per_pipe=q, outlet_temperature=T_out, wall_temperature=T_wall)
