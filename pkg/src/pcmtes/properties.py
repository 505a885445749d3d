"""Material and fluid property records plus the PCM temperature-enthalpy map.

The PCM map is piecewise: temperature is pinned at the phase-change value
inside the latent enthalpy band and varies linearly with specific enthalpy
on the two sensible branches. The latent band is closed on both ends, so a
layer sitting exactly on a boundary classifies as latent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class PhaseZone(Enum):
    SUBCOOLED = "subcooled"
    LATENT = "latent"
    SUPERHEATED = "superheated"


@dataclass(frozen=True)
class PcmProperties:
    """Phase change material data.

    The specific-enthalpy datum is chosen so that the fully-solid latency
    point sits at ``h_lat_minus`` (0 by default); the fully-liquid point is
    then ``h_lat_minus + h_fusion`` exactly.
    """

    cp_solid: float      # J/(kg K)
    cp_liquid: float     # J/(kg K)
    h_fusion: float      # J/kg
    T_lat: float         # degC, phase change temperature
    k_solid: float       # W/(m K)
    k_liquid: float      # W/(m K)
    rho_solid: float     # kg/m3
    rho_liquid: float    # kg/m3
    h_lat_minus: float = 0.0  # J/kg, enthalpy at the fully-solid latency point

    def __post_init__(self) -> None:
        for name in ("cp_solid", "cp_liquid", "h_fusion", "k_solid",
                     "k_liquid", "rho_solid", "rho_liquid"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"PcmProperties.{name} must be strictly positive")

    @property
    def h_lat_plus(self) -> float:
        """Enthalpy at the fully-liquid latency point, J/kg."""
        return self.h_lat_minus + self.h_fusion


@dataclass(frozen=True)
class RefrigerantProperties:
    """Refrigerant saturation data at the (constant) tank-side pressure."""

    pressure: float        # Pa
    T_sat: float           # degC, saturation temperature at `pressure`
    h_sat_liquid: float    # J/kg
    h_sat_vapour: float    # J/kg
    h_vaporization: float  # J/kg
    cp_vapour: float       # J/(kg K), superheated vapour near saturation

    def __post_init__(self) -> None:
        if self.h_vaporization <= 0.0:
            raise ValueError("RefrigerantProperties.h_vaporization must be positive")
        gap = self.h_sat_vapour - self.h_sat_liquid
        if not math.isclose(gap, self.h_vaporization, rel_tol=1e-9):
            raise ValueError(
                "refrigerant saturation enthalpies are inconsistent: "
                f"h_sat_vapour - h_sat_liquid = {gap}, h_vaporization = {self.h_vaporization}"
            )
        if self.cp_vapour <= 0.0:
            raise ValueError("RefrigerantProperties.cp_vapour must be positive")


@dataclass(frozen=True)
class LiquidProperties:
    """Single-phase liquid data (intermediate and secondary glycol solutions)."""

    cp: float   # J/(kg K)
    rho: float  # kg/m3
    k: float    # W/(m K)

    def __post_init__(self) -> None:
        if self.cp <= 0.0 or self.rho <= 0.0 or self.k <= 0.0:
            raise ValueError("LiquidProperties fields must be strictly positive")


def classify(h: float, props: PcmProperties) -> PhaseZone:
    """Phase zone of a PCM mass at specific enthalpy `h` (closed latent band)."""
    if not math.isfinite(h):
        raise ValueError(f"specific enthalpy must be finite, got {h}")
    if h < props.h_lat_minus:
        return PhaseZone.SUBCOOLED
    if h > props.h_lat_plus:
        return PhaseZone.SUPERHEATED
    return PhaseZone.LATENT


def temperature_of_enthalpy(h: float, props: PcmProperties) -> float:
    """PCM temperature (degC) at specific enthalpy `h` (J/kg).

    Pinned at the phase-change temperature inside the latent band,
    linear in the sensible branches; continuous at both band edges.
    """
    if not math.isfinite(h):
        raise ValueError(f"specific enthalpy must be finite, got {h}")
    if h < props.h_lat_minus:
        return props.T_lat - (props.h_lat_minus - h) / props.cp_solid
    if h > props.h_lat_plus:
        return props.T_lat + (h - props.h_lat_plus) / props.cp_liquid
    return props.T_lat


def enthalpy_of_temperature(T: float, zone: PhaseZone, props: PcmProperties) -> float:
    """Inverse of the sensible branches of the temperature-enthalpy map.

    `zone` must name a sensible branch; the latent plateau has no unique
    inverse. `T` on the strictly wrong side of the phase-change temperature
    for the requested branch is rejected.
    """
    if not math.isfinite(T):
        raise ValueError(f"temperature must be finite, got {T}")
    if zone is PhaseZone.LATENT:
        raise ValueError("latent-zone enthalpy is not a function of temperature")
    if zone is PhaseZone.SUBCOOLED:
        if T > props.T_lat:
            raise ValueError(
                f"T={T} degC is above the phase-change temperature; not a subcooled state"
            )
        return props.h_lat_minus - props.cp_solid * (props.T_lat - T)
    if T < props.T_lat:
        raise ValueError(
            f"T={T} degC is below the phase-change temperature; not a superheated state"
        )
    return props.h_lat_plus + props.cp_liquid * (T - props.T_lat)


def liquid_mass_fraction(h: float, props: PcmProperties) -> float:
    """Melted mass fraction of a PCM parcel at enthalpy `h`, clamped to [0, 1]."""
    x = (h - props.h_lat_minus) / props.h_fusion
    return min(1.0, max(0.0, x))
