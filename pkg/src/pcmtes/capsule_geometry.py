"""Equal-mass layer discretisation of a spherical PCM capsule.

Layer 1 is innermost. Every layer holds the same PCM mass; its volume (and
hence the boundary radii) follows from a phase-dependent density, so the
capsule swells and shrinks as the PCM melts and freezes. Layer nodes sit at
the mid-volume radius of their layer (the radius splitting the layer's mass
in half), and conduction between nodes is composed of two half-shells, each
with its own layer's conductivity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .properties import PcmProperties, liquid_mass_fraction

_FOUR_PI = 4.0 * math.pi

# Relative disagreement allowed between the liquid-full and solid-full
# capsule mass products before the radii pair is declared inconsistent.
MASS_CONSISTENCY_TOL = 0.005


@dataclass(frozen=True)
class CapsuleGeometry:
    n_lay: int             # number of equal-mass layers
    m_capsule: float       # kg of PCM per capsule
    r_max: float           # m, internal radius when fully liquid
    r_min: float           # m, internal radius when fully solid
    shell_thickness: float  # m, polymer coating
    k_shell: float         # W/(m K), coating conductivity
    h_conv_ext: float      # W/(m2 K), natural convection to the intermediate fluid

    def __post_init__(self) -> None:
        if self.n_lay < 1:
            raise ConfigError("capsule n_lay must be at least 1")
        if not (0.0 < self.r_min < self.r_max):
            raise ConfigError("capsule radii must satisfy 0 < r_min < r_max")
        if self.shell_thickness < 0.0 or self.k_shell <= 0.0 or self.h_conv_ext <= 0.0:
            raise ConfigError("capsule coating/convection parameters must be positive")

    @property
    def m_lay(self) -> float:
        """kg of PCM in each layer."""
        return self.m_capsule / self.n_lay


@dataclass(frozen=True)
class LayerRadii:
    """Boundary radii of the layered capsule, innermost first.

    ``boundaries[0]`` is 0 (the centre); ``boundaries[n_lay]`` is the
    instantaneous radius of the PCM body.
    """

    boundaries: np.ndarray  # m, length n_lay + 1

    @property
    def outer(self) -> float:
        return float(self.boundaries[-1])


def capsule_mass(props: PcmProperties, r_max: float, r_min: float) -> float:
    """PCM mass of one capsule from the liquid-full sphere.

    Cross-checks against the solid-full sphere: both radii must describe the
    same mass (they differ only through the density change on melting).
    """
    if r_max <= 0.0 or r_min <= 0.0:
        raise ConfigError("capsule radii must be positive")
    m_liquid = props.rho_liquid * (_FOUR_PI / 3.0) * r_max**3
    m_solid = props.rho_solid * (_FOUR_PI / 3.0) * r_min**3
    if abs(m_solid - m_liquid) > MASS_CONSISTENCY_TOL * m_liquid:
        raise ConfigError(
            f"capsule radii are inconsistent with the PCM densities: "
            f"liquid-full mass {m_liquid:.6g} kg vs solid-full mass {m_solid:.6g} kg"
        )
    return m_liquid


def layer_density(h: float, props: PcmProperties) -> float:
    """Phase-dependent density, kg/m3; latent layers blend by melted mass fraction."""
    x = liquid_mass_fraction(h, props)
    return x * props.rho_liquid + (1.0 - x) * props.rho_solid


def layer_conductivity(h: float, props: PcmProperties) -> float:
    """Phase-dependent conductivity, W/(m K), blended like the density."""
    x = liquid_mass_fraction(h, props)
    return x * props.k_liquid + (1.0 - x) * props.k_solid


def _layer_densities(h_layers: np.ndarray, props: PcmProperties) -> np.ndarray:
    x = np.clip((h_layers - props.h_lat_minus) / props.h_fusion, 0.0, 1.0)
    return x * props.rho_liquid + (1.0 - x) * props.rho_solid


def _layer_conductivities(h_layers: np.ndarray, props: PcmProperties) -> np.ndarray:
    x = np.clip((h_layers - props.h_lat_minus) / props.h_fusion, 0.0, 1.0)
    return x * props.k_liquid + (1.0 - x) * props.k_solid


def layer_radii(h_layers: np.ndarray, geom: CapsuleGeometry, props: PcmProperties) -> LayerRadii:
    """Boundary radii for the current enthalpy state, built inward-out.

    Each layer contributes volume m_lay / rho(h_k); boundaries are the radii
    of the cumulative volumes.
    """
    volumes = geom.m_lay / _layer_densities(np.asarray(h_layers, dtype=float), props)
    cum = np.concatenate(([0.0], np.cumsum(volumes)))
    return LayerRadii(boundaries=np.cbrt(3.0 * cum / _FOUR_PI))


def shell_conduction_resistance(r_inner: float, r_outer: float, k: float) -> float:
    """Conduction resistance of a spherical shell, K/W."""
    if r_inner == 0.0:
        raise ValueError("spherical shell with zero inner radius has infinite resistance")
    if not (0.0 < r_inner <= r_outer):
        raise ValueError(f"shell radii must satisfy 0 < r_inner <= r_outer, got {r_inner}, {r_outer}")
    return (1.0 / r_inner - 1.0 / r_outer) / (_FOUR_PI * k)


def node_radius(r_inner: float, r_outer: float) -> float:
    """Mid-volume radius of a shell layer: splits the layer's mass in half."""
    return ((r_inner**3 + r_outer**3) / 2.0) ** (1.0 / 3.0)


def internode_resistance(
    k_index: int,
    radii: LayerRadii,
    h_layers: np.ndarray,
    props: PcmProperties,
) -> float:
    """Resistance between the nodes of layers `k_index` and `k_index + 1` (1-based).

    Two half-shells in series: node of layer k to the shared boundary with
    the layer's own conductivity, then boundary to the node of layer k + 1
    with that layer's conductivity.
    """
    n_lay = len(h_layers)
    if not (1 <= k_index <= n_lay - 1):
        raise IndexError(f"internode index must be in [1, {n_lay - 1}], got {k_index}")
    b = radii.boundaries
    node_k = node_radius(b[k_index - 1], b[k_index])
    node_k1 = node_radius(b[k_index], b[k_index + 1])
    k_a = layer_conductivity(float(h_layers[k_index - 1]), props)
    k_b = layer_conductivity(float(h_layers[k_index]), props)
    return (shell_conduction_resistance(node_k, b[k_index], k_a)
            + shell_conduction_resistance(b[k_index], node_k1, k_b))


def internode_resistances(
    radii: LayerRadii,
    h_layers: np.ndarray,
    props: PcmProperties,
) -> np.ndarray:
    """All n_lay - 1 node-to-node resistances at once (vectorised form)."""
    b = radii.boundaries
    b3 = b**3
    nodes = np.cbrt((b3[:-1] + b3[1:]) / 2.0)
    conds = _layer_conductivities(np.asarray(h_layers, dtype=float), props)
    inner_half = (1.0 / nodes[:-1] - 1.0 / b[1:-1]) / (_FOUR_PI * conds[:-1])
    outer_half = (1.0 / b[1:-1] - 1.0 / nodes[1:]) / (_FOUR_PI * conds[1:])
    return inner_half + outer_half


def surface_resistance(radii: LayerRadii, geom: CapsuleGeometry) -> tuple[float, float]:
    """(coating conduction, external convection) resistances at the capsule surface.

    The coating is taken to sit on the instantaneous PCM radius; its
    thickness and conductivity are fixed geometry.
    """
    r_in = radii.outer
    r_out = r_in + geom.shell_thickness
    if geom.shell_thickness == 0.0:
        r_wall = 0.0
    else:
        r_wall = shell_conduction_resistance(r_in, r_out, geom.k_shell)
    r_conv = 1.0 / (geom.h_conv_ext * _FOUR_PI * r_out**2)
    return r_wall, r_conv


def clustered_outer_resistance(
    k0: int,
    radii: LayerRadii,
    h_layers: np.ndarray,
    props: PcmProperties,
) -> float:
    """Series conduction resistance of layers k0+1 .. n_lay taken as one cluster.

    Measured from the outer boundary of layer `k0` (where the latent front
    sits) to the PCM surface; each clustered shell keeps its own phase
    conductivity. ``k0 == n_lay`` returns 0.
    """
    n_lay = len(h_layers)
    if not (1 <= k0 <= n_lay):
        raise IndexError(f"cluster base layer must be in [1, {n_lay}], got {k0}")
    if k0 == n_lay:
        return 0.0
    b = radii.boundaries
    conds = _layer_conductivities(np.asarray(h_layers[k0:], dtype=float), props)
    return float(np.sum((1.0 / b[k0:-1] - 1.0 / b[k0 + 1:]) / (_FOUR_PI * conds)))


def half_capsule_outer_resistance(
    radii: LayerRadii,
    h_layers: np.ndarray,
    props: PcmProperties,
) -> float:
    """Conduction resistance from the capsule's mid-volume radius to its surface.

    Used when the whole capsule is lumped into one node: the node sits at
    the radius enclosing half the PCM mass, and the outer half of the body
    acts as the conduction path. Traversed layers keep their own
    conductivities.
    """
    b = radii.boundaries
    r_node = (b[-1]**3 / 2.0) ** (1.0 / 3.0)
    total = 0.0
    for k in range(len(h_layers)):
        r_lo, r_hi = b[k], b[k + 1]
        if r_hi <= r_node:
            continue
        r_from = max(r_lo, r_node)
        total += shell_conduction_resistance(
            r_from, r_hi, layer_conductivity(float(h_layers[k]), props))
    return total
