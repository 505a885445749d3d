"""Simulation engine for a PCM-based cold thermal energy storage tank.

Two interchangeable models of the same tank: a fixed-step layer-resolved
reference model, and an accelerated variable-step model that splits each
major step at predicted latent-front transitions.
"""

from .accelerated_model import (
    SubInterval,
    SubIntervalTrace,
    find_outermost_latent,
    latent_front_power,
    predict_transition,
    run_accelerated,
    step_accelerated,
    step_all_sensible,
)
from .capsule_geometry import (
    CapsuleGeometry,
    LayerRadii,
    capsule_mass,
    clustered_outer_resistance,
    internode_resistance,
    layer_radii,
    shell_conduction_resistance,
    surface_resistance,
)
from .circuits import (
    BoundaryInputs,
    CircuitResult,
    PipeGeometry,
    refrigerant_exchange,
    secondary_exchange,
    vapour_zone_effectiveness,
)
from .cli_io import RunConfig, load_config, serialize_config, with_layers
from .errors import ConfigError, ProgressError, StabilityError
from .properties import (
    LiquidProperties,
    PcmProperties,
    PhaseZone,
    RefrigerantProperties,
    classify,
    enthalpy_of_temperature,
    temperature_of_enthalpy,
)
from .reference_model import (
    CapsuleState,
    RunReport,
    StepRecord,
    TankState,
    charge_ratio,
    max_stable_dt,
    run_reference,
    step_reference,
)
from .scenario_analysis import (
    BenchRow,
    ComparisonReport,
    Mode,
    Scenario,
    ScenarioPhase,
    benchmark,
    build_canonical_scenarios,
    compare_runs,
    initial_tank_state,
)

__version__ = "0.1.0"
