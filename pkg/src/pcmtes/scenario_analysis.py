"""Scenario scheduling, model comparison metrics, and benchmark reporting.

A scenario is an ordered list of charge / stand-by / discharge phases, each
with fixed boundary inputs. The canonical trio (full charge, full
discharge, partial sequence) runs at the nominal operating point and is
the basis for all accuracy and speed comparisons.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Sequence, Union

import numpy as np

from .circuits import BoundaryInputs
from .reference_model import (
    CapsuleState,
    RunReport,
    TankState,
    run_reference,
)

if TYPE_CHECKING:  # pragma: no cover
    from .cli_io import RunConfig

# Canonical experiment durations, s.
FULL_CHARGE_DURATION = 9000.0        # 2.5 h
FULL_DISCHARGE_DURATION = 10800.0    # 3 h
PARTIAL_SEQUENCE = (
    ("charge", 3600.0),
    ("standby", 1800.0),
    ("discharge", 1800.0),
    ("standby", 1800.0),
    ("charge", 1800.0),
)


class Mode(Enum):
    CHARGE = "charge"
    DISCHARGE = "discharge"
    STANDBY = "standby"


@dataclass(frozen=True)
class ScenarioPhase:
    mode: Mode
    duration: float          # s
    inputs: BoundaryInputs

    def __post_init__(self) -> None:
        if self.duration <= 0.0:
            raise ValueError("phase duration must be positive")
        if self.mode is Mode.CHARGE and self.inputs.mdot_sec != 0.0:
            raise ValueError("charging phase must stop the secondary flow")
        if self.mode is Mode.DISCHARGE and self.inputs.mdot_ref != 0.0:
            raise ValueError("discharging phase must stop the refrigerant flow")
        if self.mode is Mode.STANDBY and (self.inputs.mdot_ref != 0.0
                                          or self.inputs.mdot_sec != 0.0):
            raise ValueError("stand-by phase must stop both flows")


@dataclass(frozen=True)
class Scenario:
    name: str
    phases: tuple[ScenarioPhase, ...]
    initial: Union[str, TankState]   # "fully-charged" | "fully-discharged" | explicit

    @property
    def total_duration(self) -> float:
        return sum(p.duration for p in self.phases)


def initial_tank_state(descriptor: Union[str, TankState], config: "RunConfig") -> TankState:
    """Resolve a scenario's initial-state descriptor into a concrete state."""
    if isinstance(descriptor, TankState):
        return descriptor.copy()
    props = config.pcm
    n = config.capsule.n_lay
    if descriptor == "fully-charged":
        h = np.full(n, props.h_lat_minus)
        return TankState(T_int=config.T_int_charged, capsule=CapsuleState(h_layers=h))
    if descriptor == "fully-discharged":
        h = np.full(n, props.h_lat_plus)
        return TankState(T_int=config.T_int_discharged, capsule=CapsuleState(h_layers=h))
    raise ValueError(f"unknown initial state descriptor: {descriptor!r}")


def phase_inputs(mode: Mode, nominal: BoundaryInputs) -> BoundaryInputs:
    """Boundary inputs for a phase: the idle circuit's flow is stopped."""
    if mode is Mode.CHARGE:
        return replace(nominal, mdot_sec=0.0)
    if mode is Mode.DISCHARGE:
        return replace(nominal, mdot_ref=0.0)
    return replace(nominal, mdot_ref=0.0, mdot_sec=0.0)


def build_canonical_scenarios(config: "RunConfig") -> dict[str, Scenario]:
    """The three benchmark scenarios at the nominal operating point."""
    nominal = config.nominal_inputs
    full_charge = Scenario(
        name="full-charge",
        phases=(ScenarioPhase(Mode.CHARGE, FULL_CHARGE_DURATION,
                              phase_inputs(Mode.CHARGE, nominal)),),
        initial="fully-discharged",
    )
    full_discharge = Scenario(
        name="full-discharge",
        phases=(ScenarioPhase(Mode.DISCHARGE, FULL_DISCHARGE_DURATION,
                              phase_inputs(Mode.DISCHARGE, nominal)),),
        initial="fully-charged",
    )
    partial = Scenario(
        name="partial",
        phases=tuple(
            ScenarioPhase(Mode(mode), duration, phase_inputs(Mode(mode), nominal))
            for mode, duration in PARTIAL_SEQUENCE
        ),
        initial="fully-discharged",
    )
    return {
        "full-charge": full_charge,
        "full-discharge": full_discharge,
        "partial": partial,
    }


@dataclass
class ComparisonReport:
    scenario_name: str
    candidate_dt: float
    instants: np.ndarray        # s, candidate output instants
    errors_pct: np.ndarray      # absolute charge-ratio error, percentage points
    max_error_pct: float
    mean_error_pct: float
    speedup: float              # oracle wall-clock / candidate wall-clock
    oracle_steps: int
    candidate_steps: int


def compare_runs(oracle: RunReport, candidate: RunReport) -> ComparisonReport:
    """Charge-ratio error series of a candidate run against the oracle.

    The candidate's output instants must all lie on the oracle's finer
    grid; errors are evaluated pointwise at those instants.
    """
    if oracle.scenario_name != candidate.scenario_name:
        raise ValueError(
            f"cannot compare different scenarios: {oracle.scenario_name!r} "
            f"vs {candidate.scenario_name!r}"
        )
    oracle_clocks = np.array([r.clock for r in oracle.records])
    oracle_ratios = np.array([r.charge_ratio for r in oracle.records])
    cand_clocks = np.array([r.clock for r in candidate.records])
    cand_ratios = np.array([r.charge_ratio for r in candidate.records])

    tol = 1e-6 * max(1.0, candidate.dt)
    idx = np.searchsorted(oracle_clocks, cand_clocks - tol)
    if np.any(idx >= len(oracle_clocks)) or np.any(
            np.abs(oracle_clocks[idx] - cand_clocks) > tol):
        raise ValueError("candidate output instants are not a subset of the oracle's")

    errors = np.abs(cand_ratios - oracle_ratios[idx]) * 100.0
    return ComparisonReport(
        scenario_name=oracle.scenario_name,
        candidate_dt=candidate.dt,
        instants=cand_clocks,
        errors_pct=errors,
        max_error_pct=float(np.max(errors)),
        mean_error_pct=float(np.mean(errors)),
        speedup=oracle.wall_time_s / candidate.wall_time_s,
        oracle_steps=oracle.step_count,
        candidate_steps=candidate.step_count,
    )


@dataclass(frozen=True)
class BenchRow:
    model: str
    dt: float
    median_seconds: float
    speedup: float


def benchmark(
    scenario: Scenario,
    dt_list: Sequence[float],
    repetitions: int,
    config: "RunConfig",
) -> list[BenchRow]:
    """Median wall-clock times of both models over a scenario.

    The reference model runs at its configured step; each accelerated step
    size in `dt_list` gets its own row with speedup relative to the
    reference. Runs execute serially to keep timings clean.
    """
    from .accelerated_model import run_accelerated

    if repetitions < 3:
        raise ValueError("benchmark needs at least 3 repetitions")

    def median_time(runner, dt: float) -> float:
        times = []
        for _ in range(repetitions):
            initial = initial_tank_state(scenario.initial, config)
            report = runner(initial, scenario, dt, config)
            times.append(report.wall_time_s)
        return statistics.median(times)

    ref_dt = config.dt_reference
    ref_median = median_time(run_reference, ref_dt)
    rows = [BenchRow(model="reference", dt=ref_dt, median_seconds=ref_median, speedup=1.0)]
    for dt in dt_list:
        med = median_time(run_accelerated, dt)
        rows.append(BenchRow(model="accelerated", dt=dt,
                             median_seconds=med, speedup=ref_median / med))
    return rows


def timed(fn, *args, **kwargs):
    """(result, elapsed seconds) of a call; used for one-off speed checks."""
    start = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - start
