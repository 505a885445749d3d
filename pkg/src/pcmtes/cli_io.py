"""Configuration parsing, result serialization, and the command-line surface.

The run configuration is a sectioned YAML file; every value in the shipped
default carries a provenance comment (material datasheet, design value, or
calibration). Loading validates all module-level invariants and rejects
unknown keys, so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import yaml

from .capsule_geometry import CapsuleGeometry, capsule_mass
from .circuits import BoundaryInputs, PipeGeometry
from .errors import ConfigError
from .properties import LiquidProperties, PcmProperties, RefrigerantProperties
from .reference_model import RunReport, run_reference
from .scenario_analysis import (
    Mode,
    Scenario,
    ScenarioPhase,
    benchmark,
    build_canonical_scenarios,
    compare_runs,
    initial_tank_state,
    phase_inputs,
)

ARTIFACT_VERSION = "0.1.0"
CONFIG_ENV_VAR = "PCMTES_CONFIG"

# section -> {key: required}
_SCHEMA: dict[str, dict[str, bool]] = {
    "pcm": {
        "cp_solid": True, "cp_liquid": True, "h_fusion": True, "T_lat": True,
        "k_solid": True, "k_liquid": True, "rho_solid": True, "rho_liquid": True,
        "h_lat_minus": False,
    },
    "refrigerant": {
        "pressure": True, "T_sat": True, "h_sat_liquid": True,
        "h_sat_vapour": True, "h_vaporization": True, "cp_vapour": True,
    },
    "intermediate_fluid": {"cp": True, "rho": True, "k": True},
    "secondary_fluid": {"cp": True, "rho": True, "k": True},
    "capsule": {
        "n_lay": True, "r_max": True, "r_min": True, "shell_thickness": True,
        "k_shell": True, "h_conv_ext": True, "k_liquid_melt_override": False,
    },
    "refrigerant_pipe": {
        "n_pipes": True, "length": True, "r_inner": True, "r_outer": True,
        "k_wall": True, "h_conv_int": True, "h_conv_int_vapour": True,
        "h_conv_ext": True,
    },
    "secondary_pipe": {
        "n_pipes": True, "length": True, "r_inner": True, "r_outer": True,
        "k_wall": True, "h_conv_int": True, "h_conv_ext": True,
    },
    "tank": {"m_int": True, "n_pcm": True},
    "nominal_inputs": {
        "mdot_ref": True, "h_ref_in": True, "T_ref_in": True,
        "mdot_sec": True, "T_sec_in": True,
    },
    "initial_conditions": {"T_int_discharged": True, "T_int_charged": True},
    "simulation": {"dt_reference": True, "allow_unstable_dt": False},
}

_DEFAULTS: dict[str, dict[str, Any]] = {
    "pcm": {"h_lat_minus": 0.0},
    "capsule": {"k_liquid_melt_override": None},
    "simulation": {"allow_unstable_dt": False},
}


@dataclass(frozen=True)
class RunConfig:
    pcm: PcmProperties              # k_liquid already replaced by the melt override
    refrigerant: RefrigerantProperties
    intermediate: LiquidProperties
    secondary: LiquidProperties
    capsule: CapsuleGeometry
    ref_pipe: PipeGeometry
    sec_pipe: PipeGeometry
    m_int: float                    # kg of intermediate fluid
    n_pcm: int                      # capsules in the tank
    nominal_inputs: BoundaryInputs
    T_int_discharged: float         # degC, canonical fully-discharged start
    T_int_charged: float            # degC, canonical fully-charged start
    dt_reference: float             # s
    allow_unstable_dt: bool
    raw: tuple                      # normalized (section, key, value) triples

    @property
    def n_ref(self) -> int:
        return self.ref_pipe.n_pipes

    @property
    def n_sec(self) -> int:
        return self.sec_pipe.n_pipes

    @property
    def n_lay(self) -> int:
        return self.capsule.n_lay

    def config_hash(self) -> str:
        return hashlib.sha256(serialize_config(self).encode()).hexdigest()[:12]


def default_config_path() -> Path:
    return Path(str(resources.files("pcmtes").joinpath("data/default_config.yaml")))


def _normalize(data: dict) -> dict[str, dict[str, Any]]:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping of sections")
    norm: dict[str, dict[str, Any]] = {}
    for section, keys in _SCHEMA.items():
        if section not in data:
            raise ConfigError(f"missing configuration section: {section}")
        body = data[section]
        if not isinstance(body, dict):
            raise ConfigError(f"section {section} must be a mapping")
        unknown = set(body) - set(keys)
        if unknown:
            raise ConfigError(f"unknown key(s) in section {section}: {sorted(unknown)}")
        missing = [k for k, required in keys.items() if required and k not in body]
        if missing:
            raise ConfigError(
                f"missing mandatory field(s): {', '.join(f'{section}.{m}' for m in missing)}"
            )
        merged = dict(_DEFAULTS.get(section, {}))
        merged.update(body)
        norm[section] = merged
    unknown_sections = set(data) - set(_SCHEMA)
    if unknown_sections:
        raise ConfigError(f"unknown configuration section(s): {sorted(unknown_sections)}")
    return norm


def config_from_mapping(data: dict) -> RunConfig:
    """Validate a parsed configuration mapping and build the typed records."""
    norm = _normalize(data)
    try:
        pcm_raw = norm["pcm"]
        k_liquid = pcm_raw["k_liquid"]
        override = norm["capsule"]["k_liquid_melt_override"]
        if override is not None:
            k_liquid = float(override)
        pcm = PcmProperties(
            cp_solid=float(pcm_raw["cp_solid"]),
            cp_liquid=float(pcm_raw["cp_liquid"]),
            h_fusion=float(pcm_raw["h_fusion"]),
            T_lat=float(pcm_raw["T_lat"]),
            k_solid=float(pcm_raw["k_solid"]),
            k_liquid=float(k_liquid),
            rho_solid=float(pcm_raw["rho_solid"]),
            rho_liquid=float(pcm_raw["rho_liquid"]),
            h_lat_minus=float(pcm_raw["h_lat_minus"]),
        )
        r = norm["refrigerant"]
        refrigerant = RefrigerantProperties(
            pressure=float(r["pressure"]),
            T_sat=float(r["T_sat"]),
            h_sat_liquid=float(r["h_sat_liquid"]),
            h_sat_vapour=float(r["h_sat_vapour"]),
            h_vaporization=float(r["h_vaporization"]),
            cp_vapour=float(r["cp_vapour"]),
        )
        intermediate = LiquidProperties(**{k: float(v) for k, v in norm["intermediate_fluid"].items()})
        secondary = LiquidProperties(**{k: float(v) for k, v in norm["secondary_fluid"].items()})

        c = norm["capsule"]
        m_capsule = capsule_mass(pcm, float(c["r_max"]), float(c["r_min"]))
        capsule = CapsuleGeometry(
            n_lay=int(c["n_lay"]),
            m_capsule=m_capsule,
            r_max=float(c["r_max"]),
            r_min=float(c["r_min"]),
            shell_thickness=float(c["shell_thickness"]),
            k_shell=float(c["k_shell"]),
            h_conv_ext=float(c["h_conv_ext"]),
        )

        rp = norm["refrigerant_pipe"]
        ref_pipe = PipeGeometry(
            n_pipes=int(rp["n_pipes"]), length=float(rp["length"]),
            r_inner=float(rp["r_inner"]), r_outer=float(rp["r_outer"]),
            k_wall=float(rp["k_wall"]), h_conv_int=float(rp["h_conv_int"]),
            h_conv_ext=float(rp["h_conv_ext"]),
            h_conv_int_vapour=float(rp["h_conv_int_vapour"]),
        )
        sp = norm["secondary_pipe"]
        sec_pipe = PipeGeometry(
            n_pipes=int(sp["n_pipes"]), length=float(sp["length"]),
            r_inner=float(sp["r_inner"]), r_outer=float(sp["r_outer"]),
            k_wall=float(sp["k_wall"]), h_conv_int=float(sp["h_conv_int"]),
            h_conv_ext=float(sp["h_conv_ext"]),
        )

        b = norm["nominal_inputs"]
        nominal = BoundaryInputs(
            mdot_ref=float(b["mdot_ref"]), h_ref_in=float(b["h_ref_in"]),
            T_ref_in=float(b["T_ref_in"]), mdot_sec=float(b["mdot_sec"]),
            T_sec_in=float(b["T_sec_in"]),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    if abs(nominal.T_ref_in - refrigerant.T_sat) > 1e-6:
        raise ConfigError(
            "nominal_inputs.T_ref_in must equal refrigerant.T_sat "
            f"({nominal.T_ref_in} vs {refrigerant.T_sat})"
        )
    if not (refrigerant.h_sat_liquid <= nominal.h_ref_in <= refrigerant.h_sat_vapour):
        raise ConfigError(
            "nominal_inputs.h_ref_in must lie inside the refrigerant saturation "
            f"dome [{refrigerant.h_sat_liquid}, {refrigerant.h_sat_vapour}]"
        )

    tank = norm["tank"]
    m_int = float(tank["m_int"])
    n_pcm = int(tank["n_pcm"])
    if m_int <= 0.0 or n_pcm < 1:
        raise ConfigError("tank.m_int must be positive and tank.n_pcm at least 1")
    sim = norm["simulation"]
    dt_reference = float(sim["dt_reference"])
    if dt_reference <= 0.0:
        raise ConfigError("simulation.dt_reference must be positive")
    init = norm["initial_conditions"]

    raw = tuple(sorted(
        (section, key, norm[section][key])
        for section in norm for key in norm[section]
    ))
    return RunConfig(
        pcm=pcm,
        refrigerant=refrigerant,
        intermediate=intermediate,
        secondary=secondary,
        capsule=capsule,
        ref_pipe=ref_pipe,
        sec_pipe=sec_pipe,
        m_int=m_int,
        n_pcm=n_pcm,
        nominal_inputs=nominal,
        T_int_discharged=float(init["T_int_discharged"]),
        T_int_charged=float(init["T_int_charged"]),
        dt_reference=dt_reference,
        allow_unstable_dt=bool(sim["allow_unstable_dt"]),
        raw=raw,
    )


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Load and validate a run configuration.

    Resolution order: explicit path, the PCMTES_CONFIG environment
    variable, then the packaged default.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or default_config_path()
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed configuration file {path}: {exc}") from exc
    return config_from_mapping(data)


def serialize_config(config: RunConfig) -> str:
    """Canonical YAML text of a configuration (round-trips through load)."""
    data: dict[str, dict[str, Any]] = {}
    for section, key, value in config.raw:
        data.setdefault(section, {})[key] = value
    return yaml.safe_dump(data, sort_keys=True)


def with_layers(config: RunConfig, n_lay: int) -> RunConfig:
    """Copy of a configuration with a different layer count."""
    data: dict[str, dict[str, Any]] = {}
    for section, key, value in config.raw:
        data.setdefault(section, {})[key] = value
    data["capsule"]["n_lay"] = n_lay
    return config_from_mapping(data)


# ---------------------------------------------------------------------------
# Result writers

def _meta_line(report: RunReport, config: RunConfig) -> str:
    return (f"# pcmtes={ARTIFACT_VERSION} config={config.config_hash()} "
            f"model={report.model} dt={report.dt!r} scenario={report.scenario_name}")


def _record_header(n_lay: int) -> list[str]:
    cols = ["clock", "T_int", "q_ref_per_pipe", "q_sec_per_pipe",
            "q_pcm_per_capsule", "charge_ratio"]
    cols += [f"h_{k}" for k in range(1, n_lay + 1)]
    cols += [f"T_{k}" for k in range(1, n_lay + 1)]
    cols += ["sub_interval_durations", "sub_interval_layers"]
    return cols


def write_records_csv(report: RunReport, config: RunConfig, path: Path) -> None:
    n_lay = len(report.records[0].layer_enthalpies) if report.records else config.n_lay
    lines = [_meta_line(report, config), ",".join(_record_header(n_lay))]
    for rec in report.records:
        layers = ""
        if rec.trace is not None:
            layers = ";".join("-" if e.active_layer is None else str(e.active_layer)
                              for e in rec.trace.entries)
        row = [repr(rec.clock), repr(rec.T_int), repr(rec.q_ref_per_pipe),
               repr(rec.q_sec_per_pipe), repr(rec.q_pcm_per_capsule),
               repr(rec.charge_ratio)]
        row += [repr(h) for h in rec.layer_enthalpies]
        row += [repr(t) for t in rec.layer_temperatures]
        row.append(";".join(repr(d) for d in rec.sub_intervals))
        row.append(layers)
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _record_to_dict(rec) -> dict:
    out = {
        "clock": rec.clock,
        "T_int": rec.T_int,
        "q_ref_per_pipe": rec.q_ref_per_pipe,
        "q_sec_per_pipe": rec.q_sec_per_pipe,
        "q_pcm_per_capsule": rec.q_pcm_per_capsule,
        "charge_ratio": rec.charge_ratio,
        "layer_enthalpies": list(rec.layer_enthalpies),
        "layer_temperatures": list(rec.layer_temperatures),
        "sub_intervals": list(rec.sub_intervals),
    }
    if rec.trace is not None:
        out["trace"] = [
            {"duration": e.duration, "active_layer": e.active_layer,
             "q_pcm": e.q_pcm, "T_int_after": e.T_int_after}
            for e in rec.trace.entries
        ]
    if rec.flag is not None:
        out["flag"] = rec.flag
    return out


def write_records_json(report: RunReport, config: RunConfig, path: Path) -> None:
    doc = {
        "meta": {
            "artifact_version": ARTIFACT_VERSION,
            "config_hash": config.config_hash(),
            "model": report.model,
            "dt": report.dt,
            "scenario": report.scenario_name,
            "step_count": report.step_count,
            "sub_interval_count": report.sub_interval_count,
        },
        "records": [_record_to_dict(r) for r in report.records],
    }
    path.write_text(json.dumps(doc, indent=1) + "\n")


def _write_table(rows: list[dict], header: list[str], path: Path, fmt: str,
                 meta: str) -> None:
    if fmt == "json":
        path.write_text(json.dumps({"meta": meta, "rows": rows}, indent=1) + "\n")
        return
    lines = [meta, ",".join(header)]
    for row in rows:
        lines.append(",".join(str(row[col]) for col in header))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Scenario resolution

def load_scenario_file(path: Path, config: RunConfig) -> Scenario:
    """Read a scenario description (name, initial, phase list) from YAML."""
    data = yaml.safe_load(path.read_text())
    if not isinstance(data, dict) or "phases" not in data:
        raise ConfigError(f"scenario file {path} must define a phase list")
    phases = []
    for entry in data["phases"]:
        try:
            mode = Mode(entry["mode"])
            duration = float(entry["duration"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad phase entry in {path}: {entry}") from exc
        overrides = {k: float(v) for k, v in entry.items()
                     if k not in ("mode", "duration")}
        base = config.nominal_inputs
        if overrides:
            allowed = {"mdot_ref", "h_ref_in", "T_ref_in", "mdot_sec", "T_sec_in"}
            unknown = set(overrides) - allowed
            if unknown:
                raise ConfigError(f"unknown phase input(s) {sorted(unknown)} in {path}")
            from dataclasses import replace
            base = replace(base, **overrides)
        phases.append(ScenarioPhase(mode, duration, phase_inputs(mode, base)))
    return Scenario(
        name=str(data.get("name", path.stem)),
        phases=tuple(phases),
        initial=str(data.get("initial", "fully-discharged")),
    )


def resolve_scenario(token: str, config: RunConfig) -> Scenario:
    canonical = build_canonical_scenarios(config)
    if token in canonical:
        return canonical[token]
    path = Path(token)
    if path.exists():
        return load_scenario_file(path, config)
    raise ConfigError(
        f"unknown scenario {token!r}: expected one of {sorted(canonical)} or a file path"
    )


# ---------------------------------------------------------------------------
# Commands

def cli_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.layers is not None:
        config = with_layers(config, args.layers)
    scenario = resolve_scenario(args.scenario, config)
    initial = initial_tank_state(scenario.initial, config)

    if args.model == "reference":
        report = run_reference(initial, scenario, args.dt, config)
    else:
        from .accelerated_model import run_accelerated
        report = run_accelerated(initial, scenario, args.dt, config)

    out = Path(args.out)
    if args.format == "csv":
        write_records_csv(report, config, out)
    else:
        write_records_json(report, config, out)
    final_ratio = report.records[-1].charge_ratio if report.records else float("nan")
    print(f"{report.model} dt={report.dt} s: {report.step_count} steps, "
          f"{report.sub_interval_count} sub-intervals, final charge ratio "
          f"{final_ratio:.4f}, wall {report.wall_time_s:.3f} s -> {out}")
    return 0


def cli_compare(args: argparse.Namespace) -> int:
    from .accelerated_model import run_accelerated

    config = load_config(args.config)
    if args.layers is not None:
        config = with_layers(config, args.layers)
    if args.scenario == "all":
        scenarios = list(build_canonical_scenarios(config).values())
    else:
        scenarios = [resolve_scenario(args.scenario, config)]
    dt_list = _parse_dt_list(args.dt_list)

    rows = []
    for scenario in scenarios:
        oracle = run_reference(initial_tank_state(scenario.initial, config),
                               scenario, config.dt_reference, config)
        for dt in dt_list:
            candidate = run_accelerated(initial_tank_state(scenario.initial, config),
                                        scenario, dt, config)
            cmp = compare_runs(oracle, candidate)
            rows.append({
                "scenario": scenario.name,
                "dt": dt,
                "max_error_pct": f"{cmp.max_error_pct:.4f}",
                "mean_error_pct": f"{cmp.mean_error_pct:.4f}",
                "speedup": f"{cmp.speedup:.2f}",
                "oracle_steps": cmp.oracle_steps,
                "candidate_steps": cmp.candidate_steps,
            })
            print(f"{scenario.name} dt={dt}: max {cmp.max_error_pct:.3f}%, "
                  f"mean {cmp.mean_error_pct:.3f}%, speedup {cmp.speedup:.1f}x")

    header = ["scenario", "dt", "max_error_pct", "mean_error_pct", "speedup",
              "oracle_steps", "candidate_steps"]
    meta = f"# pcmtes={ARTIFACT_VERSION} config={config.config_hash()} table=compare"
    _write_table(rows, header, Path(args.out), args.format, meta)
    return 0


def cli_bench(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.layers is not None:
        config = with_layers(config, args.layers)
    scenario = resolve_scenario(args.scenario, config)
    dt_list = _parse_dt_list(args.dt_list)

    rows_raw = benchmark(scenario, dt_list, args.reps, config)
    rows = [{
        "model": row.model,
        "dt": row.dt,
        "median_seconds": f"{row.median_seconds:.6f}",
        "speedup": f"{row.speedup:.2f}",
    } for row in rows_raw]
    for row in rows:
        print(f"{row['model']:>11} dt={row['dt']}: {row['median_seconds']} s "
              f"(speedup {row['speedup']}x)")
    header = ["model", "dt", "median_seconds", "speedup"]
    meta = (f"# pcmtes={ARTIFACT_VERSION} config={config.config_hash()} "
            f"table=bench scenario={scenario.name} reps={args.reps}")
    _write_table(rows, header, Path(args.out), args.format, meta)
    return 0


def _parse_dt_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad dt list: {text!r}") from None
    if not values or any(v <= 0.0 or not math.isfinite(v) for v in values):
        raise ConfigError(f"dt list entries must be positive numbers: {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcmtes",
        description="PCM cold-storage tank simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None,
                       help=f"config file (default: ${CONFIG_ENV_VAR} or packaged default)")
        p.add_argument("--layers", type=int, default=None,
                       help="override the capsule layer count")
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    sim = sub.add_parser("simulate", help="run one model over one scenario")
    add_common(sim)
    sim.add_argument("--model", choices=("reference", "accelerated"), required=True)
    sim.add_argument("--dt", type=float, required=True, help="major step size, s")
    sim.add_argument("--scenario", required=True,
                     help="full-charge | full-discharge | partial | scenario file")
    sim.set_defaults(func=cli_simulate)

    cmp_p = sub.add_parser("compare", help="accelerated vs reference error table")
    add_common(cmp_p)
    cmp_p.add_argument("--scenario", required=True,
                       help="canonical name, 'all', or a scenario file")
    cmp_p.add_argument("--dt-list", required=True, help="comma-separated step sizes, s")
    cmp_p.set_defaults(func=cli_compare)

    bench_p = sub.add_parser("bench", help="wall-clock timing table")
    add_common(bench_p)
    bench_p.add_argument("--scenario", required=True)
    bench_p.add_argument("--dt-list", required=True)
    bench_p.add_argument("--reps", type=int, default=5,
                         help="timing repetitions (median is reported, min 3)")
    bench_p.set_defaults(func=cli_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "dt", None) is not None and args.dt <= 0.0:
        parser.error("--dt must be positive")
    if getattr(args, "layers", None) is not None and args.layers < 1:
        parser.error("--layers must be at least 1")
    if getattr(args, "reps", None) is not None and args.reps < 3:
        parser.error("--reps must be at least 3")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
