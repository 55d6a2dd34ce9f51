"""Run configuration: TOML file, CLI overrides, and block validation.

One config file reproduces a whole run: rod, finger calibration, hand mount
convention, solver tolerances, field grid, sweep lattice, and output
options.  Angles are degrees and lengths are millimetres at this boundary;
radians are internal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .elastica import GridSpec
from .errors import ConfigError
from .finger import DEFAULT_FINGER2_HEADING_DEG, FingerSpec, HandConfig, PressureRamp
from .grasp import HandLattice, Thresholds
from .rod import RodSpec, SolverConfig

_DEFAULTS: dict = {
    "rod": {"length_mm": 125.0, "rigidity": 10.0, "segments": 100},
    "finger": {
        "arc_length_mm": 130.0,
        "pressure_gain": 0.13,
        "curvature_offset": 0.0,
        "max_pressure_mpa": 0.3,
    },
    "hand": {
        "finger2_heading_deg": DEFAULT_FINGER2_HEADING_DEG,
        "inter_finger_angle_deg": 90.0,
        "delta_mm": 0.0,
    },
    "solver": {
        "tol_c": 1e-8,
        "tol_g": 1e-6,
        "max_iter": 200,
        "continuation_steps": 20,
        "seed": 0,
        "max_failure_fraction": 0.1,
    },
    "grid": {
        "x_min_mm": -125.0,
        "x_max_mm": 125.0,
        "nx": 41,
        "z_min_mm": 0.0,
        "z_max_mm": 125.0,
        "nz": 21,
    },
    "sweep": {
        "x_mm": [30.0, 90.0, 10.0],
        "z_mm": [116.0, 135.0, 1.0],
        "theta_deg": [0.0, 12.0, 1.0],
        "mu_available": 0.6,
        "ramp_start_mpa": 0.0,
        "ramp_end_mpa": 0.3,
        "ramp_samples": 80,
        "engagement_tol_mm": 2.0,
        "dwell_fraction": 0.40,
        "flip_angle_threshold_deg": 15.0,
        "ke_budget": "inf",
    },
    "output": {"precision": 9},
}


@dataclass
class RunConfig:
    """Validated, resolved configuration for one CLI run."""

    rod: RodSpec
    finger: FingerSpec
    hand_template: HandConfig
    solver: SolverConfig
    grid: GridSpec
    lattice: HandLattice
    ramp: PressureRamp
    thresholds: Thresholds
    mu_available: float
    max_failure_fraction: float
    precision: int
    raw: dict = field(repr=False, default_factory=dict)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    merged = {k: (v.copy() if isinstance(v, dict) else v) for k, v in base.items()}
    for key, value in override.items():
        if key not in merged:
            raise ConfigError(f"unknown config key: {path}{key}")
        if isinstance(merged[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{path}{key} must be a table")
            merged[key] = _merge(merged[key], value, f"{path}{key}.")
        else:
            merged[key] = value
    return merged


def _parse_scalar(text: str):
    lowered = text.strip()
    if lowered.lower() in ("true", "false"):
        return lowered.lower() == "true"
    if lowered.lower() in ("inf", "+inf"):
        return "inf"
    try:
        return int(lowered)
    except ValueError:
        pass
    try:
        return float(lowered)
    except ValueError:
        return lowered


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``--set section.key=value`` pairs onto the raw config dict."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value: {item!r}")
        dotted, text = item.split("=", 1)
        parts = dotted.strip().split(".")
        if len(parts) != 2:
            raise ConfigError(f"override key must be section.key: {dotted!r}")
        section, key = parts
        if section not in raw or key not in raw[section]:
            raise ConfigError(f"unknown config key: {section}.{key}")
        if isinstance(raw[section][key], list):
            try:
                raw[section][key] = [float(v) for v in text.split(",")]
            except ValueError as exc:
                raise ConfigError(f"cannot parse list override {text!r}") from exc
        else:
            raw[section][key] = _parse_scalar(text)
    return raw


def load_config(
    path: str | Path | None,
    overrides: list[str] | None = None,
    nondimensional: bool = False,
) -> RunConfig:
    """Read the TOML file (or defaults), apply overrides, validate blocks."""
    raw = _DEFAULTS
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            with open(p, "rb") as fh:
                user = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config {p}: {exc}") from exc
        raw = _merge(_DEFAULTS, user)
    else:
        raw = _merge(_DEFAULTS, {})
    if nondimensional:
        raw["rod"]["length_mm"] = 1.0
        raw["rod"]["rigidity"] = 1.0
        raw["grid"].update(
            {"x_min_mm": -1.0, "x_max_mm": 1.0, "z_min_mm": 0.0, "z_max_mm": 1.0}
        )
    if overrides:
        raw = apply_overrides(raw, overrides)
    return _validate(raw)


def _validate(raw: dict) -> RunConfig:
    try:
        rod = RodSpec(
            length=float(raw["rod"]["length_mm"]),
            rigidity=float(raw["rod"]["rigidity"]),
            segments=int(raw["rod"]["segments"]),
        )
        finger = FingerSpec(
            arc_length=float(raw["finger"]["arc_length_mm"]),
            pressure_gain=float(raw["finger"]["pressure_gain"]),
            curvature_offset=float(raw["finger"]["curvature_offset"]),
            max_pressure=float(raw["finger"]["max_pressure_mpa"]),
        )
        hand = HandConfig(
            x=0.0,
            z=0.0,
            delta=float(raw["hand"]["delta_mm"]),
            inter_finger_angle_deg=float(raw["hand"]["inter_finger_angle_deg"]),
            finger2_heading_deg=float(raw["hand"]["finger2_heading_deg"]),
        )
        solver = SolverConfig(
            tol_c=float(raw["solver"]["tol_c"]),
            tol_g=float(raw["solver"]["tol_g"]),
            max_iter=int(raw["solver"]["max_iter"]),
            continuation_steps=int(raw["solver"]["continuation_steps"]),
            restart_seed=int(raw["solver"]["seed"]),
        )
        grid = GridSpec(
            x_min=float(raw["grid"]["x_min_mm"]),
            x_max=float(raw["grid"]["x_max_mm"]),
            nx=int(raw["grid"]["nx"]),
            z_min=float(raw["grid"]["z_min_mm"]),
            z_max=float(raw["grid"]["z_max_mm"]),
            nz=int(raw["grid"]["nz"]),
        )
        sweep_raw = raw["sweep"]
        lattice = HandLattice.from_ranges(
            tuple(sweep_raw["x_mm"]), tuple(sweep_raw["z_mm"]), tuple(sweep_raw["theta_deg"])
        )
        ramp = PressureRamp.linear(
            float(sweep_raw["ramp_start_mpa"]),
            float(sweep_raw["ramp_end_mpa"]),
            int(sweep_raw["ramp_samples"]),
        )
        budget = sweep_raw["ke_budget"]
        ke_budget = math.inf if budget == "inf" else float(budget)
        thresholds = Thresholds(
            engagement_tol=float(sweep_raw["engagement_tol_mm"]),
            dwell_fraction=float(sweep_raw["dwell_fraction"]),
            flip_angle_threshold_deg=float(sweep_raw["flip_angle_threshold_deg"]),
            ke_budget=ke_budget,
        )
        mu_available = float(sweep_raw["mu_available"])
        if mu_available < 0:
            raise ValueError("mu_available must be nonnegative")
        max_fail = float(raw["solver"]["max_failure_fraction"])
        if not 0 <= max_fail <= 1:
            raise ValueError("max_failure_fraction must be in [0, 1]")
        precision = int(raw["output"]["precision"])
        if precision < 1:
            raise ValueError("precision must be >= 1")
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    if ramp.samples.max() > finger.max_pressure + 1e-12:
        raise ConfigError("ramp exceeds the finger's max pressure")
    return RunConfig(
        rod=rod,
        finger=finger,
        hand_template=hand,
        solver=solver,
        grid=grid,
        lattice=lattice,
        ramp=ramp,
        thresholds=thresholds,
        mu_available=mu_available,
        max_failure_fraction=max_fail,
        precision=precision,
        raw=raw,
    )
