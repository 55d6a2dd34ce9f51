"""Quasistatic planar simulator for flex-and-flip grasp acquisition.

Core pieces:
  rod / elastica — constrained bending-energy minimization, contact forces,
                   friction lower bounds, and energy fields;
  finger         — constant-curvature soft-finger kinematics and nominal
                   fingertip paths under the tabletop constraint;
  grasp          — coupled flex-phase simulation, attempt classification,
                   hand-configuration sweeps, and the affine feasibility fit;
  cli            — CSV-producing command line (energy-field, friction-field,
                   finger-path, sweep, fit).
"""

__version__ = "0.1.0"

from .elastica import (
    EnergyField,
    GridSpec,
    compute_contact_force,
    compute_energy_field,
    energy_gradient_field,
    min_friction_coefficient,
    solve_min_energy_shape,
)
from .errors import (
    ConfigError,
    ContactInfeasible,
    DegenerateFit,
    FlexFlipError,
    NoSuccesses,
    UnconvergedSolution,
    UnreachableEndpoint,
)
from .finger import (
    FingerSpec,
    FingertipPath,
    HandConfig,
    Pose,
    PressureRamp,
    curvature_from_pressure,
    fingertip_position,
    hand_to_base_poses,
    nominal_tip_path,
)
from .grasp import (
    AffineFit,
    AttemptOutcome,
    FlexTrace,
    HandLattice,
    Label,
    SweepResult,
    Termination,
    Thresholds,
    classify_attempt,
    feasible_x_interval,
    fit_affine,
    flip_direction_check,
    separation_point,
    simulate_flex_phase,
    sweep,
)
from .oracle import penalty_min_energy
from .rod import ContactSolution, RodShape, RodSpec, SolverConfig, inflection_count

__all__ = [
    "AffineFit",
    "AttemptOutcome",
    "ConfigError",
    "ContactInfeasible",
    "ContactSolution",
    "DegenerateFit",
    "EnergyField",
    "FingerSpec",
    "FingertipPath",
    "FlexFlipError",
    "FlexTrace",
    "GridSpec",
    "HandConfig",
    "HandLattice",
    "Label",
    "NoSuccesses",
    "Pose",
    "PressureRamp",
    "RodShape",
    "RodSpec",
    "SolverConfig",
    "SweepResult",
    "Termination",
    "Thresholds",
    "UnconvergedSolution",
    "UnreachableEndpoint",
    "classify_attempt",
    "compute_contact_force",
    "compute_energy_field",
    "curvature_from_pressure",
    "energy_gradient_field",
    "feasible_x_interval",
    "fingertip_position",
    "fit_affine",
    "flip_direction_check",
    "hand_to_base_poses",
    "inflection_count",
    "min_friction_coefficient",
    "nominal_tip_path",
    "penalty_min_energy",
    "separation_point",
    "simulate_flex_phase",
    "solve_min_energy_shape",
    "sweep",
]
