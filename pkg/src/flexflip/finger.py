"""Constant-curvature soft finger kinematics and nominal fingertip paths.

The finger is a uniform circular arc whose curvature is affine in the
supply pressure.  Poses carry a handedness flag because the two fingers of
the hand are a mirror pair curling toward the shared palm: in a finger's
local frame the tip always curls toward +y, and ``curl`` says how that local
+y is embedded in the world.

Object-frame conventions (documented, not hardware-calibrated):
  * origin at contact #1, +x toward the object tip, +z up off the table;
  * the hand approaches from beyond the object tip: finger #2's straight
    (zero-pressure) tip sits at ``(tip_x + x, tip_z + z)``, horizontal
    offset x outward of the tip and vertical offset z above it, and the
    pressurized sweep descends onto the table and drags base-ward until it
    hooks the tip;
  * the wrist angle theta pivots the whole hand clockwise about the
    zero-pressure tip point, so that point is invariant under theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Zero-pressure heading of finger #2 at theta = 0, degrees from +x.
# Pointing up-and-right makes the pressurized tip sweep descend onto the
# table and drag toward the rod base before lifting off, which is the motion
# that flexes the rod.
DEFAULT_FINGER2_HEADING_DEG = 35.0


@dataclass(frozen=True)
class FingerSpec:
    """Arc-length (mm), curvature-pressure gain (1/(mm*MPa)), offset (1/mm), cap (MPa).

    Defaults are the demo calibration used by tests and sample configs; the
    real finger's values are config inputs.
    """

    arc_length: float = 130.0
    pressure_gain: float = 0.13
    curvature_offset: float = 0.0
    max_pressure: float = 0.3

    def __post_init__(self):
        if not self.arc_length > 0:
            raise ValueError("finger arc length must be positive")
        if not self.max_pressure > 0:
            raise ValueError("max pressure must be positive")
        lo = self.curvature_offset
        hi = self.pressure_gain * self.max_pressure + self.curvature_offset
        if lo < 0 or hi < 0:
            raise ValueError("curvature must stay nonnegative over the pressure range")


@dataclass(frozen=True)
class HandConfig:
    """Hand placement relative to the object tip (x, z in mm; angles in deg).

    ``delta`` is the offset between the object tip and the finger #2 contact
    point; it may also be derived from the touchdown geometry downstream.
    """

    x: float
    z: float
    theta_deg: float = 0.0
    delta: float = 0.0
    inter_finger_angle_deg: float = 90.0
    finger2_heading_deg: float = DEFAULT_FINGER2_HEADING_DEG

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")


@dataclass(frozen=True)
class PressureRamp:
    """Monotone nondecreasing pressure samples (MPa)."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", arr)
        if arr.size < 2:
            raise ValueError("ramp needs at least 2 samples")
        if np.any(np.diff(arr) < 0):
            raise ValueError("ramp must be nondecreasing")
        if arr[0] < 0:
            raise ValueError("pressures must be nonnegative")

    @classmethod
    def linear(cls, start: float, end: float, n: int) -> "PressureRamp":
        return cls(np.linspace(start, end, n))


@dataclass(frozen=True)
class Pose:
    """Planar pose with handedness: position (mm), heading (rad), curl sign.

    ``curl=+1`` means the finger's palm side is the +y of the frame obtained
    by rotating world axes to the heading; ``curl=-1`` mirrors it.
    """

    position: np.ndarray
    heading: float
    curl: int = 1

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.curl not in (-1, 1):
            raise ValueError("curl must be +1 or -1")


@dataclass(frozen=True)
class FingertipPath:
    """Fingertip positions (mm) in the object frame along a pressure ramp.

    ``raw_z`` is the unprojected tip height; ``clamped`` is true exactly
    where it is negative and the point was projected onto the table.
    """

    points: np.ndarray
    clamped: np.ndarray
    pressures: np.ndarray
    raw_z: np.ndarray

    def __post_init__(self):
        if np.any(self.points[:, 1] < 0):
            raise ValueError("path points must satisfy z >= 0")


def curvature_from_pressure(finger: FingerSpec, pressure: float) -> float:
    """Arc curvature (1/mm) at a supply pressure; affine calibration."""
    if pressure < 0 or pressure > finger.max_pressure:
        raise ValueError(
            f"pressure {pressure} outside [0, {finger.max_pressure}] MPa"
        )
    return finger.pressure_gain * pressure + finger.curvature_offset


def _tip_offset(arc_length: float, kappa: float) -> tuple[float, float]:
    """Tip of a uniform arc in its own frame (tangent along +x, curl to +y)."""
    u = kappa * arc_length
    if abs(u) < 1e-6:
        # series switch: sin(u)/kappa and (1-cos(u))/kappa are 0/0 at kappa=0
        x = arc_length * (1.0 - u * u / 6.0)
        y = arc_length * (u / 2.0) * (1.0 - u * u / 12.0)
        return x, y
    return math.sin(u) / kappa, (1.0 - math.cos(u)) / kappa


def fingertip_position(finger: FingerSpec, kappa: float, base_pose: Pose) -> np.ndarray:
    """World position (mm) of the fingertip at curvature ``kappa``."""
    if not math.isfinite(kappa):
        raise ValueError("curvature must be finite")
    x, y = _tip_offset(finger.arc_length, kappa)
    y *= base_pose.curl
    ch, sh = math.cos(base_pose.heading), math.sin(base_pose.heading)
    return base_pose.position + np.array([ch * x - sh * y, sh * x + ch * y])


def hand_to_base_poses(
    cfg: HandConfig, finger: FingerSpec, tip=(0.0, 0.0)
) -> tuple[Pose, Pose]:
    """Base poses of fingers #1 and #2 in the object frame.

    ``tip`` is the object-tip position in that frame (callers pass (L, 0)).
    Finger #2 is mirror-mounted (curl -1) so it curls toward the palm it
    shares with finger #1; the two base tangents differ by the mount angle.
    Positive wrist angle pivots the hand clockwise about the zero-pressure
    tip of finger #2, which stays pinned at (tip_x + x, tip_z + z).
    """
    tip = np.asarray(tip, dtype=float)
    pin = tip + np.array([cfg.x, cfg.z])
    heading2 = math.radians(cfg.finger2_heading_deg - cfg.theta_deg)
    heading1 = heading2 + math.radians(cfg.inter_finger_angle_deg)
    base = pin - finger.arc_length * np.array([math.cos(heading2), math.sin(heading2)])
    return Pose(base, heading1, curl=1), Pose(base, heading2, curl=-1)


def nominal_tip_path(
    finger: FingerSpec, cfg: HandConfig, ramp: PressureRamp, tip=(0.0, 0.0)
) -> FingertipPath:
    """Fingertip trace along the ramp, with the tabletop constraint applied.

    Points whose unconstrained position falls below the table are projected
    to z = 0 and flagged clamped, producing the flat section of the path.
    """
    _, pose2 = hand_to_base_poses(cfg, finger, tip)
    pts = np.empty((ramp.samples.size, 2))
    raw_z = np.empty(ramp.samples.size)
    clamped = np.zeros(ramp.samples.size, dtype=bool)
    for i, pressure in enumerate(ramp.samples):
        kappa = curvature_from_pressure(finger, pressure)
        pts[i] = fingertip_position(finger, kappa, pose2)
        raw_z[i] = pts[i, 1]
        if pts[i, 1] < 0.0:
            pts[i, 1] = 0.0
            clamped[i] = True
    return FingertipPath(points=pts, clamped=clamped, pressures=ramp.samples.copy(),
                         raw_z=raw_z)
