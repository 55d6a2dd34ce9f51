"""Rod description and discretized shapes.

The rod is an inextensible planar elastic strip parameterized by the tangent
angle phi(s) at N+1 equally spaced nodes.  Node positions follow from the
lower-sum quadrature

    x_i = h * sum_{j<i} cos(phi_j),   z_i = h * sum_{j<i} sin(phi_j),

so arc length is preserved by construction and the free-end zero-moment
condition emerges exactly from stationarity (phi_N enters the bending energy
only).  Discrete curvature lives on segments: kappa_i = (phi_{i+1}-phi_i)/h.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL_C = 1e-8   # endpoint constraint tolerance, fraction of rod length
DEFAULT_TOL_G = 1e-6   # dimensionless stationarity tolerance


@dataclass(frozen=True)
class RodSpec:
    """Inextensible elastic rod: length (mm), bending stiffness (N*mm^2), node count."""

    length: float = 1.0
    rigidity: float = 1.0
    segments: int = 100

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"rod length must be positive, got {self.length}")
        if not self.rigidity > 0:
            raise ValueError(f"flexural rigidity must be positive, got {self.rigidity}")
        if self.segments < 8:
            raise ValueError(f"need at least 8 segments, got {self.segments}")

    @property
    def seg_len(self) -> float:
        return self.length / self.segments

    @classmethod
    def nondimensional(cls, segments: int = 100) -> "RodSpec":
        """Unit-length, unit-rigidity rod."""
        return cls(length=1.0, rigidity=1.0, segments=segments)


@dataclass(frozen=True)
class RodShape:
    """Discretized rod shape: node tangent angles (rad) and segment length (mm)."""

    tangent_angles: np.ndarray
    seg_len: float

    def __post_init__(self):
        phi = np.asarray(self.tangent_angles, dtype=float)
        object.__setattr__(self, "tangent_angles", phi)
        if phi.ndim != 1 or phi.size < 2:
            raise ValueError("tangent_angles must be a 1-D array of at least 2 nodes")
        if phi[0] != 0.0:
            raise ValueError("tangent angle at the pinned end must be exactly 0")
        if not np.all(np.isfinite(phi)):
            raise ValueError("tangent angles must be finite")
        if not self.seg_len > 0:
            raise ValueError("segment length must be positive")

    @property
    def n_segments(self) -> int:
        return self.tangent_angles.size - 1

    def curvature(self) -> np.ndarray:
        """Per-segment discrete curvature (mm^-1), length n_segments."""
        return np.diff(self.tangent_angles) / self.seg_len

    def positions(self) -> np.ndarray:
        """(N+1, 2) node coordinates; node 0 is the pinned contact at the origin."""
        phi = self.tangent_angles
        x = np.concatenate(([0.0], self.seg_len * np.cumsum(np.cos(phi[:-1]))))
        z = np.concatenate(([0.0], self.seg_len * np.cumsum(np.sin(phi[:-1]))))
        return np.column_stack((x, z))

    @property
    def endpoint(self) -> np.ndarray:
        """Position of the last node (contact #2 side)."""
        phi = self.tangent_angles[:-1]
        return self.seg_len * np.array([np.cos(phi).sum(), np.sin(phi).sum()])

    @property
    def end_tangent(self) -> np.ndarray:
        """Unit tangent at the free end."""
        a = self.tangent_angles[-1]
        return np.array([np.cos(a), np.sin(a)])

    def bending_energy(self, rigidity: float) -> float:
        """Flexural energy 0.5 * Rf * h * sum(kappa^2)."""
        kappa = self.curvature()
        return 0.5 * rigidity * self.seg_len * float(kappa @ kappa)

    @classmethod
    def straight(cls, rod: RodSpec) -> "RodShape":
        return cls(np.zeros(rod.segments + 1), rod.seg_len)


@dataclass(frozen=True)
class SolverConfig:
    """Newton/continuation solver knobs.

    tol_c is a fraction of rod length; tol_g bounds the scaled stationarity
    residual ||grad L|| * L / Rf.  restart_seed feeds the brute-force oracle.
    """

    tol_c: float = DEFAULT_TOL_C
    tol_g: float = DEFAULT_TOL_G
    max_iter: int = 200
    continuation_steps: int = 20
    restart_seed: int = 0

    def __post_init__(self):
        if not (self.tol_c > 0 and self.tol_g > 0):
            raise ValueError("tolerances must be positive")
        if self.continuation_steps < 1:
            raise ValueError("continuation_steps must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class ContactSolution:
    """Converged minimum-energy shape with contact force and friction bound.

    ``force`` is the Lagrange-multiplier pair of the endpoint constraints in
    the force-on-rod-from-finger convention, i.e. the gradient of minimal
    energy with respect to the endpoint.  ``mu_min`` is the smallest friction
    coefficient that keeps the contact (math.inf when no coefficient can).
    """

    shape: RodShape
    energy: float
    force: np.ndarray
    mu_min: float
    constraint_residual: float
    stationarity_residual: float
    iterations: int
    converged: bool
    near_singular: bool = False
    endpoint_target: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float))
        if self.endpoint_target is not None:
            object.__setattr__(
                self, "endpoint_target", np.asarray(self.endpoint_target, dtype=float)
            )


def inflection_count(shape: RodShape, noise_floor: float | None = None) -> int:
    """Number of strict sign changes of discrete curvature along the rod.

    Curvature samples with magnitude below ``noise_floor`` (default
    DEFAULT_TOL_G / h) are ignored so solver noise near kappa = 0 does not
    register as inflections.
    """
    kappa = shape.curvature()
    if noise_floor is None:
        noise_floor = DEFAULT_TOL_G / shape.seg_len
    signs = np.sign(kappa[np.abs(kappa) > noise_floor])
    if signs.size < 2:
        return 0
    return int(np.count_nonzero(signs[1:] != signs[:-1]))
