"""Coupled flex-phase simulation, attempt classification, and sweeps.

The fingertip's nominal path is walked in ramp order.  Table contact
(clamped path points) marks touchdown; the contact is captured by the rod
tip as soon as the fingertip is inside the rod's reachable disk, and from
then on the rod is solved with its end pinned to the fingertip.  Friction is
checked against the cone bound only on airborne steps: while the fingertip
presses the strip against the table the sandwich carries the contact, and
the quasistatic bound is singular near the taut state anyway.

The engaged flex ends when the ramp ends or when the fingertip stops
approaching the base (stored energy starts dropping): from that point on the
rod unloads and the flip begins, so both cases terminate as RampEnd.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .elastica import solve_min_energy_shape
from .errors import DegenerateFit, NoSuccesses
from .finger import FingerSpec, FingertipPath, HandConfig, Pose, PressureRamp, hand_to_base_poses, nominal_tip_path
from .rod import ContactSolution, RodSpec, SolverConfig


class Termination(str, Enum):
    RAMP_END = "RampEnd"
    FRICTION_SLIP = "FrictionSlip"
    NO_INTERACTION = "NoInteraction"
    STUCK_ON_GROUND = "StuckOnGround"
    UNCONVERGED = "Unconverged"


class Label(str, Enum):
    SUCCESS = "Success"
    NO_INTERACTION = "NoInteraction"
    STUCK_ON_GROUND = "StuckOnGround"
    POCKET_MISS = "PocketMiss"
    FRICTION_SLIP = "FrictionSlip"
    UNCONVERGED = "Unconverged"


@dataclass(frozen=True)
class Thresholds:
    """Calibration knobs of the attempt classifier (lengths in rod units, mm)."""

    engagement_tol: float = 2.0
    dwell_fraction: float = 0.40
    flip_angle_threshold_deg: float = 15.0
    ke_budget: float = math.inf

    def __post_init__(self):
        if self.engagement_tol <= 0:
            raise ValueError("engagement tolerance must be positive")
        if not 0 < self.dwell_fraction <= 1:
            raise ValueError("dwell fraction must be in (0, 1]")


@dataclass(frozen=True)
class FlexStep:
    """One engaged step: pressure (MPa), fingertip (mm), rod solution, bound."""

    pressure: float
    tip: np.ndarray
    solution: ContactSolution
    mu_min: float
    on_table: bool


@dataclass
class FlexTrace:
    steps: list
    termination: Termination
    touchdown_x: float | None = None
    delta_geom: float = 0.0

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.solution.energy for s in self.steps])


@dataclass(frozen=True)
class AttemptOutcome:
    label: Label
    stored_energy: float = 0.0
    flip_angle_deg: float = math.nan
    mu_min_max: float = math.nan
    delta: float = 0.0
    separation_index: int = -1


def simulate_flex_phase(
    rod: RodSpec,
    path: FingertipPath,
    mu_available: float,
    cfg: SolverConfig | None = None,
    thresholds: Thresholds | None = None,
) -> FlexTrace:
    """Walk the nominal path and solve the pinned-contact rod at each step.

    Termination: NoInteraction when the path never touches the strip region,
    StuckOnGround when the table-dragging section exceeds the dwell fraction
    of the ramp, FrictionSlip at the first airborne step whose friction
    lower bound exceeds ``mu_available`` (a zero budget slips at the first
    deforming step), Unconverged on a failed solve, RampEnd otherwise.
    """
    if cfg is None:
        cfg = SolverConfig()
    thr = thresholds or Thresholds()
    L = rod.length
    pts = path.points
    clamped = path.clamped
    if not clamped.any():
        return FlexTrace([], Termination.NO_INTERACTION)
    # first table contact within the strip span: the fingertip either lands
    # on the strip directly or grinds in from beyond the tip
    on_strip = clamped & (pts[:, 0] >= 0.0) & (pts[:, 0] <= L + thr.engagement_tol)
    if not on_strip.any():
        return FlexTrace([], Termination.NO_INTERACTION,
                         touchdown_x=float(pts[int(np.argmax(clamped)), 0]))
    i_touch = int(np.argmax(on_strip))
    x_touch = float(pts[i_touch, 0])
    if i_touch > 0 and clamped[i_touch - 1]:
        # the fingertip ground in from beyond the tip: the strip contact
        # starts exactly at the tip
        x_touch = L
    elif i_touch > 0 and path.raw_z[i_touch] < 0.0:
        # interpolate the z = 0 crossing so the touchdown point does not
        # jitter with the ramp discretization
        z0, z1 = path.raw_z[i_touch - 1], path.raw_z[i_touch]
        t = z0 / (z0 - z1)
        x_touch = float(pts[i_touch - 1, 0] + t * (pts[i_touch, 0] - pts[i_touch - 1, 0]))
    if clamped.mean() > thr.dwell_fraction:
        return FlexTrace([], Termination.STUCK_ON_GROUND, touchdown_x=x_touch)
    delta_geom = max(0.0, L - x_touch)

    steps: list[FlexStep] = []
    termination = Termination.NO_INTERACTION
    warm = None
    engaged = False
    for i in range(i_touch, len(pts)):
        p = pts[i]
        radius = math.hypot(p[0], p[1])
        if not engaged:
            if radius <= L - thr.engagement_tol:
                engaged = True
            else:
                continue
        if radius > L * (1.0 + cfg.tol_c):
            # the fingertip retreats past the rod's reach: flex is over
            termination = Termination.RAMP_END
            break
        sol = solve_min_energy_shape(rod, p, cfg, warm_start=warm)
        if not sol.converged:
            termination = Termination.UNCONVERGED
            steps.append(FlexStep(path.pressures[i], p.copy(), sol, sol.mu_min, bool(clamped[i])))
            break
        warm = sol.shape
        if steps and sol.energy < steps[-1].solution.energy * (1.0 - 1e-6):
            # unloading onset: the fingers stop approaching and the rod
            # starts giving energy back; the flex phase is complete
            termination = Termination.RAMP_END
            break
        deforming = sol.energy > 1e-12 * rod.rigidity / L
        slip = False
        if mu_available <= 0.0:
            slip = deforming
        elif not clamped[i]:
            slip = not math.isfinite(sol.mu_min) or sol.mu_min > mu_available
        steps.append(FlexStep(path.pressures[i], p.copy(), sol, sol.mu_min, bool(clamped[i])))
        if slip:
            termination = Termination.FRICTION_SLIP
            break
        termination = Termination.RAMP_END
    if not steps and termination is Termination.NO_INTERACTION:
        return FlexTrace([], Termination.NO_INTERACTION, touchdown_x=x_touch)
    return FlexTrace(steps, termination, touchdown_x=x_touch, delta_geom=delta_geom)


def separation_point(trace: FlexTrace, ke_budget: float) -> tuple[int, float]:
    """Earliest engaged step where stored energy reaches the kinetic budget.

    If the budget exceeds the peak energy the finger never stops early and
    separation happens at the final engaged step.
    """
    if not trace.steps:
        raise ValueError("trace has no engaged steps")
    energies = trace.energies
    hit = np.nonzero(energies >= ke_budget)[0]
    idx = int(hit[0]) if hit.size else len(energies) - 1
    return idx, float(energies[idx])


def flip_direction_check(
    trace: FlexTrace, sep_index: int, angle_threshold_deg: float
) -> tuple[float, bool]:
    """Angle between fingertip recoil and the negative energy gradient.

    The recoil reverses the local path tangent at separation; the rod tip
    evolves along the negative gradient.  The flip succeeds when the two
    directions differ by at least the threshold, letting the object tip
    escape toward the pocket instead of chasing the fingertip.  A zero
    gradient (taut or undeformed rod) is undefined and reported as failure.
    """
    if not trace.steps:
        raise ValueError("trace has no engaged steps")
    sep_index = int(sep_index)
    sol = trace.steps[sep_index].solution
    grad = sol.force
    gnorm = float(np.linalg.norm(grad))
    if gnorm <= 0.0 or not np.all(np.isfinite(grad)):
        return math.nan, False
    if sep_index > 0:
        tangent = trace.steps[sep_index].tip - trace.steps[sep_index - 1].tip
    elif len(trace.steps) > 1:
        tangent = trace.steps[sep_index + 1].tip - trace.steps[sep_index].tip
    else:
        return math.nan, False
    tnorm = float(np.linalg.norm(tangent))
    if tnorm == 0.0:
        return math.nan, False
    recoil = -tangent / tnorm
    neg_grad = -grad / gnorm
    cosang = float(np.clip(recoil @ neg_grad, -1.0, 1.0))
    angle = math.degrees(math.acos(cosang))
    return angle, angle >= angle_threshold_deg


# ---------------------------------------------------------------------------
# Pocket geometry
# ---------------------------------------------------------------------------

def finger_pocket_polygon(finger: FingerSpec, pose: Pose, kappa: float, n_arc: int = 64) -> np.ndarray:
    """Closed polygon of the curled finger: arc samples plus the chord.

    The pocket is the planar region enclosed by the finger arc and the
    straight chord from tip back to base.
    """
    s = np.linspace(0.0, finger.arc_length, n_arc)
    if abs(kappa) * finger.arc_length < 1e-9:
        local = np.column_stack((s, np.zeros_like(s)))
    else:
        local = np.column_stack(
            (np.sin(kappa * s) / kappa, pose.curl * (1.0 - np.cos(kappa * s)) / kappa)
        )
    ch, sh = math.cos(pose.heading), math.sin(pose.heading)
    rot = np.array([[ch, -sh], [sh, ch]])
    return pose.position + local @ rot.T


def point_in_polygon(point, polygon: np.ndarray, edge_tol: float = 1e-9) -> bool:
    """Even-odd containment with boundary points counted as inside."""
    px, pz = float(point[0]), float(point[1])
    poly = np.asarray(polygon, dtype=float)
    a = poly
    b = np.roll(poly, -1, axis=0)
    # boundary proximity
    ab = b - a
    ap = np.array([px, pz]) - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.divide(np.einsum("ij,ij->i", ap, ab), np.where(denom == 0, 1, denom)), 0, 1)
    closest = a + t[:, None] * ab
    d2 = np.einsum("ij,ij->i", closest - [px, pz], closest - [px, pz])
    if np.any(d2 <= edge_tol**2):
        return True
    inside = False
    for (x1, z1), (x2, z2) in zip(a, b):
        if (z1 > pz) != (z2 > pz):
            x_cross = x1 + (pz - z1) * (x2 - x1) / (z2 - z1)
            if x_cross > px:
                inside = not inside
    return inside


def _pocket_contains_tip(
    finger: FingerSpec,
    hand: HandConfig,
    trace: FlexTrace,
    sep_index: int,
    delta: float,
    rod: RodSpec,
    edge_tol: float,
) -> bool:
    step = trace.steps[sep_index]
    kappa = finger.pressure_gain * step.pressure + finger.curvature_offset
    _, pose2 = hand_to_base_poses(hand, finger, tip=(rod.length, 0.0))
    polygon = finger_pocket_polygon(finger, pose2, kappa)
    tangent = step.solution.shape.end_tangent
    tip_point = step.tip + delta * tangent
    return point_in_polygon(tip_point, polygon, edge_tol=edge_tol)


# ---------------------------------------------------------------------------
# Attempt classification and sweeps
# ---------------------------------------------------------------------------

def classify_attempt(
    rod: RodSpec,
    finger: FingerSpec,
    hand: HandConfig,
    ramp: PressureRamp,
    mu_available: float,
    thresholds: Thresholds | None = None,
    cfg: SolverConfig | None = None,
) -> AttemptOutcome:
    """Run the full pipeline and label the attempt.

    Success requires engagement, no slip, positive stored energy at
    separation, a flip angle above threshold, and the object tip (offset
    delta from the contact along the rod's end tangent) inside the pocket
    polygon.  Failures are labeled by the first failing stage; a failed flip
    direction leaves the tip outside the pocket region, so both geometric
    failures map to PocketMiss.
    """
    thr = thresholds or Thresholds()
    path = nominal_tip_path(finger, hand, ramp, tip=(rod.length, 0.0))
    trace = simulate_flex_phase(rod, path, mu_available, cfg, thr)
    delta = max(hand.delta, trace.delta_geom)
    if trace.termination is Termination.NO_INTERACTION:
        return AttemptOutcome(Label.NO_INTERACTION, delta=delta)
    if trace.termination is Termination.STUCK_ON_GROUND:
        return AttemptOutcome(Label.STUCK_ON_GROUND, delta=delta)
    mu_max = _max_tested_mu(trace)
    if trace.termination is Termination.FRICTION_SLIP:
        return AttemptOutcome(
            Label.FRICTION_SLIP,
            stored_energy=float(trace.energies[-1]),
            mu_min_max=mu_max,
            delta=delta,
        )
    if trace.termination is Termination.UNCONVERGED:
        return AttemptOutcome(Label.UNCONVERGED, mu_min_max=mu_max, delta=delta)
    if not trace.steps:
        return AttemptOutcome(Label.NO_INTERACTION, delta=delta)
    sep_index, stored = separation_point(trace, thr.ke_budget)
    angle, flip_ok = flip_direction_check(trace, sep_index, thr.flip_angle_threshold_deg)
    if not flip_ok or stored <= 0.0:
        return AttemptOutcome(
            Label.POCKET_MISS, stored_energy=stored, flip_angle_deg=angle,
            mu_min_max=mu_max, delta=delta, separation_index=sep_index,
        )
    if not _pocket_contains_tip(finger, hand, trace, sep_index, delta, rod,
                                edge_tol=thr.engagement_tol):
        return AttemptOutcome(
            Label.POCKET_MISS, stored_energy=stored, flip_angle_deg=angle,
            mu_min_max=mu_max, delta=delta, separation_index=sep_index,
        )
    return AttemptOutcome(
        Label.SUCCESS, stored_energy=stored, flip_angle_deg=angle,
        mu_min_max=mu_max, delta=delta, separation_index=sep_index,
    )


def _max_tested_mu(trace: FlexTrace) -> float:
    mus = [s.mu_min for s in trace.steps if not s.on_table and math.isfinite(s.mu_min)]
    return max(mus) if mus else math.nan


@dataclass(frozen=True)
class HandLattice:
    """Cartesian product of hand parameters swept in an experiment."""

    x_values: np.ndarray
    z_values: np.ndarray
    theta_values: np.ndarray

    def __post_init__(self):
        for name in ("x_values", "z_values", "theta_values"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, arr)
            if arr.size == 0:
                raise ValueError(f"{name} must be nonempty")

    @classmethod
    def from_ranges(cls, x, z, theta) -> "HandLattice":
        """Each of x, z, theta is (min, max, step); endpoints inclusive."""
        def expand(lo, hi, step):
            n = int(round((hi - lo) / step)) + 1
            return lo + step * np.arange(n)
        return cls(expand(*x), expand(*z), expand(*theta))

    @classmethod
    def table1(cls) -> "HandLattice":
        """The experiment grid: x 30..90/10, z 116..135/1, theta 0..12/1."""
        return cls.from_ranges((30, 90, 10), (116, 135, 1), (0, 12, 1))

    def __len__(self):
        return self.x_values.size * self.z_values.size * self.theta_values.size

    def configs(self, template: HandConfig):
        for x in self.x_values:
            for z in self.z_values:
                for theta in self.theta_values:
                    yield replace(template, x=float(x), z=float(z), theta_deg=float(theta))


@dataclass
class SweepResult:
    lattice: HandLattice
    configs: list
    outcomes: list

    @property
    def success_mask(self) -> np.ndarray:
        return np.array([o.label is Label.SUCCESS for o in self.outcomes], dtype=bool)

    def successes(self):
        return [c for c, o in zip(self.configs, self.outcomes) if o.label is Label.SUCCESS]


def _classify_chunk(args):
    rod, finger, configs, ramp, mu_available, thresholds, cfg = args
    return [
        classify_attempt(rod, finger, hand, ramp, mu_available, thresholds, cfg)
        for hand in configs
    ]


def sweep(
    rod: RodSpec,
    finger: FingerSpec,
    lattice: HandLattice,
    ramp: PressureRamp,
    mu_available: float,
    thresholds: Thresholds | None = None,
    cfg: SolverConfig | None = None,
    hand_template: HandConfig | None = None,
    threads: int = 1,
) -> SweepResult:
    """classify_attempt over every lattice point; deterministic merge by index."""
    if len(lattice) == 0:
        raise ValueError("empty lattice")
    template = hand_template or HandConfig(x=0.0, z=0.0)
    configs = list(lattice.configs(template))
    if threads <= 1:
        outcomes = _classify_chunk((rod, finger, configs, ramp, mu_available, thresholds, cfg))
    else:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [configs[i::threads] for i in range(threads)]
        args = [(rod, finger, ch, ramp, mu_available, thresholds, cfg) for ch in chunks]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_classify_chunk, args))
        outcomes = [None] * len(configs)
        for lane, res in enumerate(results):
            for j, outcome in enumerate(res):
                outcomes[lane + j * threads] = outcome
    return SweepResult(lattice=lattice, configs=configs, outcomes=outcomes)


@dataclass(frozen=True)
class AffineFit:
    """Least-squares line theta = slope * z + intercept over successes."""

    slope: float
    intercept: float
    residual_rms: float
    n_points: int


def fit_affine(points) -> AffineFit:
    """Ordinary least squares of theta (deg) on z (mm).

    ``points`` is an iterable of (z, theta) pairs; raises DegenerateFit when
    fewer than two distinct z values are present.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2 or np.unique(pts[:, 0]).size < 2:
        raise DegenerateFit("need at least two distinct z values")
    z, theta = pts[:, 0], pts[:, 1]
    A = np.column_stack((z, np.ones_like(z)))
    coef, *_ = np.linalg.lstsq(A, theta, rcond=None)
    resid = theta - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    return AffineFit(slope=float(coef[0]), intercept=float(coef[1]),
                     residual_rms=rms, n_points=int(pts.shape[0]))


def fit_from_sweep(result: SweepResult) -> AffineFit:
    pts = [(c.z, c.theta_deg) for c in result.successes()]
    if not pts:
        raise NoSuccesses("sweep has no successful attempts")
    return fit_affine(pts)


def feasible_x_interval(result: SweepResult, fraction: float = 0.8) -> tuple[float, float]:
    """Maximal contiguous x-interval whose success counts stay near the best.

    An x column qualifies when its success count is at least ``fraction`` of
    the best column's count; ties prefer the wider interval, then smaller x.
    """
    if not np.any(result.success_mask):
        raise NoSuccesses("sweep has no successful attempts")
    xs = result.lattice.x_values
    counts = np.zeros(xs.size, dtype=int)
    for c, o in zip(result.configs, result.outcomes):
        if o.label is Label.SUCCESS:
            counts[int(np.argmin(np.abs(xs - c.x)))] += 1
    best = counts.max()
    ok = counts >= fraction * best
    best_run = None
    i = 0
    while i < xs.size:
        if ok[i]:
            j = i
            while j + 1 < xs.size and ok[j + 1]:
                j += 1
            width = j - i
            if best_run is None or width > best_run[1] - best_run[0]:
                best_run = (i, j)
            i = j + 1
        else:
            i += 1
    lo, hi = best_run
    return float(xs[lo]), float(xs[hi])
