"""Constrained flexural-energy minimization for the planar inextensible rod.

Solves, in tangent-angle coordinates with the pinned contact clamped at the
origin (phi_0 = 0),

    minimize   U = 0.5 * Rf * h * sum_i kappa_i^2
    subject to x(L) = p_x,  z(L) = p_z,

by Newton iteration on the KKT system with endpoint continuation from the
flat state, which tracks the physically flexed branch.  The endpoint
constraint multipliers give the contact force applied by the finger on the
rod, equal to the gradient of minimal energy with respect to the endpoint.

All solves are performed on the unit-length, unit-rigidity rescaling and
mapped back (U ~ Rf/L, f ~ Rf/L^2), so energy is exactly linear in Rf and
the length scaling law holds to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContactInfeasible, UnconvergedSolution, UnreachableEndpoint
from .rod import ContactSolution, RodShape, RodSpec, SolverConfig

# Below this nondimensional force magnitude the contact is treated as
# force-free and mu_min is 0 by convention.
_FORCE_FLOOR_SCALED = 1e-7

# Seed amplitude used to break the flat-state symmetry toward the upward
# (z >= 0) buckling branch.
_SEED_AMPLITUDE = 1e-4


# ---------------------------------------------------------------------------
# Newton-KKT core (unit-length, unit-rigidity variables)
# ---------------------------------------------------------------------------

def _kkt_residual(phi: np.ndarray, lam: np.ndarray, p: np.ndarray, h: float):
    """Stationarity and constraint residuals of the Lagrangian."""
    n = phi.size - 1
    grad = np.empty(n)
    grad[: n - 1] = (2.0 * phi[1:-1] - phi[:-2] - phi[2:]) / h
    grad[n - 1] = (phi[-1] - phi[-2]) / h
    cos_mid = np.cos(phi[1:-1])
    sin_mid = np.sin(phi[1:-1])
    grad[: n - 1] += h * (-lam[0] * sin_mid + lam[1] * cos_mid)
    c = np.array(
        [
            h * (1.0 + np.cos(phi[1:-1]).sum()) - p[0],
            h * np.sin(phi[1:-1]).sum() - p[1],
        ]
    )
    return grad, c


def _kkt_matrix(phi: np.ndarray, lam: np.ndarray, h: float, damping: float) -> np.ndarray:
    """Dense KKT matrix [[H, J^T], [J, 0]] with optional Levenberg damping on H."""
    n = phi.size - 1
    H = np.zeros((n, n))
    idx = np.arange(n)
    H[idx, idx] = 2.0 / h
    H[n - 1, n - 1] = 1.0 / h
    H[idx[:-1], idx[:-1] + 1] = -1.0 / h
    H[idx[:-1] + 1, idx[:-1]] = -1.0 / h
    cos_mid = np.cos(phi[1:-1])
    sin_mid = np.sin(phi[1:-1])
    H[idx[:-1], idx[:-1]] += h * (-lam[0] * cos_mid - lam[1] * sin_mid)
    if damping > 0.0:
        H[idx, idx] += damping
    J = np.zeros((2, n))
    J[0, : n - 1] = -h * sin_mid
    J[1, : n - 1] = h * cos_mid
    M = np.zeros((n + 2, n + 2))
    M[:n, :n] = H
    M[:n, n:] = J.T
    M[n:, :n] = J
    return M


def _newton_solve(phi, lam, p, h, cfg: SolverConfig):
    """Damped Newton on the KKT system toward endpoint ``p`` (scaled units)."""
    grad, c = _kkt_residual(phi, lam, p, h)
    merit = float(grad @ grad + c @ c)
    iters = 0
    damping = 0.0
    stall_merit = merit
    for _ in range(cfg.max_iter):
        if iters and iters % 30 == 0:
            # no meaningful progress over a whole window: give up early so
            # the continuation driver can bisect the step instead
            if merit > 0.25 * stall_merit:
                break
            stall_merit = merit
        if np.max(np.abs(grad)) <= cfg.tol_g and np.linalg.norm(c) <= cfg.tol_c:
            return phi, lam, grad, c, iters, True
        M = _kkt_matrix(phi, lam, h, damping)
        rhs = np.concatenate((-grad, -c))
        try:
            step = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            damping = max(10.0 * damping, 1e-6 / h)
            iters += 1
            continue
        if not np.all(np.isfinite(step)):
            damping = max(10.0 * damping, 1e-6 / h)
            iters += 1
            continue
        n = phi.size - 1
        # Backtracking on the squared KKT residual.
        t = 1.0
        accepted = False
        while t >= 1.0 / 1024.0:
            phi_t = phi.copy()
            phi_t[1:] += t * step[:n]
            lam_t = lam + t * step[n:]
            grad_t, c_t = _kkt_residual(phi_t, lam_t, p, h)
            with np.errstate(over="ignore", invalid="ignore"):
                merit_t = float(grad_t @ grad_t + c_t @ c_t)
            if math.isfinite(merit_t) and merit_t < merit * (1.0 - 1e-4 * t):
                phi, lam, grad, c, merit = phi_t, lam_t, grad_t, c_t, merit_t
                accepted = True
                break
            t *= 0.5
        iters += 1
        if accepted:
            damping *= 0.25
            if damping < 1e-14:
                damping = 0.0
        else:
            damping = max(10.0 * damping, 1e-6 / h)
    converged = bool(
        np.max(np.abs(grad)) <= cfg.tol_g and np.linalg.norm(c) <= cfg.tol_c
    )
    return phi, lam, grad, c, iters, converged


# First buckling mode of the base-clamped, end-pinned, moment-free column:
# tan(kL) = kL.  Its slope profile seeds the S-branch (single inflection,
# dipping near the base and rising toward the pinned end).
_KL_FIRST_MODE = 4.493409457909064


def _seed_s_mode(n: int, target: np.ndarray) -> np.ndarray:
    """First-buckling-mode slope profile matched to the target deflection.

    Breaks the flat-state degeneracy deterministically onto the S branch the
    rod follows when flexed from flat; a mode with endpoint shortening delta
    has slope amplitude ~ 2*sqrt(delta).
    """
    kL = _KL_FIRST_MODE
    s = np.arange(n + 1) / n
    mode = kL * np.sin(kL * s) + np.cos(kL * s) - 1.0
    mode /= np.max(np.abs(mode))
    r = min(1.0, float(np.linalg.norm(target)))
    amp = 1.8 * math.sqrt(max(0.0, 1.0 - r)) + 1.2 * max(0.0, float(target[1]))
    amp = max(amp, _SEED_AMPLITUDE)
    phi = -amp * mode
    phi[0] = 0.0
    return phi


def _endpoint_of(phi: np.ndarray, h: float) -> np.ndarray:
    return np.array(
        [h * (1.0 + np.cos(phi[1:-1]).sum()), h * np.sin(phi[1:-1]).sum()]
    )


def _polar_path(start: np.ndarray, target: np.ndarray, t: float) -> np.ndarray:
    """Endpoint interpolated in polar coordinates about the pinned contact.

    Sweeping radius and elevation together keeps intermediate endpoints on
    the gently-curled sheet instead of cutting across the deep-fold region.
    """
    r0 = float(np.linalg.norm(start))
    r1 = float(np.linalg.norm(target))
    b0 = math.atan2(start[1], start[0]) if r0 > 1e-12 else math.atan2(target[1], target[0])
    b1 = math.atan2(target[1], target[0]) if r1 > 1e-12 else b0
    r = r0 + t * (r1 - r0)
    b = b0 + t * (b1 - b0)
    return np.array([r * math.cos(b), r * math.sin(b)])


def _continue_branch(phi0: np.ndarray, target: np.ndarray, n: int, cfg: SolverConfig):
    """Track one solution branch from the state ``phi0`` to ``target``.

    Steps follow the polar endpoint path; failed steps are bisected.  Returns
    (phi, lam, grad, c, iters, converged) with residuals taken at the target.
    """
    h = 1.0 / n
    flat = np.array([1.0, 0.0])
    phi = phi0.copy()
    lam = np.zeros(2)
    start = _endpoint_of(phi, h)
    dist = float(np.linalg.norm(target - start))
    steps = max(1, math.ceil(cfg.continuation_steps * min(1.0, dist)))
    dt_plan = 1.0 / steps
    total_iters = 0
    t_done = 0.0
    dt = dt_plan
    while t_done < 1.0 - 1e-12:
        step_dt = min(dt, 1.0 - t_done)
        if t_done + step_dt >= 1.0 - 1e-12:
            p_k = target
        else:
            p_k = _polar_path(start, target, t_done + step_dt)
        phi_try = phi
        if np.max(np.abs(phi[1:])) < 1e-3 and np.linalg.norm(p_k - flat) > cfg.tol_c:
            phi_try = _seed_s_mode(n, p_k)
        phi_new, lam_new, grad, c, iters, ok = _newton_solve(
            phi_try.copy(), lam.copy(), p_k, h, cfg
        )
        total_iters += iters
        if ok:
            phi, lam = phi_new, lam_new
            t_done += step_dt
            dt = min(dt * 2.0, dt_plan)
        else:
            dt = step_dt / 2.0
            if dt < dt_plan / 256.0:
                grad_f, c_f = _kkt_residual(phi_new, lam_new, target, h)
                return phi_new, lam_new, grad_f, c_f, total_iters, False
    grad, c = _kkt_residual(phi, lam, target, h)
    return phi, lam, grad, c, total_iters, True


def _solve_scaled(target: np.ndarray, n: int, cfg: SolverConfig, warm: np.ndarray | None):
    """Continuation solve in unit-length variables; returns (phi, lam, info).

    The primary track starts from the flat state (or the warm-start shape),
    mirroring the physical flexing.  Past the fold where that branch ceases
    to exist (deep compression), the rod snaps to the curled configuration;
    a fallback track from a full upward loop resolves those targets.
    """
    phi0 = np.zeros(n + 1) if warm is None else warm.copy()
    result = _continue_branch(phi0, target, n, cfg)
    if result[5] or warm is not None:
        return result
    s = np.arange(n + 1) / n
    loop = 2.0 * math.pi * s
    loop[0] = 0.0
    fallback = _continue_branch(loop, target, n, cfg)
    if fallback[5]:
        # carry the iteration count of both attempts for honest reporting
        return fallback[:4] + (result[4] + fallback[4], True)
    return result


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def solve_min_energy_shape(
    rod: RodSpec,
    endpoint,
    cfg: SolverConfig | None = None,
    warm_start: RodShape | None = None,
) -> ContactSolution:
    """Minimum-energy rod shape with the free end pinned at ``endpoint`` (mm).

    Continuation walks the endpoint from the flat state (or from
    ``warm_start``'s endpoint when tracking a moving contact) to the target,
    mirroring the physical flexing.  Non-convergence does not raise; the
    best iterate is returned tagged ``converged=False``.

    Raises UnreachableEndpoint when ||endpoint|| > L*(1+tol_c) or z < 0.
    """
    if cfg is None:
        cfg = SolverConfig()
    p = np.asarray(endpoint, dtype=float)
    if p.shape != (2,):
        raise ValueError("endpoint must be a 2-vector")
    L = rod.length
    radius = float(np.linalg.norm(p))
    if radius > L * (1.0 + cfg.tol_c) or p[1] < 0.0:
        raise UnreachableEndpoint(
            f"endpoint {p.tolist()} outside reachable half-disk of radius {L}"
        )
    target = p / L
    warm = None
    if warm_start is not None:
        if warm_start.tangent_angles.size != rod.segments + 1:
            raise ValueError("warm start discretization does not match rod")
        warm = warm_start.tangent_angles
    phi, lam, grad, c, iters, converged = _solve_scaled(target, rod.segments, cfg, warm)

    shape = RodShape(phi, rod.seg_len)
    force = -lam * rod.rigidity / L**2
    mu = _mu_min_scaled(phi, -lam)
    near_singular = (abs(radius - L) <= cfg.tol_c * L and p[1] > 0.0) or radius > L
    return ContactSolution(
        shape=shape,
        energy=shape.bending_energy(rod.rigidity),
        force=force,
        mu_min=mu,
        constraint_residual=float(np.linalg.norm(c)),
        stationarity_residual=float(np.max(np.abs(grad))),
        iterations=iters,
        converged=converged,
        near_singular=bool(near_singular),
        endpoint_target=p,
    )


def compute_contact_force(sol: ContactSolution, rod: RodSpec) -> np.ndarray:
    """Contact force (N) on the rod from the finger, from the constraint multipliers.

    Equals the gradient of minimal energy with respect to the endpoint.
    Rejects unconverged solutions.
    """
    if not sol.converged:
        raise UnconvergedSolution("contact force undefined for unconverged solution")
    return sol.force.copy()


def _mu_min_scaled(phi: np.ndarray, force_scaled: np.ndarray) -> float:
    """mu_min from scaled force; inf encodes an infeasible (tangential) contact."""
    fnorm = float(np.linalg.norm(force_scaled))
    if fnorm <= _FORCE_FLOOR_SCALED:
        return 0.0
    tangent = np.array([np.cos(phi[-1]), np.sin(phi[-1])])
    normal = np.array([-tangent[1], tangent[0]])
    fn = float(force_scaled @ normal)
    if fn < 0.0:
        fn = -fn
    ft = abs(float(force_scaled @ tangent))
    if fn <= 1e-12 * fnorm:
        return math.inf
    return ft / fn


def min_friction_coefficient(sol: ContactSolution, force_floor: float = 0.0) -> float:
    """Smallest friction coefficient at contact #2 that maintains the contact.

    With n the rod normal at the endpoint on the pressing side and t the
    tangent, returns |f.t| / (f.n): the tangent of the angle between the
    contact force and the contact normal.  A force with no normal component
    cannot be sustained by any friction coefficient and raises
    ContactInfeasible.  ||f|| <= force_floor returns 0 (no force, no slip).
    """
    if not sol.converged:
        raise UnconvergedSolution("friction bound undefined for unconverged solution")
    f = sol.force
    fnorm = float(np.linalg.norm(f))
    if fnorm <= force_floor or fnorm == 0.0:
        return 0.0
    tangent = sol.shape.end_tangent
    normal = np.array([-tangent[1], tangent[0]])
    fn = float(f @ normal)
    if fn < 0.0:
        fn = -fn
    if fn <= 1e-12 * fnorm:
        raise ContactInfeasible(
            "contact force is tangential; no friction coefficient maintains contact"
        )
    return abs(float(f @ tangent)) / fn


# ---------------------------------------------------------------------------
# Energy field over contact-#2 positions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Rectangular sampling of endpoint positions (mm), node-registered."""

    x_min: float
    x_max: float
    nx: int
    z_min: float
    z_max: float
    nz: int

    def __post_init__(self):
        if self.nx < 2 or self.nz < 2:
            raise ValueError("grid needs at least 2 samples per axis")
        if self.x_max <= self.x_min or self.z_max <= self.z_min:
            raise ValueError("grid extents must be increasing")
        if self.z_min < 0.0:
            raise ValueError("grid must lie in the closed upper half-plane")

    def x_values(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def z_values(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.nz)


@dataclass
class EnergyField:
    """Per-cell minimal energies, gradients, and friction bounds.

    Arrays are (nz, nx); cells outside the reachable half-disk are masked and
    carry NaN.  ``grad`` stores dU*/d(p_x, p_z), which equals the stored
    contact force (sensitivity identity).  ``mu_min`` uses math.inf for
    contact-infeasible cells.
    """

    grid: GridSpec
    rod: RodSpec
    energy: np.ndarray
    grad: np.ndarray
    mu_min: np.ndarray
    mask: np.ndarray
    converged: np.ndarray


def _solve_cells(args):
    rod, cfg, cells = args
    out = []
    for iz, ix, px, pz in cells:
        sol = solve_min_energy_shape(rod, (px, pz), cfg)
        out.append((iz, ix, sol.energy, sol.force[0], sol.force[1], sol.mu_min, sol.converged))
    return out


def compute_energy_field(
    rod: RodSpec, grid: GridSpec, cfg: SolverConfig | None = None, threads: int = 1
) -> EnergyField:
    """Solve the elastica at every reachable grid node.

    Each cell is solved independently from the flat state, so results do not
    depend on evaluation order; with ``threads > 1`` the cells are solved on
    a process pool and merged by index, giving output identical to the
    serial run.  Per-cell non-convergence is recorded in ``converged``; it
    never aborts the field.
    """
    if cfg is None:
        cfg = SolverConfig()
    xs = grid.x_values()
    zs = grid.z_values()
    energy = np.full((grid.nz, grid.nx), np.nan)
    gradient = np.full((grid.nz, grid.nx, 2), np.nan)
    mu = np.full((grid.nz, grid.nx), np.nan)
    mask = np.zeros((grid.nz, grid.nx), dtype=bool)
    converged = np.zeros((grid.nz, grid.nx), dtype=bool)
    cells = []
    for iz, pz in enumerate(zs):
        for ix, px in enumerate(xs):
            if math.hypot(px, pz) > rod.length or pz < 0.0:
                continue
            mask[iz, ix] = True
            cells.append((iz, ix, float(px), float(pz)))
    if threads <= 1:
        results = _solve_cells((rod, cfg, cells))
    else:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [cells[i::threads] for i in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_solve_cells, [(rod, cfg, ch) for ch in chunks]))
        results = [item for part in parts for item in part]
    for iz, ix, u, gx, gz, m, conv in results:
        energy[iz, ix] = u
        gradient[iz, ix] = (gx, gz)
        mu[iz, ix] = m
        converged[iz, ix] = conv
    return EnergyField(
        grid=grid, rod=rod, energy=energy, grad=gradient, mu_min=mu,
        mask=mask, converged=converged,
    )


def energy_gradient_field(field: EnergyField) -> np.ndarray:
    """dU*/d(p_x, p_z) per reachable cell; NaN on masked cells.

    Equals the stored per-cell contact force; the flip-phase shape evolution
    direction is the negative of these vectors.
    """
    if field.grad is None or not np.any(field.mask):
        raise ValueError("field carries no populated cells")
    return field.grad.copy()
