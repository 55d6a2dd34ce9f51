"""Multi-start penalty-method minimizer used as an independent cross-check.

Deliberately shares no machinery with the Newton-KKT solver: the endpoint
constraint is enforced through an escalating quadratic penalty and each start
is minimized with L-BFGS-B from a random tangent-angle profile.  Keeping the
lowest feasible energy over many restarts approximates the global constrained
minimum, which the continuation solver is tested against.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from .errors import UnreachableEndpoint
from .rod import RodShape, RodSpec

_PENALTY_LADDER = (1e2, 1e4, 1e6, 1e8)


def _penalty_objective(phi_free: np.ndarray, p: np.ndarray, h: float, weight: float):
    """Penalized energy and its analytic gradient w.r.t. the free angles."""
    n = phi_free.size
    phi = np.concatenate(([0.0], phi_free))
    dphi = np.diff(phi)
    energy = 0.5 / h * float(dphi @ dphi)
    cos_all = np.cos(phi[:-1])
    sin_all = np.sin(phi[:-1])
    ex = h * cos_all.sum() - p[0]
    ez = h * sin_all.sum() - p[1]
    value = energy + 0.5 * weight * (ex * ex + ez * ez)
    grad = np.empty(n)
    grad[: n - 1] = (2.0 * phi[1:-1] - phi[:-2] - phi[2:]) / h
    grad[n - 1] = (phi[-1] - phi[-2]) / h
    grad[: n - 1] += weight * h * (-ex * sin_all[1:] + ez * cos_all[1:])
    return value, grad


def penalty_min_energy(
    rod: RodSpec,
    endpoint,
    n_starts: int = 200,
    seed: int = 0,
    feas_tol: float = 1e-5,
) -> tuple[float, RodShape]:
    """Lowest-energy shape over ``n_starts`` random penalty minimizations.

    Returns (energy, shape) in the units of ``rod``.  ``feas_tol`` is the
    admissible endpoint error as a fraction of rod length.
    """
    p = np.asarray(endpoint, dtype=float) / rod.length
    if np.linalg.norm(p) > 1.0 + 1e-9 or p[1] < 0.0:
        raise UnreachableEndpoint(f"endpoint {endpoint} not reachable")
    n = rod.segments
    h = 1.0 / n
    rng = np.random.default_rng(seed)
    best_energy = np.inf
    best_phi = None
    for _ in range(n_starts):
        x = rng.uniform(-np.pi, np.pi, n)
        for weight in _PENALTY_LADDER:
            res = minimize(
                _penalty_objective,
                x,
                args=(p, h, weight),
                jac=True,
                method="L-BFGS-B",
                options={"maxiter": 500, "ftol": 1e-14, "gtol": 1e-11},
            )
            x = res.x
        phi = np.concatenate(([0.0], x))
        err = np.hypot(
            h * np.cos(phi[:-1]).sum() - p[0], h * np.sin(phi[:-1]).sum() - p[1]
        )
        if err > feas_tol:
            continue
        kappa = np.diff(phi) / h
        energy = 0.5 * h * float(kappa @ kappa)
        if energy < best_energy:
            best_energy = energy
            best_phi = phi
    if best_phi is None:
        raise RuntimeError("no penalty start reached feasibility; raise n_starts")
    shape = RodShape(best_phi, rod.seg_len)
    return shape.bending_energy(rod.rigidity), shape
