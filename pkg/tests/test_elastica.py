import math

import numpy as np
import pytest

from flexflip.elastica import (
    GridSpec,
    compute_contact_force,
    compute_energy_field,
    energy_gradient_field,
    min_friction_coefficient,
    solve_min_energy_shape,
)
from flexflip.errors import ContactInfeasible, UnconvergedSolution, UnreachableEndpoint
from flexflip.rod import ContactSolution, RodShape, RodSpec, SolverConfig, inflection_count

ROD = RodSpec.nondimensional(100)
CFG = SolverConfig()


def fd_force(rod, p, cfg, step=1e-4):
    """Central finite differences of the minimal energy over the endpoint."""
    p = np.asarray(p, dtype=float)
    out = np.empty(2)
    for i in range(2):
        dp = np.zeros(2)
        dp[i] = step * rod.length
        up = solve_min_energy_shape(rod, p + dp, cfg).energy
        um = solve_min_energy_shape(rod, p - dp, cfg).energy
        out[i] = (up - um) / (2 * step * rod.length)
    return out


class TestSolve:
    def test_undeformed_endpoint(self):
        sol = solve_min_energy_shape(ROD, (1.0, 0.0), CFG)
        assert sol.converged
        assert sol.energy <= 1e-10
        assert np.linalg.norm(sol.force) <= 1e-8
        assert np.all(sol.shape.tangent_angles == 0.0)

    def test_s_shape_region(self):
        sol = solve_min_energy_shape(ROD, (0.8, 0.2), CFG)
        assert sol.converged
        assert sol.energy > 0
        assert inflection_count(sol.shape) == 1
        assert np.allclose(sol.shape.endpoint, [0.8, 0.2], atol=1e-7)

    def test_unreachable_raises(self):
        with pytest.raises(UnreachableEndpoint):
            solve_min_energy_shape(ROD, (1.2, 0.0), CFG)
        with pytest.raises(UnreachableEndpoint):
            solve_min_energy_shape(ROD, (0.5, -0.1), CFG)

    def test_residuals_within_tolerances(self):
        sol = solve_min_energy_shape(ROD, (0.6, 0.3), CFG)
        assert sol.constraint_residual <= CFG.tol_c
        assert sol.stationarity_residual <= CFG.tol_g

    def test_natural_boundary_condition(self):
        for p in [(0.8, 0.2), (0.5, 0.4), (0.3, 0.1)]:
            sol = solve_min_energy_shape(ROD, p, CFG)
            assert abs(sol.shape.curvature()[-1]) <= CFG.tol_g / ROD.seg_len

    def test_deterministic_bit_identical(self):
        a = solve_min_energy_shape(ROD, (0.7, 0.25), CFG)
        b = solve_min_energy_shape(ROD, (0.7, 0.25), CFG)
        assert np.array_equal(a.shape.tangent_angles, b.shape.tangent_angles)
        assert a.energy == b.energy
        assert np.array_equal(a.force, b.force)

    def test_near_taut_flagged(self):
        sol = solve_min_energy_shape(ROD, (1.0 - 1e-10, 1e-10), CFG)
        assert sol.near_singular

    def test_unconverged_tagged_not_raised(self):
        cheap = SolverConfig(max_iter=3, continuation_steps=1)
        sol = solve_min_energy_shape(ROD, (0.2, 0.2), cheap)
        assert not sol.converged
        assert sol.iterations > 0
        assert np.all(np.isfinite(sol.shape.tangent_angles))

    def test_warm_start_tracks_nearby_endpoint(self):
        base = solve_min_energy_shape(ROD, (0.8, 0.2), CFG)
        moved = solve_min_energy_shape(ROD, (0.79, 0.21), CFG, warm_start=base.shape)
        assert moved.converged
        assert np.allclose(moved.shape.endpoint, [0.79, 0.21], atol=1e-7)


class TestScaling:
    def test_energy_linear_in_rigidity(self):
        a = solve_min_energy_shape(RodSpec(1.0, 1.0, 100), (0.7, 0.25), CFG)
        b = solve_min_energy_shape(RodSpec(1.0, 2.0, 100), (0.7, 0.25), CFG)
        assert b.energy == pytest.approx(2.0 * a.energy, rel=1e-14)
        assert np.allclose(b.force, 2.0 * a.force, rtol=1e-14)

    @pytest.mark.parametrize("c", [0.5, 2.0, 125.0])
    def test_length_scaling_law(self, c):
        rng = np.random.default_rng(7)
        for _ in range(4):
            r = rng.uniform(0.3, 0.95)
            b = rng.uniform(0.1, 1.3)
            p = np.array([r * math.cos(b), r * math.sin(b)])
            u1 = solve_min_energy_shape(RodSpec(1.0, 1.0, 100), p, CFG).energy
            uc = solve_min_energy_shape(RodSpec(c, 1.0, 100), c * p, CFG).energy
            assert uc == pytest.approx(u1 / c, rel=1e-6)


class TestContactForce:
    def test_zero_at_undeformed(self):
        sol = solve_min_energy_shape(ROD, (1.0, 0.0), CFG)
        assert np.linalg.norm(compute_contact_force(sol, ROD)) <= 1e-8

    def test_matches_finite_differences(self):
        p = (0.8, 0.2)
        sol = solve_min_energy_shape(ROD, p, CFG)
        fd = fd_force(ROD, p, CFG)
        rel = np.linalg.norm(sol.force - fd) / np.linalg.norm(fd)
        assert rel <= 1e-3

    def test_rejects_unconverged(self):
        cheap = SolverConfig(max_iter=3, continuation_steps=1)
        sol = solve_min_energy_shape(ROD, (0.2, 0.2), cheap)
        with pytest.raises(UnconvergedSolution):
            compute_contact_force(sol, ROD)


def _solution_with_force(angle_end, force):
    """Converged solution stub with a prescribed end tangent and force."""
    n = 16
    phi = np.zeros(n + 1)
    phi[1:] = np.linspace(0.0, angle_end, n)
    shape = RodShape(phi, 1.0 / n)
    return ContactSolution(
        shape=shape, energy=1.0, force=np.asarray(force, dtype=float), mu_min=0.0,
        constraint_residual=0.0, stationarity_residual=0.0, iterations=1,
        converged=True,
    )


class TestMinFriction:
    def test_force_along_normal_is_zero(self):
        sol = _solution_with_force(0.0, (0.0, -2.0))  # end tangent +x, normal +/-z
        assert min_friction_coefficient(sol) == pytest.approx(0.0, abs=1e-12)

    def test_force_at_45_degrees_is_one(self):
        sol = _solution_with_force(0.0, (1.0, 1.0))
        assert min_friction_coefficient(sol) == pytest.approx(1.0, rel=1e-12)

    def test_zero_force_is_zero(self):
        sol = _solution_with_force(0.3, (0.0, 0.0))
        assert min_friction_coefficient(sol) == 0.0

    def test_tangential_force_infeasible(self):
        sol = _solution_with_force(0.0, (3.0, 0.0))
        with pytest.raises(ContactInfeasible):
            min_friction_coefficient(sol)

    def test_consistent_with_fd_force_composition(self):
        p = (0.8, 0.2)
        sol = solve_min_energy_shape(ROD, p, CFG)
        mu_solver = min_friction_coefficient(sol)
        fd = fd_force(ROD, p, CFG)
        tangent = sol.shape.end_tangent
        normal = np.array([-tangent[1], tangent[0]])
        mu_fd = abs(fd @ tangent) / abs(fd @ normal)
        assert mu_solver == pytest.approx(mu_fd, rel=1e-3)
        assert mu_solver == pytest.approx(sol.mu_min, rel=1e-9)


class TestEnergyField:
    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridSpec(0, 1, 5, -0.1, 1, 5)  # below the table
        with pytest.raises(ValueError):
            GridSpec(1, 0, 5, 0, 1, 5)

    def test_zero_cell_and_masking(self):
        rod = RodSpec.nondimensional(48)
        grid = GridSpec(0.0, 1.0, 6, 0.0, 1.0, 6)
        field = compute_energy_field(rod, grid, CFG)
        assert field.energy[0, -1] == pytest.approx(0.0, abs=1e-10)  # cell (1, 0)
        assert not field.mask[-1, -1]  # (1, 1) outside the half-disk
        assert np.isnan(field.energy[-1, -1])
        assert np.isnan(field.mu_min[-1, -1])

    def test_monotone_energy_row(self):
        rod = RodSpec.nondimensional(64)
        energies = [
            solve_min_energy_shape(rod, (px, 0.05), CFG).energy
            for px in np.linspace(0.9, 0.5, 9)
        ]
        assert all(np.diff(energies) > 0)

    def test_threaded_field_matches_serial(self):
        rod = RodSpec.nondimensional(32)
        grid = GridSpec(0.0, 1.0, 7, 0.0, 1.0, 5)
        serial = compute_energy_field(rod, grid, CFG, threads=1)
        parallel = compute_energy_field(rod, grid, CFG, threads=3)
        assert np.array_equal(serial.energy, parallel.energy, equal_nan=True)
        assert np.array_equal(serial.grad, parallel.grad, equal_nan=True)


class TestGradientField:
    def test_matches_contact_force_per_cell(self):
        rod = RodSpec.nondimensional(48)
        grid = GridSpec(0.4, 0.8, 4, 0.1, 0.4, 4)
        field = compute_energy_field(rod, grid, CFG)
        grads = energy_gradient_field(field)
        for iz, pz in enumerate(grid.z_values()):
            for ix, px in enumerate(grid.x_values()):
                if not field.mask[iz, ix]:
                    continue
                sol = solve_min_energy_shape(rod, (px, pz), CFG)
                rel = np.linalg.norm(grads[iz, ix] - sol.force) / np.linalg.norm(sol.force)
                assert rel <= 1e-3

    def test_central_difference_richardson_order(self):
        rod = RodSpec.nondimensional(64)

        def cd_error(d):
            grid = GridSpec(0.55 - 2 * d, 0.55 + 2 * d, 5, 0.35 - 2 * d, 0.35 + 2 * d, 5)
            field = compute_energy_field(rod, grid, CFG)
            e = field.energy
            cdx = (e[2, 3] - e[2, 1]) / (2 * d)
            cdz = (e[3, 2] - e[1, 2]) / (2 * d)
            return math.hypot(cdx - field.grad[2, 2, 0], cdz - field.grad[2, 2, 1])

        err1, err2 = cd_error(0.02), cd_error(0.01)
        order = math.log2(err1 / err2)
        assert order >= 1.9

    def test_zero_gradient_at_flat_cell(self):
        rod = RodSpec.nondimensional(32)
        grid = GridSpec(0.0, 1.0, 6, 0.0, 1.0, 6)
        field = compute_energy_field(rod, grid, CFG)
        assert np.linalg.norm(field.grad[0, -1]) <= 1e-8
