import math

import numpy as np
import pytest

from flexflip.finger import (
    FingerSpec,
    HandConfig,
    Pose,
    PressureRamp,
    curvature_from_pressure,
    fingertip_position,
    hand_to_base_poses,
    nominal_tip_path,
)

FINGER = FingerSpec(arc_length=90.0, pressure_gain=0.1, curvature_offset=0.0, max_pressure=0.3)
ORIGIN = Pose(np.zeros(2), 0.0)


def eq3_theta(z):
    return -0.90 * z + 120.5


class TestFingerSpec:
    def test_invariants(self):
        with pytest.raises(ValueError):
            FingerSpec(arc_length=0.0)
        with pytest.raises(ValueError):
            FingerSpec(curvature_offset=-0.5)  # negative curvature at P = 0

    def test_curvature_from_pressure(self):
        assert curvature_from_pressure(FINGER, 0.0) == 0.0
        assert curvature_from_pressure(FINGER, 0.3) == pytest.approx(0.03)

    def test_linearity(self):
        for p in (0.05, 0.1, 0.15):
            lhs = curvature_from_pressure(FINGER, 2 * p) - curvature_from_pressure(FINGER, p)
            rhs = curvature_from_pressure(FINGER, p) - curvature_from_pressure(FINGER, 0.0)
            assert lhs == pytest.approx(rhs, abs=1e-15)

    def test_pressure_out_of_range(self):
        with pytest.raises(ValueError):
            curvature_from_pressure(FINGER, 0.31)
        with pytest.raises(ValueError):
            curvature_from_pressure(FINGER, -0.01)


class TestFingertipPosition:
    def test_straight_limit(self):
        tip = fingertip_position(FINGER, 0.0, ORIGIN)
        assert np.allclose(tip, [FINGER.arc_length, 0.0])

    def test_quarter_circle(self):
        kappa = (math.pi / 2) / FINGER.arc_length
        tip = fingertip_position(FINGER, kappa, ORIGIN)
        expected = 2 * FINGER.arc_length / math.pi
        assert np.allclose(tip, [expected, expected], atol=1e-9 * FINGER.arc_length)

    def test_full_circle_returns_to_base(self):
        kappa = 2 * math.pi / FINGER.arc_length
        tip = fingertip_position(FINGER, kappa, ORIGIN)
        assert np.allclose(tip, [0.0, 0.0], atol=1e-9 * FINGER.arc_length)

    def test_small_curvature_continuity(self):
        tip0 = fingertip_position(FINGER, 0.0, ORIGIN)
        tip1 = fingertip_position(FINGER, 1e-9, ORIGIN)
        assert np.linalg.norm(tip1 - tip0) <= 1e-6 * FINGER.arc_length

    def test_mirrored_curl(self):
        kappa = 0.01
        up = fingertip_position(FINGER, kappa, Pose(np.zeros(2), 0.0, curl=1))
        down = fingertip_position(FINGER, kappa, Pose(np.zeros(2), 0.0, curl=-1))
        assert up[0] == pytest.approx(down[0])
        assert up[1] == pytest.approx(-down[1])

    def test_pose_rotation_and_translation(self):
        pose = Pose(np.array([3.0, 4.0]), math.pi / 2)
        tip = fingertip_position(FINGER, 0.0, pose)
        assert np.allclose(tip, [3.0, 4.0 + FINGER.arc_length])


class TestHandPoses:
    def test_mount_angle_between_tangents(self):
        cfg = HandConfig(x=60, z=122)
        p1, p2 = hand_to_base_poses(cfg, FINGER, tip=(125.0, 0.0))
        assert math.degrees(p1.heading - p2.heading) == pytest.approx(90.0)
        assert p1.curl == 1 and p2.curl == -1

    def test_zero_pressure_tip_matches_offsets(self):
        for theta in (0.0, 5.0, 12.0):
            cfg = HandConfig(x=60, z=122, theta_deg=theta)
            _, pose2 = hand_to_base_poses(cfg, FINGER, tip=(125.0, 0.0))
            tip = fingertip_position(FINGER, 0.0, pose2)
            assert np.allclose(tip, [125.0 + 60.0, 122.0], atol=1e-9)

    def test_demo_configuration_anchor(self):
        # hand configuration 1 of the five demo placements: (x, z) = (60, 122)
        cfg = HandConfig(x=60, z=122, theta_deg=eq3_theta(122))
        _, pose2 = hand_to_base_poses(cfg, FINGER, tip=(125.0, 0.0))
        tip = fingertip_position(FINGER, 0.0, pose2)
        assert np.allclose(tip, [185.0, 122.0], atol=1e-9)

    def test_theta_rotates_rigidly_about_pin(self):
        finger = FingerSpec()
        cfg0 = HandConfig(x=50, z=120, theta_deg=2.0)
        cfg1 = HandConfig(x=50, z=120, theta_deg=7.0)
        p1a, p2a = hand_to_base_poses(cfg0, finger, tip=(125.0, 0.0))
        p1b, p2b = hand_to_base_poses(cfg1, finger, tip=(125.0, 0.0))
        pin = np.array([175.0, 120.0])
        rot = -math.radians(5.0)  # positive theta pivots clockwise
        R = np.array([[math.cos(rot), -math.sin(rot)], [math.sin(rot), math.cos(rot)]])
        assert np.allclose(R @ (p2a.position - pin) + pin, p2b.position, atol=1e-9)
        assert np.allclose(R @ (p1a.position - pin) + pin, p1b.position, atol=1e-9)
        assert p2b.heading - p2a.heading == pytest.approx(rot)
        assert p1b.heading - p1a.heading == pytest.approx(rot)


class TestPressureRamp:
    def test_validation(self):
        with pytest.raises(ValueError):
            PressureRamp(np.array([0.1]))
        with pytest.raises(ValueError):
            PressureRamp(np.array([0.2, 0.1]))

    def test_monotone_curvature_along_ramp(self):
        ramp = PressureRamp.linear(0.0, 0.3, 30)
        kappas = [curvature_from_pressure(FINGER, p) for p in ramp.samples]
        assert all(np.diff(kappas) >= 0)


class TestNominalTipPath:
    def test_high_hand_never_clamped(self):
        finger = FingerSpec()
        cfg = HandConfig(x=60, z=400)
        ramp = PressureRamp.linear(0.0, 0.3, 50)
        path = nominal_tip_path(finger, cfg, ramp, tip=(125.0, 0.0))
        assert not path.clamped.any()

    def test_low_hand_contiguous_clamped_run(self):
        finger = FingerSpec()
        cfg = HandConfig(x=60, z=118, theta_deg=8.0)
        ramp = PressureRamp.linear(0.0, 0.3, 120)
        path = nominal_tip_path(finger, cfg, ramp, tip=(125.0, 0.0))
        assert path.clamped.any()
        run = np.nonzero(path.clamped)[0]
        assert np.all(np.diff(run) == 1)  # one contiguous flat section
        assert np.all(path.points[run, 1] == 0.0)

    def test_clamp_soundness(self):
        finger = FingerSpec()
        cfg = HandConfig(x=60, z=126, theta_deg=7.0)
        ramp = PressureRamp.linear(0.0, 0.3, 100)
        path = nominal_tip_path(finger, cfg, ramp, tip=(125.0, 0.0))
        assert np.all(path.points[:, 1] >= 0.0)
        assert np.array_equal(path.clamped, path.raw_z < 0.0)

    def test_spacing_bounded_by_ramp_resolution(self):
        finger = FingerSpec()
        cfg = HandConfig(x=60, z=126, theta_deg=7.0)
        for n in (50, 100, 200):
            ramp = PressureRamp.linear(0.0, 0.3, n)
            path = nominal_tip_path(finger, cfg, ramp, tip=(125.0, 0.0))
            spacing = np.linalg.norm(np.diff(path.points, axis=0), axis=1)
            dkappa = finger.pressure_gain * 0.3 / (n - 1)
            assert spacing.max() <= finger.arc_length**2 * dkappa

    def test_five_demo_configs_have_flat_spiral_sections(self):
        # the five nominal paths drawn over the dimensionalized energy plot
        finger = FingerSpec()
        ramp = PressureRamp.linear(0.0, 0.3, 120)
        for z in (122, 124, 126, 128, 130):
            cfg = HandConfig(x=60, z=z, theta_deg=eq3_theta(z))
            path = nominal_tip_path(finger, cfg, ramp, tip=(125.0, 0.0))
            assert path.clamped.any(), f"no flat section at z={z}"
            # spiral: the heading of tip motion turns by well over a quarter turn
            moves = np.diff(path.points, axis=0)
            angles = np.unwrap(np.arctan2(moves[:, 1], moves[:, 0]))
            assert np.ptp(angles) > math.pi / 2
