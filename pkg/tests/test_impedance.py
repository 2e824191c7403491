import math

import numpy as np
import pytest

from aeroarm.errors import SingularGains
from aeroarm.impedance import (ImpedanceGains, Setpoint, WrenchEstimator, control_wrench,
                               desired_accel, pose_errors)
from aeroarm.spatial import Wrench, rot_z, rpy_to_matrix
from aeroarm.vehicle import (TOTAL_MASS, VehicleParams, VehicleState,
                             dynamics_deriv, gravity_wrench, step_rk4)

P = VehicleParams(TOTAL_MASS)
G = ImpedanceGains.default(P)


def random_state(rng):
    return VehicleState(rng.standard_normal(3), rpy_to_matrix(*rng.uniform(-1, 1, 3)),
                        rng.standard_normal(3), rng.standard_normal(3))


def test_errors_zero_at_setpoint():
    s = random_state(np.random.default_rng(1))
    for e in pose_errors(s, Setpoint.at(s)):
        np.testing.assert_allclose(e, 0.0, atol=1e-15)


def test_position_and_attitude_errors():
    s = VehicleState(np.array([1.0, 0, 0]), np.eye(3), np.zeros(3), np.zeros(3))
    e_p, _, _, _ = pose_errors(s, Setpoint())
    np.testing.assert_array_equal(e_p, [1, 0, 0])
    s = VehicleState(np.zeros(3), rot_z(math.pi / 2), np.zeros(3), np.zeros(3))
    _, e_R, _, _ = pose_errors(s, Setpoint())
    np.testing.assert_allclose(e_R, [0, 0, 1], atol=1e-15)


def test_velocity_errors_frames():
    R = rot_z(math.pi / 2)
    s = VehicleState(np.zeros(3), R, np.array([1.0, 0, 0]), np.array([0, 0, 0.5]))
    sp = Setpoint(np.zeros(3), np.eye(3), np.array([0, 1.0, 0]), np.array([0, 0, 0.5]))
    _, _, e_v, e_w = pose_errors(s, sp)
    # body +x points along world +y, so the body velocity matches v_d
    np.testing.assert_allclose(e_v, 0.0, atol=1e-15)
    np.testing.assert_allclose(e_w, 0.0, atol=1e-15)


def test_hover_command_is_gravity_wrench():
    s = VehicleState(np.array([0, 0, 1.0]), np.eye(3), np.zeros(3), np.zeros(3))
    tc = control_wrench(P, G, s, Setpoint.at(s), Wrench.zero())
    np.testing.assert_allclose(tc.vector, gravity_wrench(P, s.R).vector, atol=1e-12)


def test_closed_loop_acceleration_equals_target_random():
    rng = np.random.default_rng(7)
    for _ in range(25):
        s = random_state(rng)
        sp = Setpoint(rng.standard_normal(3), rpy_to_matrix(*rng.uniform(-1, 1, 3)),
                      rng.standard_normal(3), rng.standard_normal(3))
        tau_ext = Wrench.from_vector(rng.standard_normal(6))
        ff = Wrench.from_vector(rng.standard_normal(6))
        tc = control_wrench(P, G, s, sp, tau_ext, feedforward=ff)
        acc, _, _ = dynamics_deriv(P, s, tc, tau_ext + ff)
        np.testing.assert_allclose(acc.vector, desired_accel(G, s, sp, tau_ext), atol=1e-12)


def test_unit_position_error_symbolic_expansion():
    # K_v translation block = I, M_v = M, unit error along world x at yaw 0.4
    K = np.diag([1.0, 1, 1, 0, 0, 0])
    gains = ImpedanceGains(P.M, np.zeros((6, 6)), K)
    R = rot_z(0.4)
    s = VehicleState(np.array([1.0, 0, 0]), R, np.zeros(3), np.zeros(3))
    tc = control_wrench(P, gains, s, Setpoint(np.zeros(3), R), Wrench.zero())
    expected_force = P.mass * 9.81 * R.T @ [0, 0, 1] - R.T @ [1.0, 0, 0]
    np.testing.assert_allclose(tc.force, expected_force, atol=1e-12)
    np.testing.assert_allclose(tc.torque, 0.0, atol=1e-12)


def test_regulation_converges():
    s = VehicleState(np.array([0.3, -0.2, 1.2]), rpy_to_matrix(0.2, -0.1, 0.4),
                     np.zeros(3), np.zeros(3))
    sp = Setpoint(np.array([0, 0, 1.0]))

    def wf(t, st):
        return control_wrench(P, G, st, sp, Wrench.zero()), Wrench.zero()

    e0 = np.linalg.norm(pose_errors(s, sp)[0])
    r0 = np.linalg.norm(pose_errors(s, sp)[1])
    for k in range(15_000):
        s = step_rk4(P, s, wf, 1e-3, k * 1e-3)
    e_p, e_R, _, _ = pose_errors(s, sp)
    assert np.linalg.norm(e_p) < 1e-3 * e0
    assert np.linalg.norm(e_R) < 1e-3 * r0


def test_static_contact_compliance():
    # constant push along x, perfect estimate: K_v e_p = F at rest
    F = np.array([2.0, 0, 0, 0, 0, 0])
    s = VehicleState(np.array([0, 0, 1.0]), np.eye(3), np.zeros(3), np.zeros(3))
    sp = Setpoint(np.array([0, 0, 1.0]))
    ext = Wrench.from_vector(F)

    def wf(t, st):
        return control_wrench(P, G, st, sp, ext), ext

    for k in range(20_000):
        s = step_rk4(P, s, wf, 1e-3, k * 1e-3)
    e_p = pose_errors(s, sp)[0]
    assert abs(G.K_v[0, 0] * e_p[0] - F[0]) < 1e-6


def test_gains_validation():
    with pytest.raises(SingularGains):
        ImpedanceGains(np.zeros((6, 6)), np.eye(6), np.eye(6))
    with pytest.raises(ValueError):
        ImpedanceGains(np.eye(6), -np.eye(6), np.eye(6))
    g = ImpedanceGains([1, 1, 1, 2, 2, 2], [8] * 6, [16] * 6)
    np.testing.assert_allclose(g.M_v_inv, np.diag([1, 1, 1, 0.5, 0.5, 0.5]))


def test_estimator_lag():
    est = WrenchEstimator(0.0)
    np.testing.assert_array_equal(est.update(np.ones(6), 1e-3), np.ones(6))
    est = WrenchEstimator(0.05)
    est.update(np.zeros(6), 1e-3)
    y = None
    for _ in range(50):
        y = est.update(np.ones(6), 1e-3)
    # backward-Euler step response after 50 ms ~ 1 - (tau / (tau + dt))^50
    assert math.isclose(y[0], 1 - (0.05 / 0.051) ** 50, rel_tol=1e-12)
    with pytest.raises(ValueError):
        WrenchEstimator(-1.0)
