import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from aeroarm.spatial import Twist, Wrench, rot_x, rpy_to_matrix
from aeroarm.vehicle import (TOTAL_MASS, VehicleParams, VehicleState, coriolis_wrench,
                             dynamics_deriv, gravity_wrench, integrate_rkmk4,
                             mechanical_energy, step_rk4)

# component masses (g): servos, arm, platform with battery
TABLE1_GRAMS = (231.8, 167.6, 3553.6)


def zero(t, s):
    return Wrench.zero(), Wrench.zero()


def test_total_mass_is_table_sum():
    assert math.isclose(sum(TABLE1_GRAMS) / 1000.0, TOTAL_MASS, abs_tol=1e-12)


def test_gravity_wrench_magnitude_and_direction():
    P = VehicleParams(TOTAL_MASS)
    g = gravity_wrench(P, np.eye(3))
    # left-hand-side gravity term: equal to the hover force (see ledger)
    np.testing.assert_allclose(g.force, [0, 0, 38.779], atol=0.01)
    np.testing.assert_array_equal(g.torque, np.zeros(3))
    g1 = gravity_wrench(VehicleParams(1.0), rot_x(math.pi / 2))
    np.testing.assert_allclose(g1.force, [0, 9.81, 0], atol=1e-12)
    R = rpy_to_matrix(0.7, -0.4, 2.0)
    assert math.isclose(np.linalg.norm(gravity_wrench(P, R).force), TOTAL_MASS * 9.81)


def test_coriolis_examples():
    P = VehicleParams(2.0, np.diag([1.0, 2.0, 3.0]))
    c = coriolis_wrench(P, Twist([1, 0, 0], [1, 1, 0]))
    np.testing.assert_allclose(c.torque, [0, 0, 1])
    np.testing.assert_allclose(c.force, 2.0 * np.cross([1, 1, 0], [1, 0, 0]))
    assert np.all(coriolis_wrench(P, Twist([1, 2, 3], [0, 0, 0])).vector == 0)
    w = np.array([0.3, -1.1, 0.4])
    assert abs(w @ coriolis_wrench(P, Twist(np.zeros(3), w)).torque) < 1e-15


def test_free_fall_and_hover_accelerations():
    P = VehicleParams(TOTAL_MASS)
    s = VehicleState(np.zeros(3), np.eye(3), np.zeros(3), np.zeros(3))
    acc, pdot, rate = dynamics_deriv(P, s, Wrench.zero(), Wrench.zero())
    np.testing.assert_allclose(acc.linear, [0, 0, -9.81])
    hover = gravity_wrench(P, s.R)
    acc, _, _ = dynamics_deriv(P, s, hover, Wrench.zero())
    np.testing.assert_allclose(acc.vector, 0.0, atol=1e-15)


def test_dynamics_residual_random():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((3, 3))
    P = VehicleParams(1.7, A @ A.T + np.eye(3))
    for _ in range(20):
        s = VehicleState(rng.standard_normal(3), rpy_to_matrix(*rng.uniform(-1, 1, 3)),
                         rng.standard_normal(3), rng.standard_normal(3))
        tc, te = Wrench.from_vector(rng.standard_normal(6)), Wrench.from_vector(rng.standard_normal(6))
        acc, _, _ = dynamics_deriv(P, s, tc, te)
        res = (P.M @ acc.vector + coriolis_wrench(P, s.twist).vector
               + gravity_wrench(P, s.R).vector - tc.vector - te.vector)
        np.testing.assert_allclose(res, 0.0, atol=1e-12)


def test_hover_is_fixed_point():
    P = VehicleParams(TOTAL_MASS)
    s = VehicleState(np.array([0, 0, 1.0]), rpy_to_matrix(0, 0, 0.3), np.zeros(3), np.zeros(3))
    s1 = step_rk4(P, s, lambda t, st: (gravity_wrench(P, st.R), Wrench.zero()), 1e-3)
    np.testing.assert_allclose(s1.p, s.p, atol=1e-12)
    np.testing.assert_allclose(s1.R, s.R, atol=1e-12)
    np.testing.assert_allclose(s1.v, 0.0, atol=1e-12)


def test_free_fall_one_second():
    P = VehicleParams(TOTAL_MASS)
    s = VehicleState(np.zeros(3), np.eye(3), np.zeros(3), np.zeros(3))
    for k in range(1000):
        s = step_rk4(P, s, zero, 1e-3, k * 1e-3)
    assert abs(s.p[2] - (-4.905)) <= 1e-9


def test_torque_free_rotation_matches_scipy_quaternion_oracle():
    J = np.diag([0.01, 0.02, 0.03])
    P = VehicleParams(1.0, J, gravity=0.0)
    w0 = np.array([3.0, 1.0, 2.0])

    def rhs(t, y):
        q, w = y[:4], y[4:]
        # scalar-last quaternion kinematics, body rates
        x, yq, z, s = q
        qdot = 0.5 * np.array([s * w[0] - z * w[1] + yq * w[2],
                               z * w[0] + s * w[1] - x * w[2],
                               -yq * w[0] + x * w[1] + s * w[2],
                               -x * w[0] - yq * w[1] - z * w[2]])
        wdot = np.linalg.solve(J, -np.cross(w, J @ w))
        return np.concatenate([qdot, wdot])

    sol = solve_ivp(rhs, (0, 1.0), np.concatenate([[0, 0, 0, 1.0], w0]), rtol=1e-12, atol=1e-13)
    from scipy.spatial.transform import Rotation
    R_ref = Rotation.from_quat(sol.y[:4, -1]).as_matrix()
    s = VehicleState(np.zeros(3), np.eye(3), np.zeros(3), w0)
    for k in range(1000):
        s = step_rk4(P, s, zero, 1e-3, k * 1e-3)
    np.testing.assert_allclose(s.w, sol.y[4:, -1], atol=1e-8)
    np.testing.assert_allclose(s.R, R_ref, atol=1e-8)


def test_energy_drift_unforced():
    P = VehicleParams(1.0, np.diag([0.01, 0.01, 0.01]))
    s = VehicleState(np.zeros(3), rpy_to_matrix(0.2, 0.1, 0.0), np.array([0.5, 0.0, 1.0]),
                     np.array([1.0, -2.0, 0.5]))
    e0 = mechanical_energy(P, s)
    for k in range(10_000):
        s = step_rk4(P, s, zero, 1e-3, k * 1e-3)
    assert abs(mechanical_energy(P, s) - e0) <= 1e-6


def test_deterministic_and_dt_guard():
    P = VehicleParams(TOTAL_MASS)
    s = VehicleState(np.zeros(3), np.eye(3), np.array([0.1, 0, 0]), np.array([0.2, 0.1, 0]))
    a = step_rk4(P, s, zero, 1e-3)
    b = step_rk4(P, s, zero, 1e-3)
    assert np.array_equal(a.R, b.R) and np.array_equal(a.p, b.p)
    with pytest.raises(ValueError):
        step_rk4(P, s, zero, 0.02)
    with pytest.raises(ValueError):
        integrate_rkmk4(s, lambda t, st: (np.zeros(3), np.zeros(3)), 0.0)


def test_params_validation():
    with pytest.raises(ValueError):
        VehicleParams(-1.0)
    with pytest.raises(ValueError):
        VehicleParams(1.0, np.diag([1.0, -1.0, 1.0]))
