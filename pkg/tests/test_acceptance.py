"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) or through pytest; under
pytest the lines are repeated in the terminal summary.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from aeroarm import kernels  # noqa: E402
from aeroarm.compliant import (AbsorptionUnitParams, BulgeProfile, HingeState,  # noqa: E402
                               equilibrium_distance, hinge_energy, hinge_step, hinge_torque,
                               total_torque_bound)
from aeroarm.harness.csvio import write_csv  # noqa: E402
from aeroarm.harness.experiments import impact_config, impact_scenario  # noqa: E402
from aeroarm.harness.metrics import impact_metrics, metrics_from_velocities  # noqa: E402
from aeroarm.harness.run import run_scenario  # noqa: E402
from aeroarm.harness.scenario import (from_dict, load_scenario, parse_scenario,  # noqa: E402
                                      serialize)
from aeroarm.impedance import ImpedanceGains, Setpoint, control_wrench, desired_accel  # noqa: E402
from aeroarm.kinematics import (ArmGeometry, JointAngles, ServoModel,  # noqa: E402
                                forward_kinematics, inverse_kinematics, servo_step)
from aeroarm.spatial import Wrench, orthonormality_error, reorthonormalize, rpy_to_matrix  # noqa: E402
from aeroarm.vehicle import (TOTAL_MASS, VehicleParams, VehicleState,  # noqa: E402
                             integrate_rkmk4, step_rk4)

from conftest import ACCEPTANCE, SCENARIOS  # noqa: E402


def report(n, name, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    line = f"{'PASS' if ok else 'FAIL'} [{n}] {name}: {detail} ({elapsed:.2f} s, limit {limit} s)"
    print(line)
    ACCEPTANCE[n] = line
    assert ok, line


def test_criterion_1_energy_bookkeeping():
    t0 = time.perf_counter()
    a = metrics_from_velocities(0.626, 0.219, 3.953).E_c
    b = metrics_from_velocities(0.675, 0.0, 3.953).E_c
    ok = abs(a - 0.6797) <= 1e-3 and abs(b - 0.9005) <= 1e-3
    ok = ok and abs(TOTAL_MASS - 3.953) < 1e-12
    report(1, "energy bookkeeping", ok, f"E_c = {a:.4f} J and {b:.4f} J",
           time.perf_counter() - t0, 0.1)


def test_criterion_2_fk_ik_round_trip():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    e_ang = e_pos = 0.0
    for _ in range(5):
        g = ArmGeometry(rng.uniform(0, 0.06), rng.uniform(0.05, 0.2), rng.uniform(0.05, 0.2),
                        rng.uniform(0, 0.08))
        for _ in range(2000):
            th1 = rng.uniform(-math.pi + 1e-3, math.pi - 1e-3)
            th2 = rng.uniform(-math.pi + 0.05, -0.01)
            tip = forward_kinematics(g, JointAngles(th1, th2))
            q = inverse_kinematics(g, tip)
            e_ang = max(e_ang, abs(q.theta1 - th1), abs(q.theta2 - th2))
            e_pos = max(e_pos, float(np.abs(forward_kinematics(g, q) - tip).max()))
    report(2, "FK/IK round trip", e_ang <= 1e-9 and e_pos <= 1e-9,
           f"max angle error {e_ang:.1e} rad, max position error {e_pos:.1e} m",
           time.perf_counter() - t0, 1.0)


def test_criterion_3_closed_loop_equivalence():
    t0 = time.perf_counter()
    P = VehicleParams(TOTAL_MASS)
    G = ImpedanceGains.default(P)
    s0 = VehicleState(np.array([0.2, -0.1, 1.1]), rpy_to_matrix(0.1, -0.05, 0.3),
                      np.array([0.1, 0.0, -0.1]), np.array([0.2, -0.1, 0.3]))

    def setpoint(t):
        return Setpoint(np.array([0.1 * t, 0.0, 1.0]), np.eye(3), np.array([0.1, 0.0, 0.0]))

    def external(t):
        # time-varying push, known exactly to the controller
        return Wrench(np.array([2.0 * math.sin(3 * t), 0.5, -1.0]),
                      np.array([0.0, 0.05 * math.cos(2 * t), 0.0]))

    def plant(t, st):
        ext = external(t)
        return control_wrench(P, G, st, setpoint(t), ext), ext

    def target(t, st):
        a = desired_accel(G, st, setpoint(t), external(t))
        return a[:3], a[3:]

    a, b = s0, s0
    dt = 1e-3
    err = 0.0
    for k in range(5000):
        t = k * dt
        a = step_rk4(P, a, plant, dt, t)
        b = integrate_rkmk4(b, target, dt, t)
        err = max(err, np.abs(a.p - b.p).max(), np.abs(a.R - b.R).max(),
                  np.abs(a.v - b.v).max(), np.abs(a.w - b.w).max())
    report(3, "closed-loop equivalence", err <= 1e-6, f"max state difference {err:.1e}",
           time.perf_counter() - t0, 5.0)


def test_criterion_4_impact_ordering():
    t0 = time.perf_counter()
    rigid = impact_metrics(run_scenario(impact_scenario(0.6, "rigid")))
    soft = impact_metrics(run_scenario(impact_scenario(0.6, "compliant")))
    ratio = rigid.peak_accel / soft.peak_accel
    ok = ratio >= 3 and soft.v_post < 0.05 and rigid.v_post >= 0.15
    report(4, "impact ordering", ok,
           f"peak |a_x| rigid {rigid.peak_accel:.2f} vs compliant {soft.peak_accel:.2f} "
           f"(x{ratio:.1f}), v_post rigid {rigid.v_post:.3f} vs compliant {soft.v_post:.3f} m/s",
           time.perf_counter() - t0, 10.0)


def test_criterion_5_passivity():
    t0 = time.perf_counter()
    # a small bulge offset keeps friction finite near idle so the swing dies out
    p = AbsorptionUnitParams(kappa=0.8, bulge=BulgeProfile(0.001, 0.004))
    inertia, dt = 3e-4, 1e-4
    s = HingeState(theta=0.6)
    energy, diss = [hinge_energy(p, s, inertia)], [0.0]
    for _ in range(15_000):
        s, _ = hinge_step(p, s, 0.0, inertia, dt)
        energy.append(hinge_energy(p, s, inertia))
        diss.append(s.E_dissipated)
    rise = float(np.max(np.diff(energy)))
    drop = float(np.min(np.diff(diss)))
    dist = equilibrium_distance(p, s.theta)
    ok = rise <= 1e-6 and drop >= 0.0 and dist <= 1e-3 and diss[-1] > 0
    report(5, "passivity", ok,
           f"max energy rise {rise:.1e} J/step, final theta {s.theta:.4f} rad, "
           f"{dist:.1e} rad from equilibrium, dissipated {diss[-1]:.4f} J",
           time.perf_counter() - t0, 2.0)


def test_criterion_6_integrator_order():
    t0 = time.perf_counter()
    P = VehicleParams(1.2, np.diag([0.01, 0.02, 0.03]))

    def wf(t, s):
        return Wrench.zero(), Wrench.zero()

    def run(dt, T=0.5):
        s = VehicleState(np.zeros(3), rpy_to_matrix(0.1, 0.2, 0.3), np.array([0.5, -0.2, 1.0]),
                         np.array([3.0, 1.0, 2.0]))
        for k in range(int(round(T / dt))):
            s = step_rk4(P, s, wf, dt, k * dt)
        return s

    ref = run(1e-4)
    dts = [0.01, 0.005, 0.0025, 0.00125]
    errs = []
    for dt in dts:
        s = run(dt)
        errs.append(max(np.abs(s.p - ref.p).max(), np.abs(s.R - ref.R).max(),
                        np.abs(s.v - ref.v).max(), np.abs(s.w - ref.w).max()))
    slope = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    report(6, "integrator order", 3.7 <= slope <= 4.3, f"log-log slope {slope:.3f}",
           time.perf_counter() - t0, 5.0)


def test_criterion_7_so3_integrity():
    J = np.diag([0.01, 0.02, 0.03])
    w = np.array([6.0, 5.0, 5.7])
    w *= 10.0 / np.linalg.norm(w)
    args = (3.953, J, np.linalg.inv(J), 0.0, np.eye(6), np.zeros((6, 6)), np.zeros((6, 6)),
            np.zeros(3), np.eye(3), np.zeros(3), np.zeros(3), np.zeros(6), np.zeros(6),
            np.zeros(6))
    p, R, v = np.zeros(3), np.eye(3), np.zeros(3)
    kernels.closed_loop_rk4(2, p, R, v, w, 1e-3, *args)  # compile outside the timing
    t0 = time.perf_counter()
    for k in range(100_000):
        p, R, v, w, _, _ = kernels.closed_loop_rk4(2, p, R, v, w, 1e-3, *args)
        if (k + 1) % 100 == 0:
            R = reorthonormalize(R)
    err = orthonormality_error(R)
    report(7, "SO(3) integrity", err <= 1e-6, f"||R^T R - I|| = {err:.1e} after 1e5 steps",
           time.perf_counter() - t0, 2.0)


def test_criterion_8_servo_saturation_gap():
    t0 = time.perf_counter()
    # friction stays engaged under the pulling tendon for this check
    unit = AbsorptionUnitParams(disengage=1.0)
    servo = ServoModel(one_sided=True, pull_sign=-1.0)
    ref = -2.5
    holding = total_torque_bound(unit, ref) + abs(hinge_torque(unit, ref))
    h = HingeState()
    dt, inertia = 1e-4, 3e-4
    gaps = []
    for k in range(15_000):
        tau, servo = servo_step(servo, ref, h.theta, 0.0, dt)
        h, _ = hinge_step(unit, h, tau, inertia, dt, pulling=servo.pulling(tau))
        if k * dt >= 1.0:
            gaps.append(abs(ref - h.theta))
    gap = min(gaps)
    ok = holding > servo.tau_max and gap > 0.02
    report(8, "servo saturation gap", ok,
           f"holding torque {holding:.3f} > tau_max {servo.tau_max}, "
           f"smallest gap over the last 0.5 s {gap:.3f} rad",
           time.perf_counter() - t0, 2.0)


def test_criterion_9_determinism_and_io(tmp_path):
    t0 = time.perf_counter()
    s = from_dict({**impact_config(0.6, "compliant"), "duration": 0.3})
    write_csv(run_scenario(s), tmp_path / "a.csv")
    write_csv(run_scenario(s), tmp_path / "b.csv")
    same = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    trips = [parse_scenario(serialize(load_scenario(f))) == load_scenario(f) for f in SCENARIOS]
    ok = same and all(trips) and len(trips) > 0
    report(9, "determinism and I/O", ok,
           f"CSV bit-identical: {same}, corpus round trips {sum(trips)}/{len(trips)}",
           time.perf_counter() - t0, 2.0)


if __name__ == "__main__":
    import tempfile

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
