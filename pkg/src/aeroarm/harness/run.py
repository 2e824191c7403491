"""Fixed-step rollout of a scenario."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from aeroarm import kernels
from aeroarm.compliant import HingeState, STUCK, hinge_step
from aeroarm.errors import NumericalDivergence, Unreachable, ValidationError
from aeroarm.harness.coupling import couple_arm_wrench, trim_wrench
from aeroarm.harness.scenario import Scenario
from aeroarm.impedance import WrenchEstimator
from aeroarm.kinematics import JointAngles, forward_kinematics, inverse_kinematics, jacobian, \
    servo_step
from aeroarm.spatial import reorthonormalize, rpy_to_matrix

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e6
_CONTROL_CODES = {"impedance": 0, "gravity_only": 1, "off": 2}


def plane_to_body(xy) -> np.ndarray:
    """Arm-plane (x, y) to body frame: the plane's y axis is body z."""
    return np.array([xy[0], 0.0, xy[1]])


def body_to_plane(b) -> np.ndarray:
    return np.array([b[0], b[2]])


@dataclass
class SimLog:
    """Uniformly sampled telemetry. Positions/velocities are world frame,
    accelerations and angular rates body frame."""

    dt: float
    sample_period: float
    m_total: float
    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    p: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    R: np.ndarray = field(default_factory=lambda: np.zeros((0, 3, 3)))
    v: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    accel: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    w: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    theta: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    theta_ref: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    p_A: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    f_contact: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    E_diss: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tau_c: np.ndarray = field(default_factory=lambda: np.zeros((0, 6)))
    tau_ext: np.ndarray = field(default_factory=lambda: np.zeros((0, 6)))
    E_stored: np.ndarray = field(default_factory=lambda: np.zeros(0))
    E_servo: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self):
        return len(self.t)

    @property
    def in_contact(self) -> np.ndarray:
        return np.linalg.norm(self.f_contact, axis=1) > 0.0

    def kinetic_energy(self, inertia_rot=None) -> np.ndarray:
        ke = 0.5 * self.m_total * np.sum(self.v ** 2, axis=1)
        if inertia_rot is not None:
            ke = ke + 0.5 * np.einsum("ni,ij,nj->n", self.w, inertia_rot, self.w)
        return ke

    def filtered_accel(self, cutoff_hz: float = 20.0) -> np.ndarray:
        """Second-order Butterworth low-pass of the body accelerations (for
        plots only; metrics use the raw signal)."""
        from scipy.signal import butter, lfilter

        fs = 1.0 / self.sample_period
        if cutoff_hz >= 0.5 * fs or len(self) == 0:
            return self.accel.copy()
        b, a = butter(2, cutoff_hz / (0.5 * fs))
        return lfilter(b, a, self.accel, axis=0)


def _check(name, x):
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_LIMIT:
        raise NumericalDivergence(f"{name} left the admissible range")


class _SetpointTable:
    """Array view of the setpoint script (avoids rebuilding rotations per step)."""

    def __init__(self, scenario: Scenario):
        s0 = scenario.initial_state
        self.knots = [(k["t"], np.array(k["p"]), np.array(k["v"]),
                       rpy_to_matrix(*k["rpy"]), np.array(k["w"]))
                      for k in scenario.config["setpoints"]]
        self.hold = (0.0, s0.p.copy(), np.zeros(3), s0.R.copy(), np.zeros(3))

    def __call__(self, t):
        active = self.hold
        for k in self.knots:
            if k[0] <= t:
                active = k
            else:
                break
        t0, p, v, R, w = active
        if active is self.hold:
            return p, R, v, w
        return p + v * (t - t0), R, v, w


def run_scenario(s: Scenario) -> SimLog:
    dt = s.dt
    n_steps = int(round(s.duration / dt))
    every = 1 if s.sample_period is None else max(1, int(round(s.sample_period / dt)))
    veh = s.vehicle
    J, Jinv = veh.inertia_rot, veh.inertia_inv
    gains = s.gains
    Mv_inv, Dv, Kv = gains.M_v_inv, gains.D_v, gains.K_v
    mode = _CONTROL_CODES[s.control]
    compliant = s.arm_mode == "compliant"
    geom = s.geometry
    mount = s.mount
    cfg_arm = s.config["arm"]
    j_inertia = cfg_arm["joint_inertia"]
    limits = cfg_arm["joint_limits"]
    unit = s.absorption
    lumped = s.lumped
    DA, KA = lumped.D_A, lumped.K_A
    MA = lumped.M_A
    M2 = MA[np.ix_([0, 2], [0, 2])]
    wall = s.wall
    rng = np.random.default_rng(s.seed)
    noise = s.config["noise"]["accel_std"]

    trim = trim_wrench(cfg_arm["trim"], veh.gravity).vector
    tau_ff = trim if mode != 2 else np.zeros(6)
    estimator = WrenchEstimator(s.config["estimator"]["time_constant"])
    setpoints = _SetpointTable(s)

    def solve_ik(target):
        try:
            return inverse_kinematics(geom, target)
        except Unreachable as exc:
            raise ValidationError(f"arm target {list(target)} unreachable: {exc}") from exc

    target = s.arm_target(0.0)
    q_ref = solve_ik(target)
    ref = np.array([q_ref.theta1, q_ref.theta2])
    hinges = [HingeState(ref[i], 0.0, STUCK, 0.0) for i in range(2)]
    servos = list(s.servos)
    if compliant:
        servos = [sv.preloaded(unit.kappa * ref[i]) for i, sv in enumerate(servos)]

    p, R, v, w = (s.initial_state.p.copy(), s.initial_state.R.copy(),
                  s.initial_state.v.copy(), s.initial_state.w.copy())
    p_A = np.zeros(3)
    v_A = np.zeros(3)
    tip_vel_prev = np.zeros(3)
    a_body_prev = np.zeros(3)
    e_wall = e_damp = e_stop = e_servo = 0.0
    wall_n = wall.normal_array if wall is not None else None
    wall_pt = wall.point_array if wall is not None else None

    rows = {k: [] for k in ("t", "p", "R", "v", "accel", "w", "theta", "theta_ref", "p_A",
                            "f_contact", "E_diss", "tau_c", "tau_ext", "E_stored", "E_servo")}
    last_target = target

    for k in range(n_steps):
        t = k * dt
        p_d, R_d, v_d, w_d = setpoints(t)
        target = s.arm_target(t)
        if not np.array_equal(target, last_target):
            q_ref = solve_ik(target)
            ref = np.array([q_ref.theta1, q_ref.theta2])
            last_target = target

        # arm geometry at t
        if compliant:
            q = np.array([hinges[0].theta, hinges[1].theta])
            qd = np.array([hinges[0].omega, hinges[1].omega])
        else:
            q = ref
            qd = np.zeros(2)
        jac = jacobian(geom, q[0], q[1])
        tip = plane_to_body(forward_kinematics(geom, JointAngles(q[0], min(q[1], 0.0))))
        tip_rel_vel = plane_to_body(jac @ qd)
        if compliant:
            # lumped deflection: tip offset from the commanded pose
            p_A = tip - plane_to_body(forward_kinematics(geom, JointAngles(ref[0], ref[1])))
            v_A = tip_rel_vel

        # wall contact
        fc_world = np.zeros(3)
        if wall is not None:
            r_tip = mount + tip
            tip_pos = p + R @ r_tip
            tip_vel = R @ (v + np.cross(w, r_tip) + tip_rel_vel)
            fc_world, depth, rate = kernels.contact_force(wall.k_w, wall.d_w, wall_n, wall_pt,
                                                          tip_pos, tip_vel)
            if depth > 0.0 and rate > 0.0:
                e_wall += wall.d_w * rate * rate * dt
        fc_body = R.T @ fc_world

        if compliant:
            # lumped tip compliance projected onto the joints: spring, damper and
            # tip inertia act in parallel with the absorption units
            f_tip = fc_body - KA @ p_A - DA @ v_A - MA @ a_body_prev
            tau_load = jac.T @ body_to_plane(f_tip)
            jm = jac.T @ M2 @ jac
            inertia = [j_inertia + jm[0, 0], j_inertia + jm[1, 1]]
            tip_acc = (tip_rel_vel - tip_vel_prev) / dt if k > 0 else np.zeros(3)
            tip_vel_prev = tip_rel_vel
            arm_wrench = couple_arm_wrench(fc_body - MA @ tip_acc, mount, tip).vector
        else:
            arm_wrench = couple_arm_wrench(fc_body, mount, tip).vector

        tau_ext = trim + arm_wrench
        tau_hat = estimator.update(arm_wrench, dt)

        stored = 0.0
        if compliant:
            stored = (0.5 * p_A @ KA @ p_A
                      + sum(0.5 * unit.kappa * h.theta ** 2 + 0.5 * inertia[i] * h.omega ** 2
                            for i, h in enumerate(hinges)))
        if wall is not None:
            d = -(p + R @ (mount + tip) - wall_pt) @ wall_n
            if d > 0:
                stored += 0.5 * wall.k_w * d * d
        e_fric = sum(h.E_dissipated for h in hinges)

        p_A_t = p_A

        # advance the arm
        if compliant:
            new_hinges = []
            for i in range(2):
                tau_s, servos[i] = servo_step(servos[i], ref[i], hinges[i].theta, 0.0, dt)
                h, _ = hinge_step(unit, hinges[i], tau_s, inertia[i], dt,
                                  pulling=servos[i].pulling(tau_s), tau_load=tau_load[i])
                e_servo += tau_s * (h.theta - hinges[i].theta)
                lo, hi = limits[i]
                if h.theta < lo or h.theta > hi:
                    e_stop += 0.5 * inertia[i] * h.omega ** 2
                    h = HingeState(min(max(h.theta, lo), hi), 0.0, STUCK, h.E_dissipated)
                new_hinges.append(h)
            e_damp += float(v_A @ DA @ v_A) * dt

        tau_c = kernels.control_law(mode, veh.mass, J, veh.gravity, Mv_inv, Dv, Kv,
                                    p, R, v, w, p_d, R_d, v_d, w_d, tau_hat, tau_ff)
        p1, R1, v1, w1, vdot, wdot = kernels.closed_loop_rk4(
            mode, p, R, v, w, dt, veh.mass, J, Jinv, veh.gravity, Mv_inv, Dv, Kv,
            p_d, R_d, v_d, w_d, tau_hat, tau_ff, tau_ext)
        a_body = vdot + np.cross(w, v)

        if k % every == 0:
            a_log = a_body + rng.normal(0.0, noise, 3) if noise > 0 else a_body
            rows["t"].append(t)
            rows["p"].append(p)
            rows["R"].append(R)
            rows["v"].append(R @ v)
            rows["accel"].append(a_log)
            rows["w"].append(w)
            rows["theta"].append(q.copy())
            rows["theta_ref"].append(ref.copy())
            rows["p_A"].append(p_A_t)
            rows["f_contact"].append(fc_world)
            rows["E_diss"].append(e_fric + e_wall + e_damp + e_stop)
            rows["tau_c"].append(tau_c)
            rows["tau_ext"].append(tau_ext)
            rows["E_stored"].append(stored)
            rows["E_servo"].append(e_servo)

        if compliant:
            hinges = new_hinges
        p, R, v, w = p1, R1, v1, w1
        a_body_prev = a_body
        if (k + 1) % s.reortho_every == 0:
            R = reorthonormalize(R)
        for name, x in (("position", p), ("velocity", v), ("angular rate", w), ("arm", p_A)):
            _check(name, x)
        if not (math.isfinite(hinges[0].theta) and math.isfinite(hinges[1].theta)):
            raise NumericalDivergence("joint angles left the admissible range")

    out = SimLog(dt, dt * every, veh.mass)
    shapes = {"t": (0,), "p": (0, 3), "R": (0, 3, 3), "v": (0, 3), "accel": (0, 3),
              "w": (0, 3), "theta": (0, 2), "theta_ref": (0, 2), "p_A": (0, 3),
              "f_contact": (0, 3), "E_diss": (0,), "tau_c": (0, 6), "tau_ext": (0, 6),
              "E_stored": (0,), "E_servo": (0,)}
    for name, vals in rows.items():
        setattr(out, name, np.array(vals, dtype=float) if vals else np.zeros(shapes[name]))
    log.info("run finished: %d steps, %d samples (%s kernels)", n_steps, len(out),
             kernels.backend())
    return out
