"""Planar kinematics of the stacked four-bar arm and the joint servo model.

Angles: ``theta1`` is the shoulder angle measured from the body x-axis at
the shoulder pivot ``(l1, 0)``; ``theta2`` is the elbow angle relative to
link 2 (non-positive: the tendon folds the arm in compression); ``theta3``
is the passive wrist angle that keeps the last link parallel to the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from aeroarm.errors import DegenerateTarget, Unreachable

_REACH_TOL = 1e-12


@dataclass(frozen=True)
class ArmGeometry:
    l1: float = 0.03
    l2: float = 0.11
    l3: float = 0.11
    l4: float = 0.05

    def __post_init__(self):
        for name in ("l1", "l2", "l3", "l4"):
            val = float(getattr(self, name))
            if not math.isfinite(val) or val < 0:
                raise ValueError(f"{name} must be finite and non-negative")
            object.__setattr__(self, name, val)
        if self.l2 <= 0 or self.l3 <= 0:
            raise ValueError("l2 and l3 must be positive")

    @property
    def reach(self) -> float:
        return self.l1 + self.l2 + self.l3 + self.l4


@dataclass(frozen=True)
class JointAngles:
    theta1: float
    theta2: float
    theta3: float = 0.0

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if not -math.pi - 1e-12 <= self.theta2 <= 1e-12:
            raise ValueError("theta2 must lie in [-pi, 0]")


def elbow_and_wrist(geom: ArmGeometry, theta1: float, theta2: float):
    """Positions of the elbow and of ``p3`` (start of the last link)."""
    ex = geom.l1 + geom.l2 * math.cos(theta1)
    ey = geom.l2 * math.sin(theta1)
    return (ex, ey), (ex + geom.l3 * math.cos(theta1 + theta2),
                      ey + geom.l3 * math.sin(theta1 + theta2))


def forward_kinematics(geom: ArmGeometry, q: JointAngles) -> np.ndarray:
    """End-effector position in the arm plane. The last link stays parallel
    to the first, so it just adds ``(l4, 0)``."""
    _, (x3, y3) = elbow_and_wrist(geom, q.theta1, q.theta2)
    return np.array([x3 + geom.l4, y3])


def jacobian(geom: ArmGeometry, theta1: float, theta2: float) -> np.ndarray:
    """d(tip)/d(theta1, theta2), 2x2."""
    s1, c1 = math.sin(theta1), math.cos(theta1)
    s12, c12 = math.sin(theta1 + theta2), math.cos(theta1 + theta2)
    return np.array([[-geom.l2 * s1 - geom.l3 * s12, -geom.l3 * s12],
                     [geom.l2 * c1 + geom.l3 * c12, geom.l3 * c12]])


def _triangle_angle(adj1: float, adj2: float, opp: float) -> float:
    # angle between adj1 and adj2 facing opp; atan2 form stays accurate near 0 and pi
    cos_num = adj1 * adj1 + adj2 * adj2 - opp * opp
    s = (adj1 + adj2 + opp) * (-adj1 + adj2 + opp) * (adj1 - adj2 + opp) * (adj1 + adj2 - opp)
    return math.atan2(math.sqrt(max(s, 0.0)), cos_num)


def _wrist_offset(geom: ArmGeometry, target):
    x, y = float(target[0]), float(target[1])
    x3 = x - geom.l4
    return x3 - geom.l1, y


def workspace_contains(geom: ArmGeometry, target) -> bool:
    dx, dy = _wrist_offset(geom, target)
    a = math.hypot(dx, dy)
    if a == 0.0:
        return False
    b, c = geom.l2, geom.l3
    return abs(b - c) - _REACH_TOL <= a <= b + c + _REACH_TOL


def inverse_kinematics(geom: ArmGeometry, target) -> JointAngles:
    """Closed-form triangle solution (elbow folded toward negative theta2)."""
    dx, dy = _wrist_offset(geom, target)
    a = math.hypot(dx, dy)
    b, c = geom.l2, geom.l3
    if a == 0.0:
        raise DegenerateTarget("target puts the wrist on the shoulder pivot")
    if a > b + c + _REACH_TOL:
        raise Unreachable(f"target is {a - (b + c):.6g} m beyond full extension")
    if a < abs(b - c) - _REACH_TOL:
        raise Unreachable(f"target is {abs(b - c) - a:.6g} m inside the minimum reach")
    a = min(max(a, abs(b - c)), b + c)
    alpha = _triangle_angle(b, c, a)        # at the elbow
    gamma = _triangle_angle(b, a, c)        # at the shoulder
    beta = _triangle_angle(a, c, b)         # at the wrist
    delta = math.atan2(-dy, dx)
    theta2 = -(math.pi - alpha)
    theta1 = gamma - delta
    theta3 = beta + delta
    if theta1 > math.pi:
        theta1 -= 2.0 * math.pi
    elif theta1 <= -math.pi:
        theta1 += 2.0 * math.pi
    return JointAngles(theta1, theta2, theta3)


# --------------------------------------------------------------------------
# servo
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ServoModel:
    """Position PID servo with torque saturation and reference slew limit.

    With ``one_sided`` the tendon can only pull: the applied torque is kept
    on the ``pull_sign`` side of zero.
    """

    kp: float = 8.0
    ki: float = 2.0
    kd: float = 0.2
    tau_max: float = 1.4
    rate_max: float = 7.0
    one_sided: bool = False
    pull_sign: float = -1.0
    integral: float = 0.0
    prev_error: float | None = None
    ref: float | None = None

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("servo gains must be non-negative")
        if not self.tau_max > 0:
            raise ValueError("tau_max must be positive")
        if not self.rate_max > 0:
            raise ValueError("rate_max must be positive")
        if self.pull_sign not in (-1.0, 1.0):
            raise ValueError("pull_sign must be +1 or -1")

    def preloaded(self, torque: float) -> "ServoModel":
        """Copy whose integral already holds ``torque`` at zero error."""
        if self.ki == 0:
            return self
        return replace(self, integral=torque / self.ki)

    def pulling(self, tau: float) -> bool:
        return tau * self.pull_sign > 0.0


def servo_step(servo: ServoModel, theta_ref: float, theta: float,
               load_torque: float, dt: float) -> tuple[float, ServoModel]:
    """One control tick. ``load_torque`` is a known joint load, compensated
    by feedforward. Returns ``(applied torque, updated servo)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    ref = theta_ref if servo.ref is None else servo.ref
    step = servo.rate_max * dt
    ref += min(max(theta_ref - ref, -step), step)
    err = ref - theta
    deriv = 0.0 if servo.prev_error is None else (err - servo.prev_error) / dt
    integral = servo.integral + err * dt
    raw = servo.kp * err + servo.ki * integral + servo.kd * deriv - load_torque
    lo, hi = -servo.tau_max, servo.tau_max
    if servo.one_sided:
        if servo.pull_sign > 0:
            lo = 0.0
        else:
            hi = 0.0
    tau = min(max(raw, lo), hi)
    if tau != raw:
        integral = servo.integral  # anti-windup: freeze while clamped
    return tau, replace(servo, integral=integral, prev_error=err, ref=ref)
