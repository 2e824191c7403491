"""Absorption unit (spring hinges + frictional bulges) and lumped tip compliance.

Each parallelogram stage is a torsion spring ``-kappa * theta`` plus a
Coulomb contact at the bulges. The bulge interference ``r(theta)`` loads the
paired linear springs, which press the rubbing surfaces together with
``F_n = k r``; the friction acts at lever ``r``, so the kinetic friction
torque is ``mu k r^2`` and the breakaway torque ``mu_s k r^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from aeroarm import kernels
from aeroarm.spatial import as_vec3

STUCK = "stuck"
SLIPPING = "slipping"
# Karnopp velocity window, rad/s
STICK_VELOCITY = 1e-3


@dataclass(frozen=True)
class BulgeProfile:
    r0: float = 0.0
    r1: float = 0.004

    def __post_init__(self):
        if self.r0 < 0 or self.r1 < 0:
            raise ValueError("bulge coefficients must be non-negative")


@dataclass(frozen=True)
class AbsorptionUnitParams:
    k: float = 3.0e4
    kappa: float = 0.2
    mu: float = 0.4
    mu_s: float = 0.8
    bulge: BulgeProfile = field(default_factory=BulgeProfile)
    h0: float = 0.01
    disengage: float = 0.0

    def __post_init__(self):
        if not self.k > 0 or not self.kappa > 0 or not self.h0 > 0:
            raise ValueError("k, kappa and h0 must be positive")
        if not 0 <= self.mu <= self.mu_s:
            raise ValueError("need 0 <= mu <= mu_s")
        if not 0 <= self.disengage <= 1:
            raise ValueError("disengage factor must lie in [0, 1]")


@dataclass(frozen=True)
class HingeState:
    theta: float = 0.0
    omega: float = 0.0
    mode: str = STUCK
    E_dissipated: float = 0.0


def bulge_radius(profile: BulgeProfile, theta: float) -> float:
    return max(0.0, profile.r0 + profile.r1 * abs(theta))


def spring_force(params: AbsorptionUnitParams, theta: float) -> float:
    """Linear-spring force ``-k r``; its magnitude is the bulge normal force."""
    return -params.k * bulge_radius(params.bulge, theta)


def hinge_torque(params: AbsorptionUnitParams, theta: float) -> float:
    return -params.kappa * theta


def friction_limits(params: AbsorptionUnitParams, theta: float,
                    engagement: float = 1.0) -> tuple[float, float]:
    """Kinetic and breakaway friction torques at ``theta``."""
    r = bulge_radius(params.bulge, theta)
    normal = params.k * r * engagement
    return r * params.mu * normal, r * params.mu_s * normal


def friction_torque(params: AbsorptionUnitParams, theta: float, omega: float,
                    tau_other: float, mode: str, engagement: float = 1.0):
    """Karnopp stick-slip friction. Returns ``(tau_f, new_mode)``.

    ``tau_other`` is the sum of all other torques on the joint, the hinge
    spring included.
    """
    f_kin, f_static = friction_limits(params, theta, engagement)
    if mode == STUCK or (abs(omega) < STICK_VELOCITY and abs(tau_other) <= f_static):
        if abs(tau_other) <= f_static:
            return -tau_other, STUCK
        return -math.copysign(f_kin, tau_other), SLIPPING
    direction = omega if omega != 0.0 else tau_other
    return -math.copysign(f_kin, direction), SLIPPING


def total_torque_bound(params: AbsorptionUnitParams, theta: float) -> float:
    """Upper bound on the unit's output torque while sliding:
    ``r^2 mu k - r kappa theta``."""
    r = bulge_radius(params.bulge, theta)
    return r * r * params.mu * params.k - r * params.kappa * theta


def _engagement(params: AbsorptionUnitParams, pulling: bool) -> float:
    # an actively pulling tendon opens the bulge contact
    return params.disengage if pulling else 1.0


def absorption_joint_torque(params: AbsorptionUnitParams, state: HingeState, tau_servo: float,
                            dt: float, pulling: bool | None = None, tau_load: float = 0.0):
    """Net joint torque (spring + friction + servo + load) and the updated
    mode / dissipation accumulator.

    ``pulling`` defaults to ``tau_servo < 0``. Dissipation accrues as
    ``-tau_f * omega * dt``.
    """
    if pulling is None:
        pulling = tau_servo < 0.0
    spring = hinge_torque(params, state.theta)
    other = spring + tau_servo + tau_load
    tau_f, mode = friction_torque(params, state.theta, state.omega, other, state.mode,
                                  _engagement(params, pulling))
    loss = max(0.0, -tau_f * state.omega * dt)
    return other + tau_f, replace(state, mode=mode, E_dissipated=state.E_dissipated + loss)


def hinge_step(params: AbsorptionUnitParams, state: HingeState, tau_servo: float,
               inertia: float, dt: float, pulling: bool | None = None,
               tau_load: float = 0.0) -> tuple[HingeState, float]:
    """Integrate one hinge over ``dt`` (energy-consistent time stepping).

    Returns the new state and the friction torque applied during the step.
    """
    if pulling is None:
        pulling = tau_servo < 0.0
    f_kin, f_static = friction_limits(params, state.theta, _engagement(params, pulling))
    theta, omega, stuck, e_diss, tau_f = kernels.hinge_step(
        state.theta, state.omega, state.mode == STUCK, state.E_dissipated,
        tau_servo + tau_load, params.kappa, inertia, f_kin, f_static, STICK_VELOCITY, dt)
    return HingeState(theta, omega, STUCK if stuck else SLIPPING, e_diss), tau_f


def hinge_energy(params: AbsorptionUnitParams, state: HingeState, inertia: float) -> float:
    return 0.5 * inertia * state.omega ** 2 + 0.5 * params.kappa * state.theta ** 2


def equilibrium_distance(params: AbsorptionUnitParams, theta: float, n: int = 20001) -> float:
    """Distance from ``theta`` to the nearest angle where static friction can
    hold the spring (an unactuated rest configuration)."""
    def holds(th):
        return params.kappa * abs(th) <= friction_limits(params, th)[1]

    if holds(theta):
        return 0.0
    grid = np.linspace(-abs(theta), abs(theta), n)
    ok = [g for g in grid if holds(g)]
    return float(min(abs(g - theta) for g in ok))


def _as3(x, name):
    A = np.asarray(x, dtype=float)
    if A.shape == (3,):
        A = np.diag(A)
    if A.shape == ():
        A = float(A) * np.eye(3)
    if A.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3")
    return np.ascontiguousarray(A)


@dataclass(frozen=True)
class LumpedArmParams:
    """Cartesian tip compliance ``M_A a + D_A v + K_A p = -F_A``."""

    M_A: np.ndarray = field(default_factory=lambda: 0.02 * np.eye(3))
    D_A: np.ndarray = field(default_factory=lambda: 6.0 * np.eye(3))
    K_A: np.ndarray = field(default_factory=lambda: 120.0 * np.eye(3))

    def __post_init__(self):
        M, D, K = _as3(self.M_A, "M_A"), _as3(self.D_A, "D_A"), _as3(self.K_A, "K_A")
        for name, A in (("M_A", M), ("D_A", D), ("K_A", K)):
            if np.max(np.abs(A - A.T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
                raise ValueError(f"{name} must be symmetric")
        if np.min(np.linalg.eigvalsh(M)) <= 0:
            raise ValueError("M_A must be positive definite")
        if np.min(np.linalg.eigvalsh(D)) < 0 or np.min(np.linalg.eigvalsh(K)) < 0:
            raise ValueError("D_A and K_A must be positive semidefinite")
        object.__setattr__(self, "M_A", M)
        object.__setattr__(self, "D_A", D)
        object.__setattr__(self, "K_A", K)

    @property
    def M_inv(self) -> np.ndarray:
        return np.ascontiguousarray(np.linalg.inv(self.M_A))


def lumped_arm_step(params: LumpedArmParams, p_A, v_A, F_A, dt: float):
    if not dt > 0:
        raise ValueError("dt must be positive")
    return kernels.lumped_step(params.M_inv, params.D_A, params.K_A,
                               as_vec3(p_A), as_vec3(v_A), as_vec3(F_A), dt)
