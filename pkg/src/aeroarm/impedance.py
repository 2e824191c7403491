"""Impedance control of the platform.

The controller is an exact feedback linearization of the rigid-body model
onto the target impedance

    M_v a + D_v [e_v; e_w] + K_v [e_p; e_R] = tau_hat

so that with a perfect wrench estimate the closed loop *is* that
mass-spring-damper in the body-frame error coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from aeroarm import kernels
from aeroarm.errors import SingularGains
from aeroarm.spatial import Wrench, as_vec3
from aeroarm.vehicle import VehicleParams, VehicleState


def _as6(x, name):
    A = np.asarray(x, dtype=float)
    if A.shape == (6,):
        A = np.diag(A)
    if A.shape != (6, 6) or not np.all(np.isfinite(A)):
        raise ValueError(f"{name} must be 6x6 (or a 6-vector diagonal)")
    return np.ascontiguousarray(A)


@dataclass(frozen=True)
class ImpedanceGains:
    M_v: np.ndarray
    D_v: np.ndarray
    K_v: np.ndarray

    def __post_init__(self):
        M, D, K = (_as6(self.M_v, "M_v"), _as6(self.D_v, "D_v"), _as6(self.K_v, "K_v"))
        for name, A in (("M_v", M), ("D_v", D), ("K_v", K)):
            if np.max(np.abs(A - A.T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
                raise ValueError(f"{name} must be symmetric")
        if np.min(np.linalg.eigvalsh(D)) < -1e-12 or np.min(np.linalg.eigvalsh(K)) < -1e-12:
            raise ValueError("D_v and K_v must be positive semidefinite")
        if np.min(np.linalg.eigvalsh(M)) <= 0 or np.linalg.cond(M) > 1e12:
            raise SingularGains("M_v must be symmetric positive definite")
        object.__setattr__(self, "M_v", M)
        object.__setattr__(self, "D_v", D)
        object.__setattr__(self, "K_v", K)

    @property
    def M_v_inv(self) -> np.ndarray:
        return np.ascontiguousarray(np.linalg.inv(self.M_v))

    @classmethod
    def default(cls, params: VehicleParams) -> "ImpedanceGains":
        # virtual inertia equal to the real one; 0.5 damping ratio in translation
        return cls(params.M, np.diag([8.0, 8.0, 8.0, 1.0, 1.0, 1.0]),
                   np.diag([16.0, 16.0, 16.0, 2.0, 2.0, 2.0]))


@dataclass(frozen=True)
class Setpoint:
    p_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R_d: np.ndarray = field(default_factory=lambda: np.eye(3))
    v_d: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world frame
    w_d: np.ndarray = field(default_factory=lambda: np.zeros(3))  # desired body frame

    def __post_init__(self):
        object.__setattr__(self, "p_d", as_vec3(self.p_d))
        object.__setattr__(self, "v_d", as_vec3(self.v_d))
        object.__setattr__(self, "w_d", as_vec3(self.w_d))
        R = np.ascontiguousarray(self.R_d, dtype=float)
        if R.shape != (3, 3) or np.linalg.norm(R.T @ R - np.eye(3)) > 1e-6:
            raise ValueError("R_d must be a rotation matrix")
        object.__setattr__(self, "R_d", R)

    @classmethod
    def at(cls, state: VehicleState) -> "Setpoint":
        """Setpoint matching ``state`` exactly (zero errors)."""
        return cls(state.p, state.R, state.R @ state.v, state.w)


def pose_errors(state: VehicleState, sp: Setpoint):
    """Body-frame errors ``(e_p, e_R, e_v, e_w)``."""
    e_pos, e_vel = kernels.pose_errors(state.p, state.R, state.v, state.w,
                                       sp.p_d, sp.R_d, sp.v_d, sp.w_d)
    return e_pos[:3], e_pos[3:], e_vel[:3], e_vel[3:]


def desired_accel(gains: ImpedanceGains, state: VehicleState, sp: Setpoint,
                  tau_hat: Wrench) -> np.ndarray:
    """Body acceleration (6-vector) prescribed by the target impedance."""
    e_pos, e_vel = kernels.pose_errors(state.p, state.R, state.v, state.w,
                                       sp.p_d, sp.R_d, sp.v_d, sp.w_d)
    return kernels.impedance_accel(gains.M_v_inv, gains.D_v, gains.K_v, e_pos, e_vel,
                                   tau_hat.vector)


def control_wrench(params: VehicleParams, gains: ImpedanceGains, state: VehicleState,
                   sp: Setpoint, tau_hat: Wrench, feedforward: Wrench | None = None) -> Wrench:
    """Platform wrench command.

    ``tau_c = M a_des + c + g - tau_hat - feedforward`` with
    ``a_des = M_v^-1 (tau_hat - D_v e_vel - K_v e_pos)``. ``feedforward`` is a
    model-known external wrench (e.g. the arm's static trim) cancelled
    outright. If the true external wrench equals ``tau_hat + feedforward`` the
    body acceleration equals ``a_des`` exactly.
    """
    ff = np.zeros(6) if feedforward is None else feedforward.vector
    out = kernels.impedance_wrench(params.mass, params.inertia_rot, params.gravity,
                                   gains.M_v_inv, gains.D_v, gains.K_v,
                                   state.p, state.R, state.v, state.w,
                                   sp.p_d, sp.R_d, sp.v_d, sp.w_d, tau_hat.vector, ff)
    return Wrench.from_vector(out)


class WrenchEstimator:
    """First-order low-pass emulating external-wrench estimation lag.

    ``time_constant == 0`` passes the true wrench straight through.
    """

    def __init__(self, time_constant: float = 0.0):
        if time_constant < 0:
            raise ValueError("time_constant must be >= 0")
        self.time_constant = float(time_constant)
        self._y = None

    def update(self, tau_ext: np.ndarray, dt: float) -> np.ndarray:
        x = np.asarray(tau_ext, dtype=float)
        if self.time_constant == 0.0:
            self._y = x.copy()
        elif self._y is None:
            self._y = x.copy()
        else:
            a = dt / (self.time_constant + dt)
            self._y = self._y + a * (x - self._y)
        return self._y
