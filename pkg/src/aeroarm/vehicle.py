"""Multirotor rigid-body model and its fixed-step integrator.

Conventions: ``p`` is the world position of the body origin, ``R`` maps
body to world, ``v`` and ``w`` are body-frame linear and angular rates, so
``pdot = R @ v``. The body origin is the centre of mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from aeroarm import kernels
from aeroarm.spatial import Twist, Wrench, as_vec3, reorthonormalize

GRAVITY = 9.81
# take-off mass: servo 231.8 g + arm 167.6 g + platform 3553.6 g
TOTAL_MASS = 3.953


@dataclass(frozen=True)
class VehicleParams:
    mass: float = TOTAL_MASS
    inertia_rot: np.ndarray = field(default_factory=lambda: np.diag([0.05, 0.05, 0.09]))
    gravity: float = GRAVITY

    def __post_init__(self):
        J = np.ascontiguousarray(self.inertia_rot, dtype=float)
        if J.shape != (3, 3):
            raise ValueError("inertia_rot must be 3x3")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if np.max(np.abs(J - J.T)) > 1e-12 * max(1.0, np.max(np.abs(J))):
            raise ValueError("inertia_rot must be symmetric")
        if np.min(np.linalg.eigvalsh(J)) <= 0:
            raise ValueError("inertia_rot must be positive definite")
        object.__setattr__(self, "inertia_rot", J)
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "gravity", float(self.gravity))

    @property
    def inertia_inv(self) -> np.ndarray:
        return np.ascontiguousarray(np.linalg.inv(self.inertia_rot))

    @property
    def M(self) -> np.ndarray:
        """6x6 generalized inertia ``blockdiag(m I, J)``."""
        out = np.zeros((6, 6))
        out[:3, :3] = self.mass * np.eye(3)
        out[3:, 3:] = self.inertia_rot
        return out


@dataclass(frozen=True)
class VehicleState:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    w: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "p", as_vec3(self.p))
        object.__setattr__(self, "v", as_vec3(self.v))
        object.__setattr__(self, "w", as_vec3(self.w))
        R = np.ascontiguousarray(self.R, dtype=float)
        if R.shape != (3, 3) or not np.all(np.isfinite(R)):
            raise ValueError("R must be a finite 3x3 matrix")
        object.__setattr__(self, "R", R)

    @property
    def twist(self) -> Twist:
        return Twist(self.v, self.w)

    @property
    def v_world(self) -> np.ndarray:
        return self.R @ self.v

    def reorthonormalized(self) -> "VehicleState":
        return replace(self, R=reorthonormalize(self.R))


def gravity_wrench(params: VehicleParams, R) -> Wrench:
    """Gravity entry g(R) of the Newton-Euler model, in the body frame.

    It sits on the left-hand side of ``M a + c + g = tau``, so it equals the
    wrench that exactly holds the vehicle in hover: ``m g R^T e_z``, no torque.
    """
    R = np.ascontiguousarray(R, dtype=float)
    return Wrench.from_vector(kernels.gravity_term(params.mass, params.gravity, R))


def coriolis_wrench(params: VehicleParams, twist: Twist) -> Wrench:
    """Body-frame bias wrench ``[m w x v ; w x (J w)]``."""
    return Wrench.from_vector(
        kernels.coriolis_term(params.mass, params.inertia_rot, twist.linear, twist.angular))


def dynamics_deriv(params: VehicleParams, state: VehicleState,
                   tau_c: Wrench, tau_ext: Wrench) -> tuple[Twist, np.ndarray, np.ndarray]:
    """Return ``(body acceleration, pdot, body rate)``."""
    total = tau_c.vector + tau_ext.vector
    vdot, wdot = kernels.rigid_accel(params.mass, params.inertia_rot, params.inertia_inv,
                                     params.gravity, state.R, state.v, state.w, total)
    return Twist(vdot, wdot), state.R @ state.v, state.w.copy()


AccelFn = Callable[[float, VehicleState], tuple[np.ndarray, np.ndarray]]
WrenchFn = Callable[[float, VehicleState], tuple[Wrench, Wrench]]


def integrate_rkmk4(state: VehicleState, accel_fn: AccelFn, dt: float,
                    t: float = 0.0) -> VehicleState:
    """Classical RK4 on ``(p, v, w)`` with the rotation advanced in exponential
    coordinates (Munthe-Kaas), which keeps fourth order on SO(3).

    ``accel_fn(t, state)`` returns body accelerations ``(vdot, wdot)``.
    """
    if not 0 < dt <= 0.01:
        raise ValueError("dt must lie in (0, 0.01]")
    cs = (0.0, 0.5, 0.5, 1.0)
    ks = []
    prev = None
    for c in cs:
        if prev is None:
            xi = np.zeros(3)
            st = state
        else:
            kp, kv, kw, kx = prev
            a = c * dt
            xi = a * kx
            st = VehicleState(state.p + a * kp,
                              kernels.matmul3(state.R, kernels.so3_exp(xi)),
                              state.v + a * kv, state.w + a * kw)
        vdot, wdot = accel_fn(t + c * dt, st)
        prev = (st.R @ st.v, np.asarray(vdot, dtype=float), np.asarray(wdot, dtype=float),
                kernels.dexp_inv(xi, st.w))
        ks.append(prev)

    def comb(i):
        return dt / 6.0 * (ks[0][i] + 2.0 * ks[1][i] + 2.0 * ks[2][i] + ks[3][i])

    R1 = kernels.matmul3(state.R, kernels.so3_exp(comb(3)))
    return VehicleState(state.p + comb(0), R1, state.v + comb(1), state.w + comb(2))


def step_rk4(params: VehicleParams, state: VehicleState, wrench_fn: WrenchFn,
             dt: float, t: float = 0.0) -> VehicleState:
    """Advance one step; ``wrench_fn(t, state) -> (tau_c, tau_ext)`` is
    evaluated at every stage."""

    def accel(ti, st):
        tau_c, tau_ext = wrench_fn(ti, st)
        acc, _, _ = dynamics_deriv(params, st, tau_c, tau_ext)
        return acc.linear, acc.angular

    return integrate_rkmk4(state, accel, dt, t)


def mechanical_energy(params: VehicleParams, state: VehicleState) -> float:
    """Kinetic plus gravitational potential energy (reference height z = 0)."""
    kin = 0.5 * params.mass * state.v @ state.v + 0.5 * state.w @ params.inertia_rot @ state.w
    return float(kin + params.mass * params.gravity * state.p[2])
