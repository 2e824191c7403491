"""SO(3) helpers and 6-D wrench/twist containers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from aeroarm import kernels
from aeroarm.errors import Degenerate, NotSkewSymmetric


def as_vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector {v!r}")
    return v


def hat(v) -> np.ndarray:
    """Cross-product matrix: ``hat(v) @ w == cross(v, w)``."""
    return kernels.hat(as_vec3(v))


def vee(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.shape != (3, 3):
        raise NotSkewSymmetric(f"expected 3x3 matrix, got shape {S.shape}")
    if np.linalg.norm(S + S.T) > 1e-9:
        raise NotSkewSymmetric("matrix is not skew-symmetric")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def exp_so3(phi) -> np.ndarray:
    return kernels.so3_exp(as_vec3(phi))


def rotation_error(R_d, R) -> np.ndarray:
    """Attitude error ``0.5 * vee(R_d^T R - R^T R_d)``."""
    return kernels.rotation_error(np.asarray(R_d, dtype=float), np.asarray(R, dtype=float))


def integrate_rotation(R, omega, dt: float) -> np.ndarray:
    """Propagate ``R`` under constant body rate ``omega`` for ``dt`` seconds."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    R = np.ascontiguousarray(R, dtype=float)
    return kernels.matmul3(R, kernels.so3_exp(as_vec3(omega) * dt))


def reorthonormalize(R) -> np.ndarray:
    """Nearest rotation in the Frobenius sense (polar factor via SVD)."""
    R = np.asarray(R, dtype=float)
    U, s, Vt = np.linalg.svd(R)
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        raise Degenerate("matrix is rank deficient")
    if np.linalg.norm(R.T @ R - np.eye(3)) >= 0.5:
        raise Degenerate("matrix is too far from SO(3) to project")
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def orthonormality_error(R) -> float:
    R = np.asarray(R, dtype=float)
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rpy_to_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """ZYX convention: ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def matrix_to_rpy(R) -> tuple[float, float, float]:
    R = np.asarray(R, dtype=float)
    pitch = float(np.arctan2(-R[2, 0], np.hypot(R[2, 1], R[2, 2])))
    roll = float(np.arctan2(R[2, 1], R[2, 2]))
    yaw = float(np.arctan2(R[1, 0], R[0, 0]))
    return roll, pitch, yaw


@dataclass(frozen=True)
class Wrench:
    force: np.ndarray
    torque: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "force", as_vec3(self.force))
        object.__setattr__(self, "torque", as_vec3(self.torque))

    @classmethod
    def zero(cls) -> "Wrench":
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_vector(cls, x) -> "Wrench":
        x = np.asarray(x, dtype=float).reshape(6)
        return cls(x[:3], x[3:])

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])

    def __add__(self, other: "Wrench") -> "Wrench":
        return Wrench(self.force + other.force, self.torque + other.torque)

    def __sub__(self, other: "Wrench") -> "Wrench":
        return Wrench(self.force - other.force, self.torque - other.torque)

    def __neg__(self) -> "Wrench":
        return Wrench(-self.force, -self.torque)


@dataclass(frozen=True)
class Twist:
    linear: np.ndarray
    angular: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", as_vec3(self.linear))
        object.__setattr__(self, "angular", as_vec3(self.angular))

    @classmethod
    def from_vector(cls, x) -> "Twist":
        x = np.asarray(x, dtype=float).reshape(6)
        return cls(x[:3], x[3:])

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])
