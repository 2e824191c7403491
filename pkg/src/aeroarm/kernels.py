"""Hot numeric kernels.

Every function here is plain numpy/scalar Python that numba can compile in
nopython mode. When numba is importable and ``AEROARM_NUMBA`` is not set to
a false value (``0``, ``false``, ``no``, ``off``), the kernels are compiled
with ``@njit(cache=True)``; otherwise the same source runs as ordinary
Python. The flag is read once, at import time.

Kernels work on float64 arrays: 3-vectors, 3x3 / 6x6 matrices and 6-vector
wrenches stacked as ``[force, torque]``. Small products are written as
explicit loops so that both paths round identically regardless of BLAS.
"""

import math
import os

import numpy as np

_FALSE = ("0", "false", "no", "off")


def _numba_requested():
    return os.environ.get("AEROARM_NUMBA", "1").strip().lower() not in _FALSE


NUMBA_ENABLED = False
if _numba_requested():
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dependency
        NUMBA_ENABLED = False


def jit(fn):
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn


def backend():
    return "numba" if NUMBA_ENABLED else "numpy"


# --------------------------------------------------------------------------
# small linear algebra
# --------------------------------------------------------------------------


@jit
def cross3(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@jit
def matvec(A, x):
    n = A.shape[0]
    m = A.shape[1]
    out = np.zeros(n)
    for i in range(n):
        s = 0.0
        for j in range(m):
            s += A[i, j] * x[j]
        out[i] = s
    return out


@jit
def tmatvec(A, x):
    """``A.T @ x``."""
    n = A.shape[1]
    m = A.shape[0]
    out = np.zeros(n)
    for i in range(n):
        s = 0.0
        for j in range(m):
            s += A[j, i] * x[j]
        out[i] = s
    return out


@jit
def matmul3(A, B):
    out = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            s = 0.0
            for k in range(3):
                s += A[i, k] * B[k, j]
            out[i, j] = s
    return out


@jit
def tmatmul3(A, B):
    """``A.T @ B``."""
    out = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            s = 0.0
            for k in range(3):
                s += A[k, i] * B[k, j]
            out[i, j] = s
    return out


@jit
def hat(v):
    S = np.zeros((3, 3))
    S[0, 1] = -v[2]
    S[0, 2] = v[1]
    S[1, 0] = v[2]
    S[1, 2] = -v[0]
    S[2, 0] = -v[1]
    S[2, 1] = v[0]
    return S


@jit
def so3_exp(phi):
    """Rodrigues formula; second-order series below 1e-8 rad."""
    th2 = phi[0] * phi[0] + phi[1] * phi[1] + phi[2] * phi[2]
    th = math.sqrt(th2)
    if th < 1e-8:
        a = 1.0 - th2 / 6.0
        b = 0.5 - th2 / 24.0
    else:
        a = math.sin(th) / th
        s = math.sin(0.5 * th)
        b = 2.0 * s * s / th2
    K = hat(phi)
    K2 = matmul3(K, K)
    R = np.zeros((3, 3))
    for i in range(3):
        R[i, i] = 1.0
        for j in range(3):
            R[i, j] += a * K[i, j] + b * K2[i, j]
    return R


@jit
def rotation_error(R_d, R):
    A = tmatmul3(R_d, R)
    out = np.empty(3)
    # vee(A - A.T) / 2
    out[0] = 0.5 * (A[2, 1] - A[1, 2])
    out[1] = 0.5 * (A[0, 2] - A[2, 0])
    out[2] = 0.5 * (A[1, 0] - A[0, 1])
    return out


@jit
def dexp_inv(xi, w):
    """Body-rate to log-coordinate rate for ``R0 @ exp(hat(xi))`` (4th order)."""
    c1 = cross3(xi, w)
    c2 = cross3(xi, c1)
    out = np.empty(3)
    for i in range(3):
        out[i] = w[i] + 0.5 * c1[i] + c2[i] / 12.0
    return out


# --------------------------------------------------------------------------
# rigid body
# --------------------------------------------------------------------------


@jit
def gravity_term(mass, gravity, R):
    """Gravity entry of the Newton-Euler model, body frame (hover thrust)."""
    out = np.zeros(6)
    mg = mass * gravity
    out[0] = mg * R[2, 0]
    out[1] = mg * R[2, 1]
    out[2] = mg * R[2, 2]
    return out


@jit
def coriolis_term(mass, J, v, w):
    out = np.zeros(6)
    wv = cross3(w, v)
    wJw = cross3(w, matvec(J, w))
    for i in range(3):
        out[i] = mass * wv[i]
        out[3 + i] = wJw[i]
    return out


@jit
def rigid_accel(mass, J, Jinv, gravity, R, v, w, wrench):
    """Body accelerations from the total applied wrench."""
    c = coriolis_term(mass, J, v, w)
    g = gravity_term(mass, gravity, R)
    vdot = np.empty(3)
    rhs = np.empty(3)
    for i in range(3):
        vdot[i] = (wrench[i] - c[i] - g[i]) / mass
        rhs[i] = wrench[3 + i] - c[3 + i] - g[3 + i]
    wdot = matvec(Jinv, rhs)
    return vdot, wdot


@jit
def pose_errors(p, R, v, w, p_d, R_d, v_d, w_d):
    e_pos = np.empty(6)
    e_vel = np.empty(6)
    dp = p - p_d
    e_p = tmatvec(R, dp)
    e_R = rotation_error(R_d, R)
    e_v = v - tmatvec(R, v_d)
    e_w = w - matvec(tmatmul3(R, R_d), w_d)
    for i in range(3):
        e_pos[i] = e_p[i]
        e_pos[3 + i] = e_R[i]
        e_vel[i] = e_v[i]
        e_vel[3 + i] = e_w[i]
    return e_pos, e_vel


@jit
def impedance_accel(Mv_inv, Dv, Kv, e_pos, e_vel, tau_hat):
    rhs = tau_hat - matvec(Dv, e_vel) - matvec(Kv, e_pos)
    return matvec(Mv_inv, rhs)


@jit
def impedance_wrench(mass, J, gravity, Mv_inv, Dv, Kv,
                     p, R, v, w, p_d, R_d, v_d, w_d, tau_hat, tau_ff):
    """Feedback-linearizing wrench that turns the rigid body into the
    target impedance. ``tau_ff`` is a known wrench cancelled outright."""
    e_pos, e_vel = pose_errors(p, R, v, w, p_d, R_d, v_d, w_d)
    a_des = impedance_accel(Mv_inv, Dv, Kv, e_pos, e_vel, tau_hat)
    c = coriolis_term(mass, J, v, w)
    g = gravity_term(mass, gravity, R)
    ang = matvec(J, a_des[3:])
    out = np.empty(6)
    for i in range(3):
        out[i] = mass * a_des[i]
        out[3 + i] = ang[i]
    for i in range(6):
        out[i] += c[i] + g[i] - tau_hat[i] - tau_ff[i]
    return out


@jit
def control_law(mode, mass, J, gravity, Mv_inv, Dv, Kv,
                p, R, v, w, p_d, R_d, v_d, w_d, tau_hat, tau_ff):
    # mode 0: impedance, 1: gravity + feedforward compensation only, 2: off
    if mode == 0:
        return impedance_wrench(mass, J, gravity, Mv_inv, Dv, Kv,
                                p, R, v, w, p_d, R_d, v_d, w_d, tau_hat, tau_ff)
    out = np.zeros(6)
    if mode == 1:
        g = gravity_term(mass, gravity, R)
        for i in range(6):
            out[i] = g[i] - tau_ff[i]
    return out


@jit
def _stage(mode, mass, J, Jinv, gravity, Mv_inv, Dv, Kv,
           p, R, v, w, p_d, R_d, v_d, w_d, tau_hat, tau_ff, tau_ext):
    tau_c = control_law(mode, mass, J, gravity, Mv_inv, Dv, Kv,
                        p, R, v, w, p_d, R_d, v_d, w_d, tau_hat, tau_ff)
    return rigid_accel(mass, J, Jinv, gravity, R, v, w, tau_c + tau_ext)


@jit
def closed_loop_rk4(mode, p, R, v, w, dt, mass, J, Jinv, gravity,
                    Mv_inv, Dv, Kv, p_d, R_d, v_d, w_d,
                    tau_hat, tau_ff, tau_ext):
    """One Runge-Kutta-Munthe-Kaas step of the controlled vehicle.

    The control law is re-evaluated at every stage; external wrenches are
    held constant over the step and the desired position advances with
    ``v_d``. Returns the new ``(p, R, v, w)`` and the stage-one body
    accelerations ``(vdot, wdot)``.
    """
    xi0 = np.zeros(3)
    h = dt
    cs = (0.0, 0.5, 0.5, 1.0)
    kp = np.zeros((4, 3))
    kv = np.zeros((4, 3))
    kw = np.zeros((4, 3))
    kx = np.zeros((4, 3))
    pi = p.copy()
    vi = v.copy()
    wi = w.copy()
    xi = xi0.copy()
    vdot0 = np.zeros(3)
    wdot0 = np.zeros(3)
    for s in range(4):
        if s > 0:
            a = cs[s] * h
            for j in range(3):
                pi[j] = p[j] + a * kp[s - 1, j]
                vi[j] = v[j] + a * kv[s - 1, j]
                wi[j] = w[j] + a * kw[s - 1, j]
                xi[j] = a * kx[s - 1, j]
        Ri = matmul3(R, so3_exp(xi))
        pdi = p_d + cs[s] * h * v_d
        vdot, wdot = _stage(mode, mass, J, Jinv, gravity, Mv_inv, Dv, Kv,
                            pi, Ri, vi, wi, pdi, R_d, v_d, w_d,
                            tau_hat, tau_ff, tau_ext)
        if s == 0:
            vdot0 = vdot
            wdot0 = wdot
        kp[s] = matvec(Ri, vi)
        kv[s] = vdot
        kw[s] = wdot
        kx[s] = dexp_inv(xi, wi)
    p1 = np.empty(3)
    v1 = np.empty(3)
    w1 = np.empty(3)
    xi1 = np.empty(3)
    for j in range(3):
        p1[j] = p[j] + h / 6.0 * (kp[0, j] + 2.0 * kp[1, j] + 2.0 * kp[2, j] + kp[3, j])
        v1[j] = v[j] + h / 6.0 * (kv[0, j] + 2.0 * kv[1, j] + 2.0 * kv[2, j] + kv[3, j])
        w1[j] = w[j] + h / 6.0 * (kw[0, j] + 2.0 * kw[1, j] + 2.0 * kw[2, j] + kw[3, j])
        xi1[j] = h / 6.0 * (kx[0, j] + 2.0 * kx[1, j] + 2.0 * kx[2, j] + kx[3, j])
    R1 = matmul3(R, so3_exp(xi1))
    return p1, R1, v1, w1, vdot0, wdot0


# --------------------------------------------------------------------------
# compliant arm
# --------------------------------------------------------------------------


@jit
def _midpoint(theta, omega, tau, kappa, inertia, h):
    # implicit midpoint for a linear torsion spring + constant torque
    th1 = (theta + h * omega + (h * h / (2.0 * inertia)) * (tau - 0.5 * kappa * theta)) / (
        1.0 + h * h * kappa / (4.0 * inertia))
    om1 = omega + (h / inertia) * (tau - 0.5 * kappa * (theta + th1))
    return th1, om1


@jit
def hinge_step(theta, omega, stuck, e_diss, tau_other, kappa, inertia,
               f_kin, f_static, w_stick, dt):
    """Advance one absorption hinge by ``dt``.

    ``tau_other`` is every torque except the hinge spring and bulge friction;
    ``f_kin``/``f_static`` are the kinetic and breakaway friction torques at
    the current angle. The spring is integrated with the implicit midpoint
    rule, so over a step the mechanical energy changes by exactly the work of
    the constant torques. Returns ``(theta, omega, stuck, e_diss, tau_f)``.
    """
    drive = tau_other - kappa * theta
    if stuck or omega == 0.0:
        if abs(drive) <= f_static:
            return theta, 0.0, True, e_diss, -drive
        sgn = 1.0 if drive > 0.0 else -1.0
        tau_f = -sgn * f_kin
        th1, om1 = _midpoint(theta, 0.0, tau_other + tau_f, kappa, inertia, dt)
        return th1, om1, False, e_diss + f_kin * abs(th1 - theta), tau_f

    sgn = 1.0 if omega > 0.0 else -1.0
    tau_f = -sgn * f_kin
    th1, om1 = _midpoint(theta, omega, tau_other + tau_f, kappa, inertia, dt)
    if om1 * sgn > 0.0 and abs(om1) >= w_stick:
        return th1, om1, False, e_diss + f_kin * abs(th1 - theta), tau_f

    # velocity reaches zero inside the step: stop in place, kinetic energy is
    # absorbed by the contact; then either hold or break away from rest
    e_diss = e_diss + 0.5 * inertia * omega * omega
    if abs(drive) <= f_static:
        return theta, 0.0, True, e_diss, -drive
    sgn = 1.0 if drive > 0.0 else -1.0
    tau_f = -sgn * f_kin
    th1, om1 = _midpoint(theta, 0.0, tau_other + tau_f, kappa, inertia, dt)
    return th1, om1, False, e_diss + f_kin * abs(th1 - theta), tau_f


@jit
def lumped_step(M_inv, D, K, p, v, F, dt):
    """Semi-implicit Euler for ``M a + D v + K p = -F``."""
    acc = matvec(M_inv, -F - matvec(D, v) - matvec(K, p))
    v1 = v + dt * acc
    p1 = p + dt * v1
    return p1, v1


@jit
def contact_force(k_w, d_w, normal, point, tip_pos, tip_vel):
    """Non-adhesive penalty force of a plane on a point. Returns
    ``(force, depth, depth_rate)``."""
    depth = 0.0
    rate = 0.0
    for i in range(3):
        depth -= (tip_pos[i] - point[i]) * normal[i]
        rate -= tip_vel[i] * normal[i]
    out = np.zeros(3)
    if depth <= 0.0:
        return out, 0.0, rate
    mag = k_w * depth
    if rate > 0.0:
        mag += d_w * rate
    if mag < 0.0:
        mag = 0.0
    for i in range(3):
        out[i] = mag * normal[i]
    return out, depth, rate
