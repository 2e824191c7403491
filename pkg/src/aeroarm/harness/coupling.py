"""Wall contact and arm-to-platform force transfer."""

from __future__ import annotations

import numpy as np

from aeroarm import kernels
from aeroarm.spatial import Wrench, as_vec3


def contact_force(wall, tip_pos, tip_vel) -> np.ndarray:
    """Penalty force of the wall on the tip (world frame). Never adhesive."""
    f, _, _ = kernels.contact_force(wall.k_w, wall.d_w, wall.normal_array, wall.point_array,
                                    as_vec3(tip_pos), as_vec3(tip_vel))
    return f


def couple_arm_wrench(force_on_arm, mount, tip) -> Wrench:
    """Wrench about the body origin produced on the platform when
    ``force_on_arm`` (body frame) acts on the arm at ``tip`` (relative to the
    mount). The arm links are massless here, so the force is passed through.
    """
    f = as_vec3(force_on_arm)
    r = as_vec3(mount) + as_vec3(tip)
    return Wrench(f, np.cross(r, f))


def reaction_on_arm(platform_wrench: Wrench) -> Wrench:
    """The platform's wrench on the arm, by action-reaction."""
    return -platform_wrench


def trim_wrench(trim: dict, gravity: float) -> Wrench:
    """Static moment of the arm and servo weights about the body origin.

    Only the torque is returned: their weight is already part of the vehicle
    mass, so adding the force again would count it twice.
    """
    torque = np.zeros(3)
    for mass, offset in ((trim["arm_mass"], trim["arm_offset"]),
                         (trim["servo_mass"], trim["servo_offset"])):
        torque += np.cross(np.asarray(offset, dtype=float), [0.0, 0.0, -mass * gravity])
    return Wrench(np.zeros(3), torque)
