"""Scripted versions of the two flight experiments: free-flight arm motion
and a head-on wall impact."""

from __future__ import annotations

import math
from typing import Any

from aeroarm.harness.scenario import DEFAULTS, Scenario, from_dict
from aeroarm.kinematics import ArmGeometry

HOVER_P = [0.0, 0.0, 1.0]


def _tip_x(cfg_arm: dict) -> float:
    g = ArmGeometry(**cfg_arm["geometry"])
    from aeroarm.kinematics import forward_kinematics, inverse_kinematics

    q = inverse_kinematics(g, cfg_arm["initial_target"])
    return cfg_arm["mount"][0] + float(forward_kinematics(g, q)[0])


def impact_config(speed: float = 0.6, arm_mode: str = "compliant", approach_time: float = 0.2,
                  push_in: float = 0.12, settle_time: float = 1.3, dt: float = 1e-4,
                  sample_period: float = 5e-4, arm: dict | None = None) -> dict[str, Any]:
    """Platform flies at ``speed`` along +x into a wall ahead of the arm tip.

    The setpoint moves with the platform and stops ``push_in`` metres past
    the first-touch position, like a pilot holding the stick into the wall.
    """
    arm_cfg = {**DEFAULTS["arm"], **(arm or {})}
    gap = speed * approach_time
    wall_x = HOVER_P[0] + _tip_x(arm_cfg) + gap
    t_stop = approach_time + push_in / speed
    cfg: dict[str, Any] = {
        "duration": round(t_stop + settle_time, 6),
        "dt": dt,
        "sample_period": sample_period,
        "arm_mode": arm_mode,
        "vehicle": {"initial": {"p": list(HOVER_P), "v": [speed, 0.0, 0.0]}},
        "wall": {"point": [wall_x, 0.0, 0.0], "normal": [-1.0, 0.0, 0.0]},
        "setpoints": [
            {"t": 0.0, "p": list(HOVER_P), "v": [speed, 0.0, 0.0]},
            {"t": t_stop, "p": [HOVER_P[0] + gap + push_in, 0.0, HOVER_P[2]]},
        ],
    }
    if arm:
        cfg["arm"] = arm
    return cfg


def impact_scenario(speed: float = 0.6, arm_mode: str = "compliant", **kw) -> Scenario:
    return from_dict(impact_config(speed, arm_mode, **kw))


def free_flight_config(duration: float = 6.0, amplitude: float = 0.03, period: float = 2.0,
                       knots_per_period: int = 40, dt: float = 1e-3) -> dict[str, Any]:
    """Hover while the tip target sweeps sinusoidally along the arm axis."""
    cx, cy = DEFAULTS["arm"]["initial_target"]
    n = int(duration / period * knots_per_period)
    script = []
    for i in range(n + 1):
        t = i * duration / n
        script.append({"t": round(t, 9),
                       "target": [cx + amplitude * math.sin(2 * math.pi * t / period),
                                  cy + amplitude * (1 - math.cos(2 * math.pi * t / period))]})
    return {"duration": duration, "dt": dt, "arm_mode": "compliant", "arm_script": script}
