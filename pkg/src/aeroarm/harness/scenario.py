"""Scenario files: YAML documents validated against a fixed schema.

Every key has a documented default (see ``docs/scenario_schema.md``);
unknown keys are rejected. ``serialize(parse(text))`` reparses to an equal
scenario.
"""

from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass
from typing import Any

import numpy as np
import yaml

from aeroarm.compliant import AbsorptionUnitParams, BulgeProfile, LumpedArmParams
from aeroarm.errors import ParseError, ValidationError
from aeroarm.impedance import ImpedanceGains, Setpoint
from aeroarm.kinematics import ArmGeometry, ServoModel
from aeroarm.spatial import rpy_to_matrix
from aeroarm.vehicle import VehicleParams, VehicleState

ARM_MODES = ("rigid", "compliant")
CONTROL_MODES = ("impedance", "gravity_only", "off")

# ``None`` marks a key whose value is free-form (list, null, number).
DEFAULTS: dict[str, Any] = {
    "duration": 1.0,
    "dt": 1.0e-3,
    "seed": 0,
    "sample_period": None,
    "arm_mode": "compliant",
    "control": "impedance",
    "reortho_every": 100,
    "vehicle": {
        "mass": 3.953,
        "inertia": [0.05, 0.05, 0.09],
        "gravity": 9.81,
        "initial": {"p": [0.0, 0.0, 1.0], "rpy": [0.0, 0.0, 0.0],
                    "v": [0.0, 0.0, 0.0], "w": [0.0, 0.0, 0.0]},
    },
    "gains": {
        "M_v": None,
        "D_v": [8.0, 8.0, 8.0, 1.0, 1.0, 1.0],
        "K_v": [16.0, 16.0, 16.0, 2.0, 2.0, 2.0],
    },
    "estimator": {"time_constant": 0.0},
    "arm": {
        "geometry": {"l1": 0.03, "l2": 0.11, "l3": 0.11, "l4": 0.05},
        "mount": [0.25, 0.0, 0.0],
        "joint_inertia": 3.0e-4,
        "joint_limits": [[-math.pi, math.pi], [-math.pi, 0.0]],
        "one_sided": True,
        "pull_sign": [1.0, -1.0],
        "initial_target": [0.24, 0.0],
        "absorption": {
            "k": 3.0e4, "kappa": 0.2, "mu": 0.4, "mu_s": 0.8, "h0": 0.01,
            "disengage": 0.0, "bulge": {"r0": 0.0, "r1": 0.004},
        },
        "lumped": {"M_A": [0.02, 0.02, 0.02], "D_A": [6.0, 6.0, 6.0],
                   "K_A": [120.0, 120.0, 120.0]},
        "servo": {"kp": 8.0, "ki": 2.0, "kd": 0.2, "tau_max": 1.4, "rate_max": 7.0},
        "trim": {"arm_mass": 0.1676, "arm_offset": [0.35, 0.0, 0.0],
                 "servo_mass": 0.2318, "servo_offset": [-0.1, 0.0, -0.05]},
    },
    "wall": None,
    "setpoints": [],
    "arm_script": [],
    "noise": {"accel_std": 0.0},
}

WALL_DEFAULTS = {"k_w": 2.0e4, "d_w": 50.0, "normal": [-1.0, 0.0, 0.0],
                 "point": [1.0, 0.0, 0.0]}
SETPOINT_DEFAULTS = {"t": 0.0, "p": [0.0, 0.0, 1.0], "v": [0.0, 0.0, 0.0],
                     "rpy": [0.0, 0.0, 0.0], "w": [0.0, 0.0, 0.0]}
ARM_KNOT_DEFAULTS = {"t": 0.0, "target": [0.24, 0.0]}



class Loader(yaml.SafeLoader):
    """Safe loader that also reads YAML 1.2 floats such as ``1.0e4``."""


Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                  |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                  |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                  |[-+]?\.(?:inf|Inf|INF)
                  |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def load_yaml(text: str):
    return yaml.load(text, Loader=Loader)


# keys whose value is a nested section rather than a leaf
_SECTIONS = {"vehicle", "vehicle.initial", "gains", "estimator", "arm", "arm.geometry",
             "arm.absorption", "arm.absorption.bulge", "arm.lumped", "arm.servo",
             "arm.trim", "noise"}


def _merge(defaults: dict, user: Any, path: str) -> dict:
    if not isinstance(user, dict):
        raise ValidationError(f"{path or 'document'}: expected a mapping")
    out = copy.deepcopy(defaults)
    for key, val in user.items():
        full = f"{path}.{key}" if path else str(key)
        if key not in defaults:
            raise ValidationError(f"unknown key '{full}'")
        if full in _SECTIONS:
            out[key] = _merge(defaults[key], val, full)
        else:
            out[key] = val
    return out


def _num(x, name) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValidationError(f"{name} must be a number")
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError(f"{name} must be finite")
    return x


def _vec(x, n, name) -> list[float]:
    if not isinstance(x, (list, tuple)) or len(x) != n:
        raise ValidationError(f"{name} must be a list of {n} numbers")
    return [_num(v, name) for v in x]


def _matrix(x, n, name) -> list:
    """Diagonal list of n numbers or full n x n nested list."""
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], (list, tuple)):
        if len(x) != n:
            raise ValidationError(f"{name} must be {n}x{n}")
        return [_vec(row, n, name) for row in x]
    return _vec(x, n, name)


def _normalize(cfg: dict) -> dict:
    """Coerce numbers to float and shapes to lists; check script ordering."""
    c = cfg
    c["duration"] = _num(c["duration"], "duration")
    c["dt"] = _num(c["dt"], "dt")
    if isinstance(c["seed"], bool) or not isinstance(c["seed"], int):
        raise ValidationError("seed must be an integer")
    if c["sample_period"] is not None:
        c["sample_period"] = _num(c["sample_period"], "sample_period")
    if isinstance(c["reortho_every"], bool) or not isinstance(c["reortho_every"], int) \
            or c["reortho_every"] < 1:
        raise ValidationError("reortho_every must be a positive integer")
    if c["arm_mode"] not in ARM_MODES:
        raise ValidationError(f"arm_mode must be one of {ARM_MODES}")
    if c["control"] not in CONTROL_MODES:
        raise ValidationError(f"control must be one of {CONTROL_MODES}")

    veh = c["vehicle"]
    veh["mass"] = _num(veh["mass"], "vehicle.mass")
    veh["gravity"] = _num(veh["gravity"], "vehicle.gravity")
    veh["inertia"] = _matrix(veh["inertia"], 3, "vehicle.inertia")
    for key in ("p", "rpy", "v", "w"):
        veh["initial"][key] = _vec(veh["initial"][key], 3, f"vehicle.initial.{key}")

    g = c["gains"]
    if g["M_v"] is not None:
        g["M_v"] = _matrix(g["M_v"], 6, "gains.M_v")
    g["D_v"] = _matrix(g["D_v"], 6, "gains.D_v")
    g["K_v"] = _matrix(g["K_v"], 6, "gains.K_v")
    c["estimator"]["time_constant"] = _num(c["estimator"]["time_constant"],
                                           "estimator.time_constant")

    arm = c["arm"]
    for key in ("l1", "l2", "l3", "l4"):
        arm["geometry"][key] = _num(arm["geometry"][key], f"arm.geometry.{key}")
    arm["mount"] = _vec(arm["mount"], 3, "arm.mount")
    arm["joint_inertia"] = _num(arm["joint_inertia"], "arm.joint_inertia")
    lim = arm["joint_limits"]
    if not isinstance(lim, (list, tuple)) or len(lim) != 2:
        raise ValidationError("arm.joint_limits must hold two [lo, hi] pairs")
    arm["joint_limits"] = [_vec(pair, 2, "arm.joint_limits") for pair in lim]
    if not isinstance(arm["one_sided"], bool):
        raise ValidationError("arm.one_sided must be true or false")
    arm["pull_sign"] = _vec(arm["pull_sign"], 2, "arm.pull_sign")
    arm["initial_target"] = _vec(arm["initial_target"], 2, "arm.initial_target")
    ab = arm["absorption"]
    for key in ("k", "kappa", "mu", "mu_s", "h0", "disengage"):
        ab[key] = _num(ab[key], f"arm.absorption.{key}")
    for key in ("r0", "r1"):
        ab["bulge"][key] = _num(ab["bulge"][key], f"arm.absorption.bulge.{key}")
    for key in ("M_A", "D_A", "K_A"):
        arm["lumped"][key] = _matrix(arm["lumped"][key], 3, f"arm.lumped.{key}")
    for key in ("kp", "ki", "kd", "tau_max", "rate_max"):
        arm["servo"][key] = _num(arm["servo"][key], f"arm.servo.{key}")
    tr = arm["trim"]
    tr["arm_mass"] = _num(tr["arm_mass"], "arm.trim.arm_mass")
    tr["servo_mass"] = _num(tr["servo_mass"], "arm.trim.servo_mass")
    tr["arm_offset"] = _vec(tr["arm_offset"], 3, "arm.trim.arm_offset")
    tr["servo_offset"] = _vec(tr["servo_offset"], 3, "arm.trim.servo_offset")

    if c["wall"] is not None:
        wall = _merge(WALL_DEFAULTS, c["wall"], "wall")
        wall["k_w"] = _num(wall["k_w"], "wall.k_w")
        wall["d_w"] = _num(wall["d_w"], "wall.d_w")
        wall["normal"] = _vec(wall["normal"], 3, "wall.normal")
        wall["point"] = _vec(wall["point"], 3, "wall.point")
        c["wall"] = wall

    if not isinstance(c["setpoints"], list):
        raise ValidationError("setpoints must be a list")
    sps = []
    for i, knot in enumerate(c["setpoints"]):
        k = _merge(SETPOINT_DEFAULTS, knot, f"setpoints[{i}]")
        k["t"] = _num(k["t"], f"setpoints[{i}].t")
        for key in ("p", "v", "rpy", "w"):
            k[key] = _vec(k[key], 3, f"setpoints[{i}].{key}")
        sps.append(k)
    c["setpoints"] = sps

    if not isinstance(c["arm_script"], list):
        raise ValidationError("arm_script must be a list")
    knots = []
    for i, knot in enumerate(c["arm_script"]):
        k = _merge(ARM_KNOT_DEFAULTS, knot, f"arm_script[{i}]")
        k["t"] = _num(k["t"], f"arm_script[{i}].t")
        k["target"] = _vec(k["target"], 2, f"arm_script[{i}].target")
        knots.append(k)
    c["arm_script"] = knots
    c["noise"]["accel_std"] = _num(c["noise"]["accel_std"], "noise.accel_std")
    return c


def _check_invariants(c: dict) -> None:
    if not 0 < c["dt"] <= 0.01:
        raise ValidationError("dt out of range: must lie in (0, 0.01]")
    if not c["duration"] > 0:
        raise ValidationError("duration must be positive")
    sp = c["sample_period"]
    if sp is not None and sp < c["dt"]:
        raise ValidationError("sample_period must be >= dt")
    for name in ("setpoints", "arm_script"):
        ts = [k["t"] for k in c[name]]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValidationError(f"{name} must be sorted by time")
    if c["wall"] is not None:
        w = c["wall"]
        if not w["k_w"] > 0:
            raise ValidationError("wall.k_w must be positive")
        if w["d_w"] < 0:
            raise ValidationError("wall.d_w must be non-negative")
        if abs(np.linalg.norm(w["normal"]) - 1.0) > 1e-9:
            raise ValidationError("wall.normal must be a unit vector")
    if c["arm"]["joint_inertia"] <= 0:
        raise ValidationError("arm.joint_inertia must be positive")
    if any(s not in (-1.0, 1.0) for s in c["arm"]["pull_sign"]):
        raise ValidationError("arm.pull_sign entries must be +1 or -1")
    for lo, hi in c["arm"]["joint_limits"]:
        if not lo < hi:
            raise ValidationError("arm.joint_limits need lo < hi")
    if c["estimator"]["time_constant"] < 0:
        raise ValidationError("estimator.time_constant must be >= 0")
    if c["noise"]["accel_std"] < 0:
        raise ValidationError("noise.accel_std must be >= 0")


@dataclass(frozen=True)
class ContactParams:
    k_w: float = 2.0e4
    d_w: float = 50.0
    normal: tuple = (-1.0, 0.0, 0.0)
    point: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.k_w > 0 or self.d_w < 0:
            raise ValueError("need k_w > 0 and d_w >= 0")
        n = np.asarray(self.normal, dtype=float)
        if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("wall normal must be a unit 3-vector")

    @property
    def normal_array(self) -> np.ndarray:
        return np.asarray(self.normal, dtype=float)

    @property
    def point_array(self) -> np.ndarray:
        return np.asarray(self.point, dtype=float)


class Scenario:
    """Validated scenario. Typed views are built from the canonical config."""

    def __init__(self, config: dict):
        self.config = config
        c = config
        try:
            veh = c["vehicle"]
            self.vehicle = VehicleParams(veh["mass"], _square(veh["inertia"], 3), veh["gravity"])
            ini = veh["initial"]
            R0 = rpy_to_matrix(*ini["rpy"])
            self.initial_state = VehicleState(np.array(ini["p"]), R0,
                                              R0.T @ np.array(ini["v"]), np.array(ini["w"]))
            g = c["gains"]
            M_v = self.vehicle.M if g["M_v"] is None else _square(g["M_v"], 6)
            self.gains = ImpedanceGains(M_v, _square(g["D_v"], 6), _square(g["K_v"], 6))
            arm = c["arm"]
            self.geometry = ArmGeometry(**arm["geometry"])
            ab = arm["absorption"]
            self.absorption = AbsorptionUnitParams(
                k=ab["k"], kappa=ab["kappa"], mu=ab["mu"], mu_s=ab["mu_s"], h0=ab["h0"],
                disengage=ab["disengage"], bulge=BulgeProfile(**ab["bulge"]))
            lm = arm["lumped"]
            self.lumped = LumpedArmParams(_square(lm["M_A"], 3), _square(lm["D_A"], 3),
                                          _square(lm["K_A"], 3))
            self.servos = tuple(
                ServoModel(**arm["servo"], one_sided=arm["one_sided"], pull_sign=s)
                for s in arm["pull_sign"])
            self.wall = None if c["wall"] is None else ContactParams(
                c["wall"]["k_w"], c["wall"]["d_w"], tuple(c["wall"]["normal"]),
                tuple(c["wall"]["point"]))
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc

    def __getattr__(self, name):
        # flat scalar fields: dt, duration, seed, arm_mode, control, ...
        cfg = self.__dict__.get("config")
        if cfg is not None and name in cfg and not isinstance(cfg[name], dict):
            return cfg[name]
        raise AttributeError(name)

    def __eq__(self, other):
        return isinstance(other, Scenario) and self.config == other.config

    def __repr__(self):
        return f"Scenario(arm_mode={self.arm_mode!r}, dt={self.dt}, duration={self.duration})"

    @property
    def mount(self) -> np.ndarray:
        return np.array(self.config["arm"]["mount"])

    @property
    def m_total(self) -> float:
        return self.vehicle.mass

    def setpoint(self, t: float) -> Setpoint:
        knots = self.config["setpoints"]
        active = None
        for k in knots:
            if k["t"] <= t:
                active = k
            else:
                break
        if active is None:
            s0 = self.initial_state
            return Setpoint(s0.p, s0.R, np.zeros(3), np.zeros(3))
        v = np.array(active["v"])
        return Setpoint(np.array(active["p"]) + v * (t - active["t"]),
                        rpy_to_matrix(*active["rpy"]), v, np.array(active["w"]))

    def arm_target(self, t: float) -> np.ndarray:
        knots = self.config["arm_script"]
        if not knots:
            return np.array(self.config["arm"]["initial_target"])
        if t <= knots[0]["t"]:
            return np.array(knots[0]["target"])
        for a, b in zip(knots, knots[1:]):
            if t < b["t"]:
                span = b["t"] - a["t"]
                s = 0.0 if span == 0 else (t - a["t"]) / span
                return (1 - s) * np.array(a["target"]) + s * np.array(b["target"])
        return np.array(knots[-1]["target"])

    def to_dict(self) -> dict:
        return copy.deepcopy(self.config)

    def with_overrides(self, overrides: dict[str, Any]) -> "Scenario":
        """New scenario with dotted-path keys replaced, e.g. ``{'arm.lumped.D_A': [9, 9, 9]}``."""
        cfg = self.to_dict()
        for path, value in overrides.items():
            node = cfg
            parts = path.split(".")
            for part in parts[:-1]:
                if not isinstance(node.get(part), dict):
                    if part == "wall" and node.get(part) is None:
                        node[part] = copy.deepcopy(WALL_DEFAULTS)
                    else:
                        raise ValidationError(f"unknown key '{path}'")
                node = node[part]
            if parts[-1] not in node:
                raise ValidationError(f"unknown key '{path}'")
            node[parts[-1]] = value
        return from_dict(cfg)


def _square(x, n) -> np.ndarray:
    A = np.asarray(x, dtype=float)
    if A.ndim == 1:
        A = np.diag(A)
    return A.reshape(n, n)


def from_dict(data: Any) -> Scenario:
    if data is None:
        data = {}
    cfg = _normalize(_merge(DEFAULTS, data, ""))
    _check_invariants(cfg)
    return Scenario(cfg)


def parse_scenario(text: str) -> Scenario:
    try:
        data = load_yaml(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ParseError(f"malformed scenario: {exc.problem}", line, col) from exc
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed scenario: {exc}") from exc
    return from_dict(data)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def serialize(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.to_dict(), sort_keys=False, default_flow_style=None)
