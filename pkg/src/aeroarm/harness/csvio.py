"""CSV telemetry: fixed header, 17 significant digits, LF line endings."""

from __future__ import annotations

import csv
from types import SimpleNamespace

import numpy as np

HEADER = ("t,px,py,pz,vx,vy,vz,ax,ay,az,wx,wy,wz,th1,th1_ref,th2,th2_ref,"
          "pa_x,pa_y,pa_z,fc_x,fc_y,fc_z,E_diss").split(",")
FILTERED = ["ax_f", "ay_f", "az_f"]


def _fmt(x: float) -> str:
    # repr-exact for float64 and locale independent
    return format(float(x), ".17g")


def log_columns(log) -> np.ndarray:
    n = len(log.t)
    if n == 0:
        return np.zeros((0, len(HEADER)))
    th = np.column_stack([log.theta[:, 0], log.theta_ref[:, 0],
                          log.theta[:, 1], log.theta_ref[:, 1]])
    return np.column_stack([log.t, log.p, log.v, log.accel, log.w, th, log.p_A,
                            log.f_contact, log.E_diss])


def write_csv(log, path, filtered: bool = False, cutoff_hz: float = 20.0) -> None:
    """One row per sample. With ``filtered`` the low-pass accelerations are
    appended as extra columns after the fixed ones."""
    data = log_columns(log)
    header = list(HEADER)
    if filtered and len(log.t):
        data = np.column_stack([data, log.filtered_accel(cutoff_hz)])
        header += FILTERED
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in data:
            w.writerow([_fmt(x) for x in row])


def read_csv(path) -> SimpleNamespace:
    """Columns by header name as float arrays, plus ``in_contact``."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    missing = [h for h in HEADER if h not in header]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    body = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
    body = body.reshape(len(rows) - 1, len(header))
    out = SimpleNamespace(**{h: body[:, i] for i, h in enumerate(header)})
    fc = np.column_stack([out.fc_x, out.fc_y, out.fc_z])
    out.in_contact = np.linalg.norm(fc, axis=1) > 0.0
    return out
