"""Impact metrics: approach and rebound speed, absorbed energy, peak
acceleration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from aeroarm.errors import NoContact
from aeroarm.vehicle import TOTAL_MASS

BOUNCE_THRESHOLD = 0.05  # m/s
REBOUND_WINDOW = 0.5  # s after contact loss


@dataclass(frozen=True)
class ImpactMetrics:
    v_pre: float
    v_post: float
    E_c: float
    peak_accel: float
    bounced: bool

    def as_dict(self) -> dict:
        return {"v_pre": self.v_pre, "v_post": self.v_post, "E_c": self.E_c,
                "peak_accel": self.peak_accel, "bounced": self.bounced}


def absorbed_energy(v_pre: float, v_post: float, m_total: float = TOTAL_MASS) -> float:
    """Kinetic energy lost across the impact."""
    return 0.5 * m_total * (v_pre ** 2 - v_post ** 2)


def metrics_from_velocities(v_pre: float, v_post: float, m_total: float = TOTAL_MASS,
                            peak_accel: float = 0.0) -> ImpactMetrics:
    v_pre, v_post = abs(float(v_pre)), abs(float(v_post))
    return ImpactMetrics(v_pre, v_post, absorbed_energy(v_pre, v_post, m_total),
                         abs(float(peak_accel)), v_post > BOUNCE_THRESHOLD)


def contact_episodes(in_contact) -> list[tuple[int, int]]:
    """Half-open sample ranges ``[start, stop)`` of contiguous contact."""
    c = np.asarray(in_contact, dtype=bool)
    if c.size == 0:
        return []
    edges = np.flatnonzero(np.diff(c.astype(np.int8)))
    starts = list(edges[c[edges + 1]] + 1)
    stops = list(edges[~c[edges + 1]] + 1)
    if c[0]:
        starts.insert(0, 0)
    if c[-1]:
        stops.append(len(c))
    return list(zip(starts, stops))


def impact_metrics_arrays(t, vx, ax, in_contact, m_total: float = TOTAL_MASS) -> ImpactMetrics:
    """Metrics of the first contact episode.

    ``vx`` is the world-frame approach-axis velocity and ``ax`` the raw body
    acceleration along the same axis. The rebound speed is the largest
    speed away from the wall within the window after contact is lost; it is
    zero when contact persists to the end of the log.
    """
    t = np.asarray(t, dtype=float)
    vx = np.asarray(vx, dtype=float)
    episodes = contact_episodes(in_contact)
    if not episodes:
        raise NoContact("log has no contact episode")
    start, stop = episodes[0]
    if start == 0:
        raise NoContact("log starts in contact; approach speed is undefined")
    approach = np.sign(vx[start - 1]) or 1.0
    v_pre = abs(vx[start - 1])
    if stop >= len(t):
        v_post = 0.0
    else:
        window = (t >= t[stop]) & (t <= t[stop] + REBOUND_WINDOW)
        away = -approach * vx[window]
        v_post = max(0.0, float(away.max())) if away.size else 0.0
    peak = float(np.max(np.abs(ax))) if len(ax) else 0.0
    return metrics_from_velocities(v_pre, v_post, m_total, peak)


def impact_metrics(log, m_total: float | None = None) -> ImpactMetrics:
    """Metrics of a :class:`SimLog`. ``m_total`` defaults to the log's mass."""
    m = log.m_total if m_total is None else m_total
    return impact_metrics_arrays(log.t, log.v[:, 0], log.accel[:, 0], log.in_contact, m)
