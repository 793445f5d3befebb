"""
Capsule footprint of the mobile base and the null-space repulsion it drives.

The capsule is the segment ``p_f + u_rf L sigma`` (sigma in [0, 1]) swept by a
disc of radius ``r_c``. Points of a 2D cloud near its perimeter are split into
a human-side set and an other-side set. Human-side points push the base away;
any other-side point switches the repulsion off so the base never backs into
an obstacle.
"""

from dataclasses import dataclass

import numpy as np

from .mathcore import smooth_step


@dataclass
class Capsule2D:
    p_f: np.ndarray
    u_rf: np.ndarray
    L: float
    r_c: float

    def __post_init__(self):
        self.p_f = np.asarray(self.p_f, dtype=float)
        self.u_rf = np.asarray(self.u_rf, dtype=float)
        if abs(np.linalg.norm(self.u_rf) - 1.0) > 1e-9:
            raise ValueError("u_rf must be a unit vector")
        if not (self.L > 0 and self.r_c > 0):
            raise ValueError("L and r_c must be positive")

    @classmethod
    def for_base(cls, x, y, yaw, L, r_c):
        """Capsule centred on the base, front point ahead along the heading."""
        heading = np.array([np.cos(yaw), np.sin(yaw)])
        return cls(p_f=np.array([x, y]) + 0.5 * L * heading, u_rf=-heading, L=L, r_c=r_c)

    def axis_point(self, p):
        zeta = float(self.u_rf @ (np.asarray(p, dtype=float) - self.p_f)) / self.L
        return self.p_f + self.u_rf * self.L * min(1.0, max(0.0, zeta))


class OnAxisError(ValueError):
    """Raised for a query point lying on the capsule axis segment."""


def capsule_closest(capsule, p_i, r_s=0.0):
    """Closest axis point, perimeter point and clearance for ``p_i``.

    Returns ``(p_star, p_c, d)`` with ``d = |p_i - p_star| - (r_c + r_s)``.
    Raises :class:`OnAxisError` when ``p_i`` is within 1e-9 of the axis.
    """
    p_i = np.asarray(p_i, dtype=float)
    p_star = capsule.axis_point(p_i)
    off = p_i - p_star
    dist = float(np.hypot(off[0], off[1]))
    if dist <= 1e-9:
        raise OnAxisError("point lies on the capsule axis; perimeter direction undefined")
    p_c = p_star + capsule.r_c * off / dist
    return p_star, p_c, dist - (capsule.r_c + r_s)


def closest_batch(capsule, points, r_s=0.0):
    """Vectorised :func:`capsule_closest`; on-axis rows get NaN and ``valid`` False.

    Returns ``(p_star, p_c, d, valid)``.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    zeta = (P - capsule.p_f) @ capsule.u_rf / capsule.L
    p_star = capsule.p_f + np.outer(np.clip(zeta, 0.0, 1.0), capsule.u_rf * capsule.L)
    off = P - p_star
    dist = np.hypot(off[:, 0], off[:, 1])
    valid = dist > 1e-9
    safe = np.where(valid, dist, 1.0)
    p_c = p_star + capsule.r_c * off / safe[:, None]
    p_c[~valid] = np.nan
    d = np.where(valid, dist - (capsule.r_c + r_s), np.nan)
    return p_star, p_c, d, valid


def _R2(yaw):
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s], [s, c]])


@dataclass
class RepulsionResult:
    v_xy: np.ndarray       # base frame
    d_min: float           # smallest human-side clearance (inf if none)
    n_human: int
    n_other: int
    blocked: bool          # an other-side point sits in the annulus


def repulsive_velocity(capsule, cloud, config, base_xy, base_yaw):
    """Base-frame planar velocity pushing the capsule away from nearby human-side points.

    ``cloud`` holds world-frame 2D points. A point counts when its distance
    to the axis is below ``r_c + r_s + d_0``; points already inside the
    inflated capsule still count, with full weight. The human side is the
    half plane ``n_h . x_b >= offset`` of base-frame coordinates ``x_b``.
    """
    P = np.asarray(cloud, dtype=float).reshape(-1, 2)
    zero = RepulsionResult(np.zeros(2), np.inf, 0, 0, False)
    if len(P) == 0:
        return zero
    p_star, p_c, d, valid = closest_batch(capsule, P, config.r_s)
    near = valid & (d < config.d_0)
    if not np.any(near):
        return zero
    Rwb = _R2(base_yaw).T
    local = (P - np.asarray(base_xy, dtype=float)) @ Rwb.T
    human = (local @ np.asarray(config.human_normal) >= config.human_offset)
    in_h = near & human
    in_o = near & ~human
    n_h, n_o = int(in_h.sum()), int(in_o.sum())
    d_min = float(d[in_h].min()) if n_h else np.inf
    if n_o or not n_h:
        return RepulsionResult(np.zeros(2), d_min, n_h, n_o, bool(n_o))

    w = np.array([smooth_step(x, 0.0, config.d_0) for x in d[in_h]])
    p_bar = (w[:, None] * p_c[in_h]).sum(axis=0) / w.sum()
    try:
        _, p_c_bar, _ = capsule_closest(capsule, p_bar)
        p_c_star = capsule.axis_point(p_c_bar)
    except OnAxisError:
        return RepulsionResult(np.zeros(2), d_min, n_h, n_o, False)
    away = p_c_star - p_c_bar
    k_v = config.a_k * smooth_step(d_min, 0.0, config.d_0)
    v_world = k_v * away / np.linalg.norm(away)
    return RepulsionResult(Rwb @ v_world, d_min, n_h, n_o, False)


def disc_points(center, radius, n=16):
    """Perimeter samples of a disc, standing in for a 2D range scan of a leg or obstacle."""
    ang = 2.0 * np.pi * np.arange(n) / n
    return np.asarray(center, dtype=float) + radius * np.column_stack([np.cos(ang), np.sin(ang)])
