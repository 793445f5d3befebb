"""
Rotation and interpolation primitives.

Quaternions are numpy arrays in [w, x, y, z] order (scalar first). Vectors are
plain (3,) float arrays. All angles are radians.
"""

import math
from dataclasses import dataclass

import numpy as np

_SERIES_EPS = 1e-8


def smooth_step(w, lo, hi):
    """Quintic switching function: 1 below ``lo``, 0 above ``hi``.

    In between it is ``1 - 6c^5 + 15c^4 - 10c^3`` with ``c = (w-lo)/(hi-lo)``,
    which has zero slope and curvature at both ends.
    """
    if not lo < hi:
        raise ValueError(f"smooth_step needs lo < hi, got lo={lo}, hi={hi}")
    if w < lo:
        return 1.0
    if w > hi:
        return 0.0
    c = (w - lo) / (hi - lo)
    return 1.0 - 6.0 * c**5 + 15.0 * c**4 - 10.0 * c**3


def cross3(a, b):
    """Cross product of two 3-vectors (much cheaper than np.cross for one pair)."""
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def norm3(v):
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def angle_between(n, nd):
    """Unsigned angle in [0, pi] between two vectors; 0 if either is zero."""
    n = np.asarray(n, dtype=float)
    nd = np.asarray(nd, dtype=float)
    dot = float(n @ nd)
    cross = norm3(cross3(n, nd))
    if dot == 0.0 and cross == 0.0:
        return 0.0
    return math.atan2(cross, dot)


# ---------------------------------------------------------------------------
# quaternion algebra
# ---------------------------------------------------------------------------

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def quat_mul(q1, q2):
    """Hamilton product q1 * q2."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    return q / math.sqrt(q @ q)


def quat_exp(v):
    """Map a 3-vector to the unit sphere: (cos|v|, sin|v| v/|v|)."""
    v = np.asarray(v, dtype=float)
    nv = norm3(v)
    if nv < _SERIES_EPS:
        return quat_normalize(np.array([1.0, v[0], v[1], v[2]]))
    s = math.sin(nv) / nv
    return np.array([math.cos(nv), s * v[0], s * v[1], s * v[2]])


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate(([np.cos(angle / 2.0)], np.sin(angle / 2.0) * axis))


def quat_to_rotmat(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rotmat_to_quat(R):
    """Rotation matrix to unit quaternion (Shepperd's method, w >= 0)."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    if tr > 0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    q = quat_normalize(q)
    return q if q[0] >= 0 else -q


def quat_angle(q):
    """Rotation angle in [0, pi] represented by a unit quaternion."""
    return 2.0 * np.arctan2(np.linalg.norm(q[1:]), abs(q[0]))


def quat_integrate(Q, omega, Tc):
    """One step of ``Q <- exp(omega*Tc/2) * Q`` with renormalisation.

    ``omega`` is the angular velocity expressed in the world frame.
    """
    if Tc <= 0:
        raise ValueError("Tc must be positive")
    dq = quat_exp(0.5 * np.asarray(omega, dtype=float) * Tc)
    return quat_normalize(quat_mul(dq, Q))


# ---------------------------------------------------------------------------
# SO(3) helpers
# ---------------------------------------------------------------------------

def skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def rot_exp(w):
    """Rodrigues formula, exp of the skew matrix of ``w``."""
    w = np.asarray(w, dtype=float)
    th = norm3(w)
    K = skew(w)
    if th < _SERIES_EPS:
        return np.eye(3) + K + 0.5 * K @ K
    return np.eye(3) + np.sin(th) / th * K + (1.0 - np.cos(th)) / th**2 * K @ K


def rot_z(yaw):
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def unit_vector_rotate(n, axis_times_angle):
    """Rotate unit vector ``n`` by ``exp_R(axis_times_angle)`` and renormalise."""
    n = np.asarray(n, dtype=float)
    norm = norm3(n)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"expected a unit vector, got norm {norm:.9g}")
    out = rot_exp(axis_times_angle) @ n
    return out / norm3(out)


# ---------------------------------------------------------------------------
# pose deviation
# ---------------------------------------------------------------------------

@dataclass
class PoseDeviation:
    """God-object minus robot pose.

    ``Q_e = Q_g * Q^-1`` with the sign chosen so that ``eta_e >= 0``.
    """

    p_e: np.ndarray
    Q_e: np.ndarray

    @property
    def eta_e(self) -> float:
        return float(self.Q_e[0])

    @property
    def eps_e(self) -> np.ndarray:
        return self.Q_e[1:]

    @property
    def Psi_e(self) -> float:
        return 1.0 - self.eta_e

    @property
    def R_e(self) -> np.ndarray:
        return quat_to_rotmat(self.Q_e)

    @property
    def eps_e_local(self) -> np.ndarray:
        """``R_e^T eps_e``; equal to ``eps_e`` because eps_e lies on the rotation axis."""
        return self.R_e.T @ self.eps_e


def pose_deviation(p_g, Q_g, p, Q):
    p_e = np.asarray(p_g, dtype=float) - np.asarray(p, dtype=float)
    Q_e = quat_mul(Q_g, quat_conj(Q))
    if Q_e[0] < 0:
        Q_e = -Q_e
    return PoseDeviation(p_e=p_e, Q_e=Q_e)
