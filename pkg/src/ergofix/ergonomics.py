"""
Continuous RULA-style posture score from 3D skeleton keypoints.

Five joint angles (shoulder abduction, flexion, internal rotation, elbow
flexion, trunk bending) are measured from keypoints and each mapped to a
smooth sub-factor in [0, 1]. The posture score ``a`` is their product, so a
single high-risk joint drives the whole score to zero.
"""

import csv
from dataclasses import dataclass, fields, replace

import numpy as np

from .mathcore import smooth_step

KEYPOINT_ORDER = ("S_R", "S_L", "E_R", "E_L", "W_R", "W_L", "Ne", "Th", "Pl", "Kn")

_NORM_EPS = 1e-9


@dataclass
class SkeletonKeypoints:
    S_R: np.ndarray
    S_L: np.ndarray
    E_R: np.ndarray
    E_L: np.ndarray
    W_R: np.ndarray
    W_L: np.ndarray
    Ne: np.ndarray
    Th: np.ndarray
    Pl: np.ndarray
    Kn: np.ndarray
    side: str = "right"

    def __post_init__(self):
        if self.side not in ("right", "left"):
            raise ValueError(f"side must be 'right' or 'left', got {self.side!r}")
        for name in KEYPOINT_ORDER:
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ValueError(f"keypoint {name} must be a finite 3-vector")
            setattr(self, name, v)

    @property
    def shoulder(self):
        return self.S_R if self.side == "right" else self.S_L

    @property
    def elbow(self):
        return self.E_R if self.side == "right" else self.E_L

    @property
    def wrist(self):
        return self.W_R if self.side == "right" else self.W_L

    def transformed(self, R, t):
        """Apply ``x -> R x + t`` to every keypoint."""
        moved = {k: R @ getattr(self, k) + t for k in KEYPOINT_ORDER}
        return SkeletonKeypoints(**moved, side=self.side)

    def as_row(self):
        return np.concatenate([getattr(self, k) for k in KEYPOINT_ORDER])


def complete_keypoints(S_R, S_L, E_R, E_L, W_R, W_L, hip_R, hip_L, Kn, side="right"):
    """Fill in neck, pelvis and thorax for trackers that do not report them.

    Neck is the shoulder midpoint, pelvis the hip midpoint and thorax the point
    two thirds of the way from neck to pelvis.
    """
    Ne = 0.5 * (np.asarray(S_R, float) + np.asarray(S_L, float))
    Pl = 0.5 * (np.asarray(hip_R, float) + np.asarray(hip_L, float))
    Th = Ne + 2.0 / 3.0 * (Pl - Ne)
    return SkeletonKeypoints(S_R, S_L, E_R, E_L, W_R, W_L, Ne, Th, Pl, Kn, side=side)


@dataclass
class BodyPlanes:
    f: np.ndarray  # frontal (coronal) plane normal
    s: np.ndarray  # sagittal plane normal
    degenerate: bool = False


@dataclass
class JointAngles:
    theta_a: float = 0.0
    theta_f: float = 0.0
    theta_r: float = 0.0
    theta_e: float = np.pi / 2
    theta_b: float = 0.0
    degenerate: bool = False

    def as_array(self):
        return np.array([self.theta_a, self.theta_f, self.theta_r, self.theta_e, self.theta_b])


NEUTRAL_ANGLES = JointAngles()


@dataclass
class ErgonomicThresholds:
    """Joint limits in degrees; converted to radians on use."""

    theta_au: float = 30.0
    theta_fl: float = 20.0
    theta_fm: float = 45.0
    theta_fu: float = 90.0
    theta_ru: float = 30.0
    theta_el: float = 80.0
    theta_eu: float = 120.0
    theta_bl: float = 10.0
    theta_bm: float = 20.0
    theta_bu: float = 60.0
    delta_theta: float = 10.0

    def __post_init__(self):
        for f_ in fields(self):
            if not getattr(self, f_.name) > 0:
                raise ValueError(f"threshold {f_.name} must be positive")

    def rad(self, name):
        return np.deg2rad(getattr(self, name))


DEFAULT_THRESHOLDS = ErgonomicThresholds()


@dataclass
class ErgonomicScore:
    a: float
    a_a: float
    a_f: float
    a_r: float
    a_e: float
    a_b: float


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def _unit(v):
    n = np.linalg.norm(v)
    if n < _NORM_EPS:
        return None
    return v / n


def _acos(x):
    return float(np.arccos(np.clip(x, -1.0, 1.0)))


def compute_planes(kp, prev=None):
    """Frontal and sagittal plane normals for the tracked side.

    On degenerate geometry the previous planes are returned with the
    ``degenerate`` flag set. Without previous planes a ``ValueError`` is raised.
    """
    S = kp.shoulder
    ne_s = S - kp.Ne
    ne_th = kp.Th - kp.Ne
    cross = np.cross(ne_s, ne_th)
    if np.linalg.norm(ne_s) <= 1e-6 or np.linalg.norm(cross) <= _NORM_EPS:
        if prev is None:
            raise ValueError("degenerate torso geometry and no previous planes")
        return replace(prev, degenerate=True)
    return BodyPlanes(f=cross / np.linalg.norm(cross), s=ne_s / np.linalg.norm(ne_s))


def compute_joint_angles(kp, prev=None, planes_prev=None):
    """Measure the five joint angles of the tracked arm and the trunk.

    Any angle whose construction divides by a vanishing norm keeps its value
    from ``prev`` (neutral angles if ``prev`` is None); ``degenerate`` is then set.
    """
    if prev is None:
        prev = NEUTRAL_ANGLES
    right = kp.side == "right"
    S, E, W = kp.shoulder, kp.elbow, kp.wrist
    degenerate = False

    try:
        planes = compute_planes(kp, planes_prev)
    except ValueError:
        planes = None
    if planes is None or planes.degenerate:
        degenerate = True
    if planes is None:
        th_a, th_f, th_r = prev.theta_a, prev.theta_f, prev.theta_r
        u = None
    else:
        f, s = planes.f, planes.s

        # abduction: upper arm projected onto the coronal plane
        se = E - S
        se_p = se - f * (f @ se)
        nse = np.linalg.norm(se_p)
        if nse < _NORM_EPS:
            th_a = prev.theta_a
            degenerate = True
        else:
            c = _acos(-(se_p @ s) / nse)
            r_a = np.sign(f @ np.cross(s, se_p))
            if r_a < 0 and se_p @ s > 0:
                th_a = -c + 1.5 * np.pi
            else:
                th_a = r_a * c - 0.5 * np.pi

        # flexion: rotation of the neck-shoulder-elbow triangle about the shoulder line
        u = _unit(np.cross(S - kp.Ne, E - kp.Ne))
        if u is None:
            th_f = prev.theta_f
            degenerate = True
        else:
            fxu = np.cross(f, u)
            r_f = np.sign(s @ fxu) if right else np.sign(-(s @ fxu))
            th_f = r_f * _acos(f @ u)

        # internal/external rotation: angle between shoulder and arm triangles
        v = _unit(np.cross(S - E, W - E))
        if u is None or v is None:
            th_r = prev.theta_r
            degenerate = True
        else:
            es = S - E
            r_l = np.sign(es @ np.cross(u, v)) if right else np.sign(es @ np.cross(v, u))
            uv = float(u @ v)
            if r_l < 0 and uv < 0:
                th_r = -_acos(uv) + 1.5 * np.pi
            else:
                th_r = r_l * _acos(uv) - 0.5 * np.pi

    # elbow interior angle
    ew, es = W - E, S - E
    den = np.linalg.norm(ew) * np.linalg.norm(es)
    if den < _NORM_EPS:
        th_e = prev.theta_e
        degenerate = True
    else:
        th_e = _acos((ew @ es) / den)

    # trunk bending, always signed with the right shoulder
    kn_pl = kp.Pl - kp.Kn
    pl_ne = kp.Ne - kp.Pl
    den = np.linalg.norm(kn_pl) * np.linalg.norm(pl_ne)
    if den < _NORM_EPS:
        th_b = prev.theta_b
        degenerate = True
    else:
        r_b = np.sign((kp.S_R - kp.Ne) @ np.cross(pl_ne, kn_pl))
        th_b = r_b * _acos((kn_pl @ pl_ne) / den)

    return JointAngles(float(th_a), float(th_f), float(th_r), float(th_e), float(th_b),
                       degenerate=degenerate)


# ---------------------------------------------------------------------------
# sub-factors
# ---------------------------------------------------------------------------

def sub_factor_abduction(theta_a, th=DEFAULT_THRESHOLDS):
    up, d = th.rad("theta_au"), th.rad("delta_theta")
    return smooth_step(abs(theta_a), up - d, up)


def sub_factor_flexion(theta_f, th=DEFAULT_THRESHOLDS):
    d = th.rad("delta_theta")
    fl, fm, fu = th.rad("theta_fl"), th.rad("theta_fm"), th.rad("theta_fu")
    if theta_f > 0:
        return (0.33 * smooth_step(theta_f, fl - d, fl)
                + 0.33 * smooth_step(theta_f, fm - d, fm)
                + 0.34 * smooth_step(theta_f, fu - d, fu))
    return 1.0 - smooth_step(theta_f, -fl, -fl + d)


def sub_factor_rotation(theta_r, th=DEFAULT_THRESHOLDS):
    up, d = th.rad("theta_ru"), th.rad("delta_theta")
    return smooth_step(abs(theta_r), up - d, up)


def sub_factor_elbow(theta_e, th=DEFAULT_THRESHOLDS):
    d = th.rad("delta_theta")
    lo, up = th.rad("theta_el"), th.rad("theta_eu")
    return -smooth_step(theta_e, lo, lo + d) + smooth_step(theta_e, up - d, up)


def sub_factor_bending(theta_b, th=DEFAULT_THRESHOLDS):
    d = th.rad("delta_theta")
    bl, bm, bu = th.rad("theta_bl"), th.rad("theta_bm"), th.rad("theta_bu")
    return (0.33 * smooth_step(theta_b, bl - d, bl)
            + 0.33 * smooth_step(theta_b, bm - d, bm)
            + 0.34 * smooth_step(theta_b, bu - d, bu))


def compute_score(angles, th=DEFAULT_THRESHOLDS):
    a_a = sub_factor_abduction(angles.theta_a, th)
    a_f = sub_factor_flexion(angles.theta_f, th)
    a_r = sub_factor_rotation(angles.theta_r, th)
    a_e = sub_factor_elbow(angles.theta_e, th)
    a_b = sub_factor_bending(angles.theta_b, th)
    return ErgonomicScore(a=a_a * a_f * a_r * a_e * a_b, a_a=a_a, a_f=a_f, a_r=a_r, a_e=a_e, a_b=a_b)


# ---------------------------------------------------------------------------
# keypoint replay files
# ---------------------------------------------------------------------------

def keypoint_columns():
    return ["t"] + [f"{k}_{ax}" for k in KEYPOINT_ORDER for ax in "xyz"]


def write_keypoint_file(path, times, frames):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keypoint_columns())
        for t, kp in zip(times, frames):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in kp.as_row()])


def read_keypoint_file(path, side="right"):
    """Read a keypoint replay CSV into ``(times, frames)``."""
    times, frames = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != keypoint_columns():
            raise ValueError(f"{path}: unexpected header; expected {keypoint_columns()}")
        for lineno, row in enumerate(reader, start=2):
            try:
                vals = [float(x) for x in row]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            times.append(vals[0])
            pts = np.array(vals[1:]).reshape(len(KEYPOINT_ORDER), 3)
            frames.append(SkeletonKeypoints(**dict(zip(KEYPOINT_ORDER, pts)), side=side))
    return times, frames


def score_sequence(frames, th=DEFAULT_THRESHOLDS):
    """Score a keypoint sequence, carrying the previous angles through degeneracies."""
    prev, planes_prev = None, None
    out = []
    for kp in frames:
        angles = compute_joint_angles(kp, prev, planes_prev)
        try:
            planes_prev = compute_planes(kp, planes_prev)
        except ValueError:
            pass
        prev = angles
        out.append((angles, compute_score(angles, th)))
    return out
