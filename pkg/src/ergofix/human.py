"""
Kinematic stand-in for the human partner.

Two constructions live here:

* :func:`posture_to_keypoints` places keypoints from chosen joint angles. It is
  built directly from the anatomical meaning of each angle and serves as the
  independent oracle for :func:`ergofix.ergonomics.compute_joint_angles`.
* :class:`SyntheticHuman` produces keypoints for a hand that is rigidly coupled
  to the robot handle, placing the elbow with two-link inverse kinematics.

:class:`HumanForceModel` turns a scripted hand reference into the interaction
wrench applied at the handle.
"""

from dataclasses import dataclass, field

import numpy as np

from .ergonomics import SkeletonKeypoints
from .mathcore import rot_z


@dataclass
class BodyGeometry:
    """Segment lengths in metres."""

    trunk: float = 0.50          # pelvis to neck
    neck_to_thorax: float = 0.20
    shoulder_half_width: float = 0.19
    thigh: float = 0.45
    upper_arm: float = 0.30
    forearm: float = 0.35        # elbow to the grasp point on the handle

    def __post_init__(self):
        for name in ("trunk", "neck_to_thorax", "shoulder_half_width", "thigh", "upper_arm", "forearm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.neck_to_thorax >= self.trunk:
            raise ValueError("thorax must lie between neck and pelvis")


def _rot_y(b):
    c, s = np.cos(b), np.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _trunk_points(geom, bend):
    """Pelvis-centred torso keypoints in a body frame (x forward, y left, z up)."""
    Rb = _rot_y(bend)
    Pl = np.zeros(3)
    Kn = np.array([0.0, 0.0, -geom.thigh])
    Ne = Rb @ np.array([0.0, 0.0, geom.trunk])
    Th = Rb @ np.array([0.0, 0.0, geom.trunk - geom.neck_to_thorax])
    S_R = Ne + Rb @ np.array([0.0, -geom.shoulder_half_width, 0.0])
    S_L = Ne + Rb @ np.array([0.0, geom.shoulder_half_width, 0.0])
    return Rb, Pl, Kn, Ne, Th, S_R, S_L


def _resting_arm(S, Rb, out, geom):
    """Idle arm: hanging, slightly abducted, elbow bent."""
    d = Rb @ np.array([0.0, 0.15 * out, -1.0])
    d /= np.linalg.norm(d)
    E = S + geom.upper_arm * d
    e = Rb @ np.array([0.8, 0.0, -0.6])
    return E, E + geom.forearm * e


def posture_to_keypoints(theta_a, theta_f, theta_r, theta_e, theta_b, side="right",
                         geom=None, R=None, t=None):
    """Place keypoints so the tracked arm and trunk realise the given angles.

    Valid for ``|theta_a|, |theta_f| < pi/2`` and ``0 < theta_e < pi``. The
    whole skeleton is then moved by the rigid motion ``x -> R x + t``.
    """
    geom = geom or BodyGeometry()
    right = side == "right"
    out = -1.0 if right else 1.0  # lateral direction of the tracked shoulder in body y
    Rb, Pl, Kn, Ne, Th, S_R, S_L = _trunk_points(geom, theta_b)
    fwd = Rb @ np.array([1.0, 0.0, 0.0])
    lat = Rb @ np.array([0.0, out, 0.0])
    up = Rb @ np.array([0.0, 0.0, 1.0])

    # upper arm: coronal-plane tilt theta_a (outward), sagittal-plane tilt theta_f (forward)
    d = (np.sin(theta_f) * np.cos(theta_a) * fwd
         + np.sin(theta_a) * np.cos(theta_f) * lat
         - np.cos(theta_a) * np.cos(theta_f) * up)
    d /= np.linalg.norm(d)

    # forearm: swung about the upper arm by theta_r, away from straight by pi - theta_e
    S = S_R if right else S_L
    u = np.cross(S - Ne, d)
    u /= np.linalg.norm(u)
    w0 = u if right else -u
    w1 = np.cross(u, d)  # medial direction
    w = np.cos(theta_r) * w0 + np.sin(theta_r) * w1
    e = -np.cos(theta_e) * d + np.sin(theta_e) * w

    E = S + geom.upper_arm * d
    W = E + geom.forearm * e
    other_S = S_L if right else S_R
    E_o, W_o = _resting_arm(other_S, Rb, -out, geom)
    if right:
        pts = dict(E_R=E, W_R=W, E_L=E_o, W_L=W_o)
    else:
        pts = dict(E_L=E, W_L=W, E_R=E_o, W_R=W_o)
    kp = SkeletonKeypoints(S_R=S_R, S_L=S_L, Ne=Ne, Th=Th, Pl=Pl, Kn=Kn, side=side, **pts)
    if R is not None or t is not None:
        kp = kp.transformed(np.eye(3) if R is None else R, np.zeros(3) if t is None else t)
    return kp


def elbow_angle_for_reach(distance, upper_arm, forearm):
    """Interior elbow angle that puts the hand ``distance`` from the shoulder."""
    c = (upper_arm**2 + forearm**2 - distance**2) / (2.0 * upper_arm * forearm)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


@dataclass
class SyntheticHuman:
    """Standing human whose tracked hand holds the robot handle.

    ``pelvis`` is the world position of the pelvis keypoint and ``heading`` the
    facing direction (yaw, rad). The elbow is placed in the vertical plane
    through shoulder and hand, below the shoulder-hand line.
    """

    pelvis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    heading: float = 0.0
    side: str = "right"
    geom: BodyGeometry = field(default_factory=BodyGeometry)
    leg_offset: float = 0.10   # lateral offset of each leg from the pelvis (m)
    leg_radius: float = 0.06

    def __post_init__(self):
        self.pelvis = np.asarray(self.pelvis, dtype=float)
        if self.side not in ("right", "left"):
            raise ValueError("side must be 'right' or 'left'")

    def torso(self, trunk_bend=0.0, pelvis=None):
        pelvis = self.pelvis if pelvis is None else np.asarray(pelvis, dtype=float)
        Rh = rot_z(self.heading)
        Rb, Pl, Kn, Ne, Th, S_R, S_L = _trunk_points(self.geom, trunk_bend)
        tf = lambda x: Rh @ x + pelvis  # noqa: E731
        return Rh @ Rb, tf(Pl), tf(Kn), tf(Ne), tf(Th), tf(S_R), tf(S_L)

    def shoulder(self, trunk_bend=0.0, pelvis=None):
        _, _, _, _, _, S_R, S_L = self.torso(trunk_bend, pelvis)
        return S_R if self.side == "right" else S_L

    def legs(self, pelvis=None):
        """Centres (x, y) of the two leg discs."""
        pelvis = self.pelvis if pelvis is None else np.asarray(pelvis, dtype=float)
        lat = rot_z(self.heading)[:2, 1]
        return [pelvis[:2] + self.leg_offset * lat, pelvis[:2] - self.leg_offset * lat]


def comfortable_pelvis(hand, heading=0.0, side="right", geom=None, reach_fwd=0.35, reach_down=0.35):
    """Pelvis position that puts the tracked shoulder ``reach_fwd`` behind and
    ``reach_down`` above ``hand`` (upright trunk)."""
    geom = geom or BodyGeometry()
    lat = -geom.shoulder_half_width if side == "right" else geom.shoulder_half_width
    shoulder_from_pelvis = np.array([0.0, lat, geom.trunk])
    hand_from_shoulder = np.array([reach_fwd, 0.0, -reach_down])
    return np.asarray(hand, dtype=float) - rot_z(heading) @ (shoulder_from_pelvis + hand_from_shoulder)


def synthesize_keypoints(human, hand, trunk_bend=0.0, pelvis=None):
    """Skeleton for a hand at ``hand`` (world).

    Returns ``(keypoints, clamped)``. The wrist keypoint is always ``hand``. A
    hand beyond reach is treated as reach-limited: the elbow is placed for a
    straight arm pointing at the hand and ``clamped`` is True (likewise for a
    hand too close to the shoulder, using the shortest feasible reach).
    """
    g = human.geom
    R, Pl, Kn, Ne, Th, S_R, S_L = human.torso(trunk_bend, pelvis)
    right = human.side == "right"
    S = S_R if right else S_L
    hand = np.asarray(hand, dtype=float)

    reach = g.upper_arm + g.forearm
    D_min = abs(g.upper_arm - g.forearm) + 1e-6
    r = hand - S
    D = np.linalg.norm(r)
    clamped = False
    if D > reach:
        D = reach
        clamped = True
    elif D < D_min:
        if D < 1e-12:
            r = -R[:, 2]
        D = D_min
        clamped = True
    W = hand
    u1 = r / np.linalg.norm(r)

    # in-plane direction perpendicular to the shoulder-hand line, pointing down
    down = np.array([0.0, 0.0, -1.0])
    p = down - (down @ u1) * u1
    if np.linalg.norm(p) < 1e-6:
        fwd = R[:, 0]
        p = fwd - (fwd @ u1) * u1
    p /= np.linalg.norm(p)
    cos_alpha = (g.upper_arm**2 + D**2 - g.forearm**2) / (2.0 * g.upper_arm * D)
    alpha = np.arccos(np.clip(cos_alpha, -1.0, 1.0))
    E = S + g.upper_arm * (np.cos(alpha) * u1 + np.sin(alpha) * p)

    other = S_L if right else S_R
    E_o, W_o = _resting_arm(other, R, 1.0 if right else -1.0, g)
    if right:
        pts = dict(E_R=E, W_R=W, E_L=E_o, W_L=W_o)
    else:
        pts = dict(E_L=E, W_L=W, E_R=E_o, W_R=W_o)
    kp = SkeletonKeypoints(S_R=S_R, S_L=S_L, Ne=Ne, Th=Th, Pl=Pl, Kn=Kn, side=human.side, **pts)
    return kp, clamped


@dataclass
class HumanForceModel:
    """Saturated hand impedance pulling the handle toward a scripted reference."""

    K_h: float = 400.0   # N/m
    D_h: float = 30.0    # Ns/m
    saturation: float = 40.0  # N

    def __post_init__(self):
        if self.K_h < 0 or self.D_h < 0 or self.saturation < 0:
            raise ValueError("force model gains and saturation must be non-negative")

    def force(self, p_ref, p_hand, v_hand, disturbance=None):
        """Hand force; ``disturbance`` is added before saturation."""
        f = self.K_h * (np.asarray(p_ref) - p_hand) - self.D_h * np.asarray(v_hand)
        if disturbance is not None:
            f = f + disturbance
        n = np.linalg.norm(f)
        if n > self.saturation:
            f *= self.saturation / n
        return f
