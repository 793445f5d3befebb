"""
Whole-body kinematics of a planar mobile base carrying a serial arm.

Generalised coordinates are ``q = [x, y, yaw, q_1 .. q_n]``. The base pose is
``Trans(x, y, 0) Rz(yaw)``; the arm is mounted on it by a fixed transform and
each arm joint applies a fixed parent transform followed by a rotation about
its local axis.

Base velocities handed to and returned by the inverse kinematics are expressed
in the base frame ``(v_x, v_y, omega)``, which is how a wheeled base is
commanded. :func:`jacobian` itself is the plain derivative of the world pose
with respect to ``q``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import yaml

from .mathcore import quat_mul, quat_conj, rot_exp, rotmat_to_quat


def _transform(R=None, p=None):
    T = np.eye(4)
    if R is not None:
        T[:3, :3] = R
    if p is not None:
        T[:3, 3] = p
    return T


def _rpy(roll, pitch, yaw):
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    Rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    Ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    Rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return Rz @ Ry @ Rx


def dh_transform(d, a, alpha):
    """Fixed part ``Tz(d) Tx(a) Rx(alpha)`` of a standard DH link."""
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array([
        [1.0, 0.0, 0.0, a],
        [0.0, ca, -sa, 0.0],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


@dataclass
class Joint:
    origin: np.ndarray           # 4x4 transform from the previous joint frame
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    lower: float = -np.inf
    upper: float = np.inf

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.axis = np.asarray(self.axis, dtype=float)
        if self.origin.shape != (4, 4):
            raise ValueError("joint origin must be a 4x4 transform")
        R = self.origin[:3, :3]
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
            raise ValueError("joint origin rotation is not orthonormal")
        n = np.linalg.norm(self.axis)
        if n == 0:
            raise ValueError("joint axis must be non-zero")
        self.axis = self.axis / n
        if not self.lower < self.upper:
            raise ValueError("joint limits need lower < upper")


# UR16e-like geometry (standard DH, metres)
UR16E_DH = (
    # d, a, alpha
    (0.1807, 0.0, np.pi / 2),
    (0.0, -0.4784, 0.0),
    (0.0, -0.36, 0.0),
    (0.17415, 0.0, np.pi / 2),
    (0.11985, 0.0, -np.pi / 2),
    (0.11655, 0.0, 0.0),
)


@dataclass
class ChainModel:
    """Planar base plus revolute arm.

    ``mount`` places the first arm joint frame in the base frame and ``tool``
    is the fixed flange-to-handle transform.
    """

    joints: list
    mount: np.ndarray = field(default_factory=lambda: np.eye(4))
    tool: np.ndarray = field(default_factory=lambda: np.eye(4))

    def __post_init__(self):
        if len(self.joints) < 6:
            raise ValueError("the arm needs at least 6 joints")
        self.mount = np.asarray(self.mount, dtype=float)
        self.tool = np.asarray(self.tool, dtype=float)
        self._axes = np.array([j.axis for j in self.joints])
        self._origins = [j.origin for j in self.joints]

    @property
    def n_arm(self):
        return len(self.joints)

    @property
    def n_q(self):
        return 3 + len(self.joints)

    @property
    def lower(self):
        return np.array([-np.inf] * 3 + [j.lower for j in self.joints])

    @property
    def upper(self):
        return np.array([np.inf] * 3 + [j.upper for j in self.joints])

    @classmethod
    def from_dh(cls, dh, mount=None, tool=None):
        """Standard DH rows ``(d, a, alpha)``; all joints rotate about local z."""
        joints = []
        prev = np.eye(4)
        for d, a, alpha in dh:
            joints.append(Joint(origin=prev))
            prev = dh_transform(d, a, alpha)
        tool = np.eye(4) if tool is None else np.asarray(tool, dtype=float)
        return cls(joints=joints, mount=np.eye(4) if mount is None else mount, tool=prev @ tool)

    @classmethod
    def default(cls):
        """UR16e-like arm mounted 0.2 m ahead of the base centre, 0.45 m up."""
        return cls.from_dh(UR16E_DH, mount=_transform(p=[0.2, 0.0, 0.45]))

    @classmethod
    def from_dict(cls, data, where="chain"):
        """Build from a mapping with ``dh`` rows or explicit ``joints``.

        Joints use ``xyz_m``, ``rpy_rad``, ``axis`` and optional
        ``lower_rad``/``upper_rad``. ``mount`` and ``tool`` take ``xyz_m`` and
        ``rpy_rad``.
        """
        if not isinstance(data, dict):
            raise ValueError(f"{where}: expected a mapping")
        known = {"dh", "joints", "mount", "tool", "limits_rad"}
        for key in data:
            if key not in known:
                raise ValueError(f"{where}.{key}: unknown key")

        def frame(spec, path):
            if spec is None:
                return np.eye(4)
            extra = set(spec) - {"xyz_m", "rpy_rad"}
            if extra:
                raise ValueError(f"{path}.{sorted(extra)[0]}: unknown key")
            xyz = _floats(spec.get("xyz_m", [0, 0, 0]), 3, f"{path}.xyz_m")
            rpy = _floats(spec.get("rpy_rad", [0, 0, 0]), 3, f"{path}.rpy_rad")
            return _transform(_rpy(*rpy), xyz)

        mount = frame(data.get("mount"), f"{where}.mount")
        tool = frame(data.get("tool"), f"{where}.tool")
        if ("dh" in data) == ("joints" in data):
            raise ValueError(f"{where}: give exactly one of 'dh' or 'joints'")
        if "dh" in data:
            rows = [_floats(r, 3, f"{where}.dh[{i}]") for i, r in enumerate(data["dh"])]
            model = cls.from_dh(rows, mount=mount, tool=tool)
        else:
            joints = []
            for i, js in enumerate(data["joints"]):
                path = f"{where}.joints[{i}]"
                extra = set(js) - {"xyz_m", "rpy_rad", "axis", "lower_rad", "upper_rad"}
                if extra:
                    raise ValueError(f"{path}.{sorted(extra)[0]}: unknown key")
                joints.append(Joint(
                    origin=frame({k: js[k] for k in ("xyz_m", "rpy_rad") if k in js}, path),
                    axis=_floats(js.get("axis", [0, 0, 1]), 3, f"{path}.axis"),
                    lower=float(js.get("lower_rad", -np.inf)),
                    upper=float(js.get("upper_rad", np.inf)),
                ))
            model = cls(joints=joints, mount=mount, tool=tool)
        if "limits_rad" in data:
            lims = data["limits_rad"]
            if len(lims) != model.n_arm:
                raise ValueError(f"{where}.limits_rad: need one [lower, upper] per joint")
            for j, lim in zip(model.joints, lims):
                j.lower, j.upper = _floats(lim, 2, f"{where}.limits_rad")
        return model

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh), where=str(path))


def _floats(values, n, path):
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError):
        raise ValueError(f"{path}: expected {n} numbers, got {values!r}") from None
    if len(out) != n:
        raise ValueError(f"{path}: expected {n} numbers, got {len(out)}")
    return out


def base_transform(q):
    c, s = np.cos(q[2]), np.sin(q[2])
    return np.array([[c, -s, 0.0, q[0]], [s, c, 0.0, q[1]], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])


def _axis_rotation(axis, angle):
    if axis[0] == 0.0 and axis[1] == 0.0:
        c, s = np.cos(angle), np.sin(angle * axis[2])
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return rot_exp(axis * angle)


def _chain_frames(model, q):
    """World transforms of each arm joint frame (after its rotation) and the handle."""
    T = base_transform(q) @ model.mount
    frames = []
    for i, origin in enumerate(model._origins):
        T = T @ origin
        T[:3, :3] = T[:3, :3] @ _axis_rotation(model._axes[i], q[3 + i])
        frames.append(T)
    return frames, T @ model.tool


def _check_q(model, q):
    q = np.asarray(q, dtype=float)
    if q.shape != (model.n_q,):
        raise ValueError(f"q must have {model.n_q} entries")
    return q


def forward_kinematics(model, q):
    """World pose ``(p, Q)`` of the handle."""
    _, T = _chain_frames(model, _check_q(model, q))
    return T[:3, 3].copy(), rotmat_to_quat(T[:3, :3])


def _jacobian_from_frames(model, q, frames, T):
    p = T[:3, 3]
    J = np.zeros((6, model.n_q))
    J[0, 0] = 1.0
    J[1, 1] = 1.0
    J[0, 2] = -(p[1] - q[1])
    J[1, 2] = p[0] - q[0]
    J[5, 2] = 1.0
    Z = np.array([Tj[:3, :3] @ a for Tj, a in zip(frames, model._axes)])
    O = np.array([Tj[:3, 3] for Tj in frames])
    J[:3, 3:] = np.cross(Z, p - O).T
    J[3:, 3:] = Z.T
    return J


def jacobian(model, q):
    """Geometric Jacobian ``d[p; theta]/dq`` in the world frame, shape 6 x (3+n)."""
    q = _check_q(model, q)
    frames, T = _chain_frames(model, q)
    return _jacobian_from_frames(model, q, frames, T)


def kinematics(model, q):
    """Handle pose and Jacobian from one pass over the chain: ``(p, Q, J)``."""
    q = _check_q(model, q)
    frames, T = _chain_frames(model, q)
    return T[:3, 3].copy(), rotmat_to_quat(T[:3, :3]), _jacobian_from_frames(model, q, frames, T)


def base_velocity_map(yaw, n_arm):
    """Map from ``[v_x, v_y, omega]`` in the base frame plus arm rates to ``dq/dt``."""
    c, s = np.cos(yaw), np.sin(yaw)
    B = np.eye(3 + n_arm)
    B[:2, :2] = [[c, -s], [s, c]]
    return B


def body_jacobian(model, q):
    """Jacobian with respect to base-frame base velocities and arm rates."""
    return jacobian(model, q) @ base_velocity_map(q[2], model.n_arm)


def integrate_joints(model, q, qdot_body, Tc):
    """Advance ``q`` by one period; returns ``(q_new, clamped)``."""
    q_new = q + base_velocity_map(q[2], model.n_arm) @ qdot_body * Tc
    lo, hi = model.lower, model.upper
    clamped = bool(np.any(q_new < lo) or np.any(q_new > hi))
    return np.clip(q_new, lo, hi), clamped


def pose_error(p, Q, p_ref, Q_ref):
    """``x_e = [p - p_ref; eps]`` where ``eps`` is the vector part of ``Q Q_ref^-1``."""
    dq = quat_mul(Q, quat_conj(Q_ref))
    if dq[0] < 0:
        dq = -dq
    return np.concatenate([p - p_ref, dq[1:]])


# ---------------------------------------------------------------------------
# damped least squares
# ---------------------------------------------------------------------------

def dls_solve(J, W_x, W_q, v, x_e, K_x):
    """Weighted damped least-squares joint velocity.

    Solves ``(J'W_x J + W_q) qdot = J'W_x (v - K_x x_e)`` by Cholesky and
    returns ``(qdot_p, J_star)`` with ``J_star = (J'W_x J + W_q)^-1 J'W_x``.
    ``W_x``, ``W_q`` and ``K_x`` are diagonals given as vectors.
    """
    J = np.asarray(J, dtype=float)
    W_x = np.asarray(W_x, dtype=float)
    W_q = np.asarray(W_q, dtype=float)
    v_prime = np.asarray(v, dtype=float) - np.asarray(K_x, dtype=float) * np.asarray(x_e, dtype=float)
    if not (np.all(np.isfinite(J)) and np.all(np.isfinite(v_prime))):
        raise ValueError("dls_solve: non-finite input")
    if np.any(W_x <= 0) or np.any(W_q <= 0):
        raise ValueError("dls_solve: weights must be positive definite")
    JtW = J.T * W_x
    H = JtW @ J + np.diag(W_q)
    try:
        c = scipy.linalg.cho_factor(H)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"dls_solve: factorisation failed ({exc})") from None
    J_star = scipy.linalg.cho_solve(c, JtW)
    return J_star @ v_prime, J_star


def null_space_command(qdot_p, J_star, J, v_r):
    """``qdot_c = qdot_p + (I - J* J) v_r``."""
    v_r = np.asarray(v_r, dtype=float)
    return qdot_p + v_r - J_star @ (J @ v_r)


# ---------------------------------------------------------------------------
# interaction modes
# ---------------------------------------------------------------------------

ARM_PRIORITY = "arm"
BASE_PRIORITY = "base"


@dataclass
class ModeState:
    mode: str = ARM_PRIORITY
    a_th: float = 0.5
    pending: bool = False

    def __post_init__(self):
        if self.mode not in (ARM_PRIORITY, BASE_PRIORITY):
            raise ValueError(f"unknown mode {self.mode!r}")


def mode_update(state, requested, a, profiles, weights, baseline=False):
    """Apply a mode request.

    Switching to base priority needs ``a >= a_th`` unless ``baseline`` is set;
    otherwise the request stays pending and is re-tried on the next call.
    ``requested`` may be None (keep the current request state). Returns
    ``(state, fixture_params, W_q, switched)``.
    """
    if requested is not None:
        if requested not in (ARM_PRIORITY, BASE_PRIORITY):
            raise ValueError(f"unknown mode {requested!r}")
        target = requested
    else:
        target = BASE_PRIORITY if state.pending else state.mode
    switched = False
    if target == ARM_PRIORITY:
        switched = state.mode != ARM_PRIORITY
        state.mode, state.pending = ARM_PRIORITY, False
    elif state.mode != BASE_PRIORITY:
        if baseline or a >= state.a_th:
            state.mode, state.pending, switched = BASE_PRIORITY, False, True
        else:
            state.pending = True
    W_q = weights.W_q_base if state.mode == BASE_PRIORITY else weights.W_q_arm
    return state, profiles[state.mode], W_q, switched
