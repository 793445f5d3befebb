"""
Ergonomics-driven admittance controller with a postural virtual fixture.

The end-effector follows the admittance model

    M_d dv/dt + D_d v = F_h + u_c

while a god-object pose tracks it at a rate scaled by ``f(a, p_e)``. When the
posture score ``a`` drops to zero and the user keeps moving away, the god-object
stops and the spring ``u_c = K_d [p_e; R_e^T eps_e]`` pushes back.

A storage function is audited every tick so that any energy the discrete loop
creates shows up as a positive violation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .mathcore import (
    IDENTITY,
    PoseDeviation,
    angle_between,
    cross3,
    norm3,
    pose_deviation,
    quat_integrate,
    quat_mul,
    quat_normalize,
    smooth_step,
    unit_vector_rotate,
)


@dataclass
class Wrench:
    f_h: np.ndarray
    tau_h: np.ndarray

    def __post_init__(self):
        self.f_h = np.asarray(self.f_h, dtype=float)
        self.tau_h = np.asarray(self.tau_h, dtype=float)

    def as_vector(self):
        return np.concatenate([self.f_h, self.tau_h])

    @classmethod
    def zero(cls):
        return cls(np.zeros(3), np.zeros(3))


@dataclass
class PassivityLedger:
    """Running energy audit.

    ``V`` storage, ``work_in`` the trapezoidal integral of v.F_h, ``bound`` the
    completing-the-squares upper bound on V. Violations are positive when the
    inequality is broken.
    """

    V: float = 0.0
    V0: float = 0.0
    work_in: float = 0.0
    bound: float = 0.0
    V_max: float = 0.0
    passivity_violation: float = -np.inf
    bound_violation: float = -np.inf
    _last_power: float = 0.0
    _last_bound_rate: float = 0.0

    @property
    def worst_violation(self):
        return max(self.passivity_violation, self.bound_violation)

    def rebase(self, V):
        """Restart the integrals from the current storage (after a profile swap)."""
        self.V = self.V0 = V
        self.work_in = 0.0
        self.bound = V
        self.V_max = max(self.V_max, V)
        self._last_power = 0.0
        self._last_bound_rate = 0.0


@dataclass
class FixtureState:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    Q: np.ndarray = field(default_factory=lambda: IDENTITY.copy())
    v: np.ndarray = field(default_factory=lambda: np.zeros(6))
    p_g: np.ndarray = None
    Q_g: np.ndarray = None
    n: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    ledger: PassivityLedger = field(default_factory=PassivityLedger)

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.Q = np.asarray(self.Q, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.p_g = self.p.copy() if self.p_g is None else np.asarray(self.p_g, dtype=float)
        self.Q_g = self.Q.copy() if self.Q_g is None else np.asarray(self.Q_g, dtype=float)


@dataclass
class TickDiagnostics:
    f: float
    u_c: np.ndarray
    D_d: np.ndarray
    d_vp: float
    d_vo: float
    d_fp: float
    d_fo: float
    p_e_norm: float
    Psi_e: float
    phi_n: float


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def compute_f(a, p_e, n, params):
    """God-object follow rate in [0, 1].

    Equals one for an ergonomic posture; for a risky posture it stays high only
    while the deviation points along ``n`` (the user heading back).
    """
    am = a**params.m
    phi = abs(angle_between(n, p_e))
    h = smooth_step(phi, params.phi_bar_n - params.delta_n, params.phi_bar_n)
    return am + (1.0 - am) * h


def step_direction(n, v_lin, a, params):
    """Rotate ``n`` toward the current motion direction at a rate scaled by ``a``.

    Returns ``(n_new, phi_n)``.
    """
    speed = norm3(v_lin)
    n_d = v_lin / speed if speed > params.eps_v else np.zeros(3)
    phi_n = angle_between(n, n_d)
    omega_n = params.k_n * a * math.sin(abs(phi_n) / 2.0)
    if omega_n == 0.0:
        return np.asarray(n, dtype=float), phi_n
    return unit_vector_rotate(n, omega_n * params.T_c * cross3(n, n_d)), phi_n


def step_god_object(p_g, Q_g, p, Q, f, params, dev=None):
    """Advance the god-object one period along ``v_g = -k_r f [p_e; eps_e]``.

    The flow is integrated exactly with the robot pose held over the period:
    ``|p_e|`` shrinks by ``exp(-k_r f T_c)`` and the deviation angle obeys
    ``dphi/dt = -k_r f sin(phi/2)``, whose solution keeps
    ``tan(phi/4) exp(k_r f t/2)`` constant. The axis of the deviation does not
    change, so the new deviation is returned as well.

    Returns ``(p_g_new, Q_g_new, dev_new)``.
    """
    if dev is None:
        dev = pose_deviation(p_g, Q_g, p, Q)
    c = params.k_r * f * params.T_c
    p_e_new = dev.p_e * math.exp(-c)
    p_g_new = np.asarray(p, dtype=float) + p_e_new
    s = norm3(dev.eps_e)
    if s < 1e-15 or c == 0.0:
        return p_g_new, Q_g, PoseDeviation(p_e_new, dev.Q_e)
    phi = 2.0 * math.atan2(s, dev.eta_e)
    half = 2.0 * math.atan(math.tan(phi / 4.0) * math.exp(-0.5 * c))
    k = math.sin(half) / s
    eps = dev.eps_e
    Q_e_new = np.array([math.cos(half), k * eps[0], k * eps[1], k * eps[2]])
    return p_g_new, quat_normalize(quat_mul(Q_e_new, Q)), PoseDeviation(p_e_new, Q_e_new)


def control_term(dev, K_d):
    """Virtual-fixture spring wrench ``K_d [p_e; R_e^T eps_e]``."""
    # R_e^T eps_e == eps_e (eps_e lies on the rotation axis of R_e)
    e = dev.eps_e
    return K_d * np.array([*dev.p_e, e[0], e[1], e[2]])


def variable_damping(v, F_h, dev, f, params):
    """Diagonal damping D_c + power-based + ergonomics-based terms.

    Returns ``(D_d, (d_vp, d_vo, d_fp, d_fo))``.
    """
    s_p = max(0.0, float(v[:3] @ F_h[:3]))
    s_o = max(0.0, float(v[3:] @ F_h[3:]))
    d_vp = params.a_p * math.exp(-params.b_p * s_p)
    d_vo = params.a_o * math.exp(-params.b_o * s_o)
    d_fp = params.c_p * norm3(dev.p_e) * (1.0 - f)
    d_fo = params.c_o * norm3(dev.eps_e) * (1.0 - f)
    extra = np.array([d_vp + d_fp] * 3 + [d_vo + d_fo] * 3)
    return params.D_c + extra, (d_vp, d_vo, d_fp, d_fo)


def storage(v, dev, params):
    """``1/2 v'M_d v + 1/2 k_p |p_e|^2 + 2 k_o (1 - eta_e)``."""
    return (0.5 * float(v @ (params.M_d * v))
            + 0.5 * params.k_p * float(dev.p_e @ dev.p_e)
            + 2.0 * params.k_o * dev.Psi_e)


def passivity_audit(ledger, v, F_h, D_d, dev, params):
    """Fold one tick into the ledger.

    ``v`` is the velocity produced this tick by force ``F_h`` and ``dev`` the
    deviation after the pose updates.
    """
    Tc = params.T_c
    power = float(v @ F_h)
    bound_rate = float(F_h @ F_h) / (4.0 * min(D_d))
    ledger.work_in += 0.5 * Tc * (ledger._last_power + power)
    ledger.bound += 0.5 * Tc * (ledger._last_bound_rate + bound_rate)
    ledger._last_power = power
    ledger._last_bound_rate = bound_rate
    ledger.V = storage(v, dev, params)
    ledger.V_max = max(ledger.V_max, ledger.V)
    ledger.passivity_violation = max(ledger.passivity_violation, ledger.V - ledger.V0 - ledger.work_in)
    ledger.bound_violation = max(ledger.bound_violation, ledger.V - ledger.bound)
    return ledger


# ---------------------------------------------------------------------------
# control period
# ---------------------------------------------------------------------------

def tick(state, F_h, a, params):
    """Run one control period in place and return ``(v, diagnostics)``.

    Raises ``ValueError`` (leaving ``state`` untouched) for a non-finite wrench
    or a score outside [0, 1].
    """
    F = F_h.as_vector() if isinstance(F_h, Wrench) else np.asarray(F_h, dtype=float)
    if F.shape != (6,) or not np.all(np.isfinite(F)):
        raise ValueError("human wrench must be a finite 6-vector")
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"posture score must lie in [0, 1], got {a}")
    Tc = params.T_c

    dev = pose_deviation(state.p_g, state.Q_g, state.p, state.Q)
    f = compute_f(a, dev.p_e, state.n, params)
    n_new, phi_n = step_direction(state.n, state.v[:3], a, params)
    u_c = control_term(dev, params.K_d)
    D_d, (d_vp, d_vo, d_fp, d_fo) = variable_damping(state.v, F, dev, f, params)

    Mt = params.M_d / Tc
    v_new = (Mt * state.v + F + u_c) / (Mt + D_d)
    if not np.all(np.isfinite(v_new)):
        raise ValueError("admittance update diverged")

    p_new = state.p + v_new[:3] * Tc
    Q_new = quat_integrate(state.Q, v_new[3:], Tc)
    p_g_new, Q_g_new, dev_new = step_god_object(state.p_g, state.Q_g, p_new, Q_new, f, params)

    state.p, state.Q, state.v = p_new, Q_new, v_new
    state.p_g, state.Q_g, state.n = p_g_new, Q_g_new, n_new
    passivity_audit(state.ledger, v_new, F, D_d, dev_new, params)

    diag = TickDiagnostics(
        f=f, u_c=u_c, D_d=D_d, d_vp=d_vp, d_vo=d_vo, d_fp=d_fp, d_fo=d_fo,
        p_e_norm=norm3(dev_new.p_e), Psi_e=dev_new.Psi_e, phi_n=phi_n,
    )
    return v_new, diag


class FixtureController:
    """Owns a :class:`FixtureState` and the active parameter profile."""

    def __init__(self, params, p0=None, Q0=None):
        self.params = params
        self.state = FixtureState(
            p=np.zeros(3) if p0 is None else p0,
            Q=IDENTITY.copy() if Q0 is None else Q0,
        )
        self.state.ledger.rebase(self.storage())

    def storage(self):
        dev = pose_deviation(self.state.p_g, self.state.Q_g, self.state.p, self.state.Q)
        return storage(self.state.v, dev, self.params)

    def set_params(self, params):
        """Swap the parameter profile; the energy audit restarts from here."""
        self.params = params
        self.state.ledger.rebase(self.storage())

    def tick(self, F_h, a):
        return tick(self.state, F_h, a, self.params)
