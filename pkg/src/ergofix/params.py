"""
Controller parameter sets.

Defaults reproduce the experimental values: the ``arm`` profile is used for
arm-prioritised manipulation, the ``base`` profile swaps in heavier admittance
and disables posture feedback while the mobile base leads.

Config files name every quantity with its unit (``k_p_N_per_m`` etc.); see
:data:`FIXTURE_KEYS` for the full list.
"""

from dataclasses import dataclass, field, replace

import numpy as np


def _blocks(trans, rot):
    return np.array([trans] * 3 + [rot] * 3, dtype=float)


@dataclass
class FixtureParams:
    M_d: np.ndarray = field(default_factory=lambda: _blocks(5.0, 0.25))
    D_c: np.ndarray = field(default_factory=lambda: _blocks(20.0, 1.0))
    K_d: np.ndarray = field(default_factory=lambda: _blocks(600.0, 40.0))
    k_r: float = 200.0
    m: float = 0.5
    k_n: float = 1e3
    delta_n: float = np.deg2rad(5.0)
    phi_bar_n: float = np.deg2rad(55.0)
    eps_v: float = 1e-3
    a_p: float = 20.0
    a_o: float = 4.0
    b_p: float = 1.0
    b_o: float = 5.0
    c_p: float = 2500.0
    c_o: float = 20.0
    T_c: float = 1e-3

    def __post_init__(self):
        self.M_d = np.asarray(self.M_d, dtype=float)
        self.D_c = np.asarray(self.D_c, dtype=float)
        self.K_d = np.asarray(self.K_d, dtype=float)
        for name in ("M_d", "D_c", "K_d"):
            if getattr(self, name).shape != (6,):
                raise ValueError(f"{name} must hold 6 diagonal entries")
        if np.any(self.M_d <= 0) or np.any(self.D_c <= 0):
            raise ValueError("M_d and D_c entries must be positive")
        if np.any(self.K_d < 0):
            raise ValueError("K_d entries must be non-negative")
        if self.T_c <= 0 or self.m <= 0 or self.k_r <= 0:
            raise ValueError("T_c, m and k_r must be positive")
        if not 0 < self.delta_n < self.phi_bar_n:
            raise ValueError("need 0 < delta_n < phi_bar_n")
        for name in ("k_n", "eps_v", "a_p", "a_o", "b_p", "b_o", "c_p", "c_o"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def k_p(self):
        return float(self.K_d[0])

    @property
    def k_o(self):
        return float(self.K_d[3])


def arm_profile(**overrides):
    return replace(FixtureParams(), **overrides)


def base_profile(**overrides):
    """Arm profile with the heavier admittance used while the base leads."""
    p = replace(
        FixtureParams(),
        M_d=_blocks(15.0, 0.5),
        D_c=_blocks(40.0, 1.0),
        K_d=np.zeros(6),
        c_p=0.0,
        c_o=0.0,
    )
    return replace(p, **overrides)


@dataclass
class IkWeights:
    W_x: np.ndarray = field(default_factory=lambda: np.full(6, 1e3))
    W_q_arm: np.ndarray = field(default_factory=lambda: np.array([1e4] * 3 + [1.0] * 6))
    W_q_base: np.ndarray = field(default_factory=lambda: np.ones(9))
    # dimensionless per-cycle gain; the feedback velocity is K_x x_e / T_c
    K_x: np.ndarray = field(default_factory=lambda: _blocks(0.01, 0.004))

    def __post_init__(self):
        for name in ("W_x", "W_q_arm", "W_q_base", "K_x"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.W_x <= 0) or np.any(self.W_q_arm <= 0) or np.any(self.W_q_base <= 0):
            raise ValueError("weights must be positive")


@dataclass
class RepulsionConfig:
    r_c: float = 0.375
    L: float = 0.31
    r_s: float = 0.02
    d_0: float = 0.10
    a_k: float = 0.11
    # human-side half plane in the base frame: points x with n_h . x >= offset
    human_normal: tuple = (1.0, 0.0)
    human_offset: float = 0.0

    def __post_init__(self):
        for name in ("r_c", "L", "r_s", "d_0", "a_k"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        n = np.asarray(self.human_normal, dtype=float)
        if n.shape != (2,) or np.linalg.norm(n) == 0:
            raise ValueError("human_normal must be a non-zero 2-vector")
        self.human_normal = tuple(n / np.linalg.norm(n))


# config key -> (attribute, kind) where kind selects how the value is applied
FIXTURE_KEYS = {
    "M_d_translational_kg": ("M_d", "trans"),
    "M_d_rotational_kg_m2": ("M_d", "rot"),
    "D_c_translational_Ns_per_m": ("D_c", "trans"),
    "D_c_rotational_Nms_per_rad": ("D_c", "rot"),
    "k_p_N_per_m": ("K_d", "trans"),
    "k_o_Nm_per_rad": ("K_d", "rot"),
    "k_r_per_s": ("k_r", "scalar"),
    "m_exponent": ("m", "scalar"),
    "k_n_per_s": ("k_n", "scalar"),
    "delta_n_deg": ("delta_n", "deg"),
    "phi_bar_n_deg": ("phi_bar_n", "deg"),
    "eps_v_m_per_s": ("eps_v", "scalar"),
    "a_p_Ns_per_m": ("a_p", "scalar"),
    "a_o_Nms_per_rad": ("a_o", "scalar"),
    "b_p_per_W": ("b_p", "scalar"),
    "b_o_per_W": ("b_o", "scalar"),
    "c_p_Ns_per_m2": ("c_p", "scalar"),
    "c_o_Nms_per_rad": ("c_o", "scalar"),
}


def apply_fixture_overrides(params, overrides, where="profile"):
    """Return ``params`` with config overrides applied.

    Raises ``ValueError`` naming the offending key for unknown keys or
    non-numeric values.
    """
    changes = {}
    vecs = {name: getattr(params, name).copy() for name in ("M_d", "D_c", "K_d")}
    for key, value in overrides.items():
        if key not in FIXTURE_KEYS:
            raise ValueError(f"{where}.{key}: unknown parameter")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{where}.{key}: expected a number, got {value!r}")
        attr, kind = FIXTURE_KEYS[key]
        if kind == "trans":
            vecs[attr][:3] = value
        elif kind == "rot":
            vecs[attr][3:] = value
        elif kind == "deg":
            changes[attr] = float(np.deg2rad(value))
        else:
            changes[attr] = float(value)
    try:
        return replace(params, **vecs, **changes)
    except ValueError as exc:
        raise ValueError(f"{where}: {exc}") from None
