"""
Scenario files.

A scenario is a YAML mapping whose keys carry their units (``duration_s``,
``k_p_N_per_m``). Everything except ``duration_s`` is optional and falls back
to the experimental defaults. Validation errors name the offending field as a
dotted path, e.g. ``fixture.arm.k_p_N_per_m``.
"""

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .ergonomics import ErgonomicThresholds
from .human import BodyGeometry, HumanForceModel
from .kinematics import ChainModel
from .params import FIXTURE_KEYS, IkWeights, RepulsionConfig, apply_fixture_overrides, arm_profile, base_profile

# comfortable handle pose in front of the default base (see kinematics.ChainModel.default)
DEFAULT_Q0 = (0.0, 0.0, 0.0, 2.8085, -0.279, -1.172, 1.4513, 1.2377, 0.0)


class ScenarioError(ValueError):
    pass


def _num(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {value!r}")
    if not np.isfinite(value):
        raise ScenarioError(f"{path}: must be finite")
    return float(value)


def _vec(value, n, path):
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ScenarioError(f"{path}: expected a list of {n} numbers, got {value!r}")
    return np.array([_num(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _mapping(value, path, allowed):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ScenarioError(f"{path}: expected a mapping")
    for key in value:
        if key not in allowed:
            raise ScenarioError(f"{path}.{key}: unknown key")
    return value


def _times(rows, path):
    times = [_num(r.get("t_s"), f"{path}[{i}].t_s") for i, r in enumerate(rows)]
    for i in range(1, len(times)):
        if times[i] < times[i - 1]:
            raise ScenarioError(f"{path}[{i}].t_s: script times must be non-decreasing")
    return np.array(times)


def _rows(value, path, allowed):
    if value is None:
        return []
    if not isinstance(value, list):
        raise ScenarioError(f"{path}: expected a list")
    out = []
    for i, row in enumerate(value):
        row = _mapping(row, f"{path}[{i}]", allowed)
        if "t_s" in allowed and "t_s" not in row:
            raise ScenarioError(f"{path}[{i}].t_s: missing")
        out.append(row)
    return out


@dataclass
class Waypoints:
    """Piecewise-linear script, held constant outside its time span."""

    t: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        if len(self.t) == 1:
            return self.values[0].copy()
        idx = np.searchsorted(self.t, t, side="right")
        if idx == 0:
            return self.values[0].copy()
        if idx >= len(self.t):
            return self.values[-1].copy()
        t0, t1 = self.t[idx - 1], self.t[idx]
        if t1 == t0:
            return self.values[idx].copy()
        s = (t - t0) / (t1 - t0)
        return (1.0 - s) * self.values[idx - 1] + s * self.values[idx]


@dataclass
class Obstacle:
    center: np.ndarray
    radius: float
    t_on: float = 0.0
    t_off: float = np.inf

    def active(self, t):
        return self.t_on <= t < self.t_off


@dataclass
class HumanSpec:
    side: str = "right"
    heading: float = np.pi
    pelvis: np.ndarray = None  # None: placed for a comfortable initial grasp
    geom: BodyGeometry = field(default_factory=BodyGeometry)
    leg_offset: float = 0.10
    leg_radius: float = 0.06
    leg_points: int = 16


@dataclass
class Scenario:
    duration: float
    T_c: float = 1e-3
    seed: int = 0
    name: str = "scenario"
    baseline: bool = False
    chain: ChainModel = field(default_factory=ChainModel.default)
    q0: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_Q0))
    profiles: dict = field(default_factory=lambda: {"arm": arm_profile(), "base": base_profile()})
    ik: IkWeights = field(default_factory=IkWeights)
    a_th: float = 0.5
    repulsion: RepulsionConfig = field(default_factory=RepulsionConfig)
    capsule_L: float = 0.31
    human: HumanSpec = field(default_factory=HumanSpec)
    force_model: HumanForceModel = field(default_factory=HumanForceModel)
    force_noise: float = 0.0
    thresholds: ErgonomicThresholds = field(default_factory=ErgonomicThresholds)
    # scripts
    hand_reference: Waypoints = None      # offsets from the initial handle position
    trunk_bend: Waypoints = None          # rad
    pelvis_offset: Waypoints = None       # offsets from the initial pelvis position
    mode_requests: list = field(default_factory=list)   # [(t, mode)]
    obstacles: list = field(default_factory=list)

    @property
    def n_ticks(self):
        return int(round(self.duration / self.T_c))


_TOP = {
    "name", "duration_s", "T_c_s", "seed", "baseline", "chain", "initial_q", "fixture", "ik",
    "repulsion", "human", "force_model", "thresholds_deg", "scripts",
}
_IK = {"W_x", "W_q_arm", "W_q_base", "K_x_translational", "K_x_rotational", "a_th"}
_REP = {"r_c_m", "L_m", "r_s_m", "d_0_m", "a_k_m_per_s", "human_normal", "human_offset_m"}
_HUMAN = {
    "side", "heading_deg", "pelvis_m", "leg_offset_m", "leg_radius_m", "leg_points",
    "trunk_m", "neck_to_thorax_m", "shoulder_half_width_m", "thigh_m", "upper_arm_m", "forearm_m",
}
_FORCE = {"K_h_N_per_m", "D_h_Ns_per_m", "saturation_N", "noise_std_N"}
_SCRIPTS = {"hand_reference", "trunk_bend", "pelvis", "mode", "obstacles"}


def _positive_weights(value, n, path):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        vec = np.full(n, _num(value, path))
    else:
        vec = _vec(value, n, path)
    if np.any(vec <= 0):
        raise ScenarioError(f"{path}: weights must be positive")
    return vec


def scenario_from_dict(data, where="scenario"):
    """Validate a parsed scenario mapping and resolve defaults."""
    if isinstance(data, dict) and data.get("kind") == "battery":
        raise ScenarioError(f"{where}: this is a passivity battery config; run it with 'verify'")
    data = _mapping(data, where, _TOP)
    if "duration_s" not in data:
        raise ScenarioError(f"{where}.duration_s: missing")
    duration = _num(data["duration_s"], f"{where}.duration_s")
    if duration <= 0:
        raise ScenarioError(f"{where}.duration_s: must be positive")
    sc = Scenario(duration=duration)
    if "name" in data:
        sc.name = str(data["name"])
    if "T_c_s" in data:
        sc.T_c = _num(data["T_c_s"], f"{where}.T_c_s")
        if sc.T_c <= 0:
            raise ScenarioError(f"{where}.T_c_s: must be positive")
    if "seed" in data:
        if isinstance(data["seed"], bool) or not isinstance(data["seed"], int):
            raise ScenarioError(f"{where}.seed: expected an integer")
        sc.seed = data["seed"]
    if "baseline" in data:
        if not isinstance(data["baseline"], bool):
            raise ScenarioError(f"{where}.baseline: expected true or false")
        sc.baseline = data["baseline"]

    if "chain" in data:
        try:
            sc.chain = ChainModel.from_dict(data["chain"], where=f"{where}.chain")
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
    if "initial_q" in data:
        sc.q0 = _vec(data["initial_q"], sc.chain.n_q, f"{where}.initial_q")
    elif sc.chain.n_q != len(DEFAULT_Q0):
        raise ScenarioError(f"{where}.initial_q: required for a custom chain")

    fx = _mapping(data.get("fixture"), f"{where}.fixture", {"arm", "base"})
    for prof in ("arm", "base"):
        overrides = _mapping(fx.get(prof), f"{where}.fixture.{prof}", set(FIXTURE_KEYS))
        try:
            sc.profiles[prof] = apply_fixture_overrides(
                replace(sc.profiles[prof], T_c=sc.T_c), overrides, f"{where}.fixture.{prof}")
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None

    ik = _mapping(data.get("ik"), f"{where}.ik", _IK)
    kw = {}
    if "W_x" in ik:
        kw["W_x"] = _positive_weights(ik["W_x"], 6, f"{where}.ik.W_x")
    for key in ("W_q_arm", "W_q_base"):
        if key in ik:
            kw[key] = _positive_weights(ik[key], sc.chain.n_q, f"{where}.ik.{key}")
    if sc.chain.n_q != 9:
        kw.setdefault("W_q_arm", np.array([1e4] * 3 + [1.0] * sc.chain.n_arm))
        kw.setdefault("W_q_base", np.ones(sc.chain.n_q))
    K_x = IkWeights().K_x.copy()
    if "K_x_translational" in ik:
        K_x[:3] = _num(ik["K_x_translational"], f"{where}.ik.K_x_translational")
    if "K_x_rotational" in ik:
        K_x[3:] = _num(ik["K_x_rotational"], f"{where}.ik.K_x_rotational")
    sc.ik = IkWeights(K_x=K_x, **kw)
    if "a_th" in ik:
        sc.a_th = _num(ik["a_th"], f"{where}.ik.a_th")

    rep = _mapping(data.get("repulsion"), f"{where}.repulsion", _REP)
    rkw = {}
    for key, attr in (("r_c_m", "r_c"), ("r_s_m", "r_s"), ("d_0_m", "d_0"), ("a_k_m_per_s", "a_k"),
                      ("human_offset_m", "human_offset"), ("L_m", "L")):
        if key in rep:
            rkw[attr] = _num(rep[key], f"{where}.repulsion.{key}")
    if "human_normal" in rep:
        rkw["human_normal"] = tuple(_vec(rep["human_normal"], 2, f"{where}.repulsion.human_normal"))
    try:
        sc.repulsion = RepulsionConfig(**rkw)
    except ValueError as exc:
        raise ScenarioError(f"{where}.repulsion: {exc}") from None
    sc.capsule_L = sc.repulsion.L

    hu = _mapping(data.get("human"), f"{where}.human", _HUMAN)
    spec = HumanSpec()
    if "side" in hu:
        if hu["side"] not in ("right", "left"):
            raise ScenarioError(f"{where}.human.side: expected 'right' or 'left'")
        spec.side = hu["side"]
    if "heading_deg" in hu:
        spec.heading = np.deg2rad(_num(hu["heading_deg"], f"{where}.human.heading_deg"))
    if "pelvis_m" in hu:
        spec.pelvis = _vec(hu["pelvis_m"], 3, f"{where}.human.pelvis_m")
    if "leg_offset_m" in hu:
        spec.leg_offset = _num(hu["leg_offset_m"], f"{where}.human.leg_offset_m")
    if "leg_radius_m" in hu:
        spec.leg_radius = _num(hu["leg_radius_m"], f"{where}.human.leg_radius_m")
        if spec.leg_radius <= 0:
            raise ScenarioError(f"{where}.human.leg_radius_m: must be positive")
    if "leg_points" in hu:
        if isinstance(hu["leg_points"], bool) or not isinstance(hu["leg_points"], int) or hu["leg_points"] < 1:
            raise ScenarioError(f"{where}.human.leg_points: expected a positive integer")
        spec.leg_points = hu["leg_points"]
    gkw = {}
    for f_ in fields(BodyGeometry):
        key = f"{f_.name}_m"
        if key in hu:
            gkw[f_.name] = _num(hu[key], f"{where}.human.{key}")
    try:
        spec.geom = BodyGeometry(**gkw)
    except ValueError as exc:
        raise ScenarioError(f"{where}.human: {exc}") from None
    sc.human = spec

    fm = _mapping(data.get("force_model"), f"{where}.force_model", _FORCE)
    fkw = {}
    for key, attr in (("K_h_N_per_m", "K_h"), ("D_h_Ns_per_m", "D_h"), ("saturation_N", "saturation")):
        if key in fm:
            fkw[attr] = _num(fm[key], f"{where}.force_model.{key}")
    try:
        sc.force_model = HumanForceModel(**fkw)
    except ValueError as exc:
        raise ScenarioError(f"{where}.force_model: {exc}") from None
    if "noise_std_N" in fm:
        sc.force_noise = _num(fm["noise_std_N"], f"{where}.force_model.noise_std_N")
        if sc.force_noise < 0:
            raise ScenarioError(f"{where}.force_model.noise_std_N: must be non-negative")

    th = _mapping(data.get("thresholds_deg"), f"{where}.thresholds_deg",
                  {f_.name for f_ in fields(ErgonomicThresholds)})
    try:
        sc.thresholds = ErgonomicThresholds(
            **{k: _num(v, f"{where}.thresholds_deg.{k}") for k, v in th.items()})
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{where}.thresholds_deg: {exc}") from None

    _load_scripts(sc, _mapping(data.get("scripts"), f"{where}.scripts", _SCRIPTS), f"{where}.scripts")
    return sc


def _load_scripts(sc, scripts, where):
    rows = _rows(scripts.get("hand_reference"), f"{where}.hand_reference", {"t_s", "offset_m"})
    if rows:
        t = _times(rows, f"{where}.hand_reference")
        vals = [_vec(r.get("offset_m"), 3, f"{where}.hand_reference[{i}].offset_m") for i, r in enumerate(rows)]
        sc.hand_reference = Waypoints(t, np.array(vals))

    rows = _rows(scripts.get("trunk_bend"), f"{where}.trunk_bend", {"t_s", "bend_deg"})
    if rows:
        t = _times(rows, f"{where}.trunk_bend")
        vals = [np.deg2rad(_num(r.get("bend_deg"), f"{where}.trunk_bend[{i}].bend_deg")) for i, r in enumerate(rows)]
        sc.trunk_bend = Waypoints(t, np.array(vals))

    rows = _rows(scripts.get("pelvis"), f"{where}.pelvis", {"t_s", "offset_m"})
    if rows:
        t = _times(rows, f"{where}.pelvis")
        vals = [_vec(r.get("offset_m"), 3, f"{where}.pelvis[{i}].offset_m") for i, r in enumerate(rows)]
        sc.pelvis_offset = Waypoints(t, np.array(vals))

    rows = _rows(scripts.get("mode"), f"{where}.mode", {"t_s", "mode"})
    t = _times(rows, f"{where}.mode")
    for i, r in enumerate(rows):
        if r.get("mode") not in ("arm", "base"):
            raise ScenarioError(f"{where}.mode[{i}].mode: expected 'arm' or 'base'")
    sc.mode_requests = [(float(ti), r["mode"]) for ti, r in zip(t, rows)]

    rows = _rows(scripts.get("obstacles"), f"{where}.obstacles", {"center_m", "radius_m", "t_on_s", "t_off_s"})
    obs = []
    for i, r in enumerate(rows):
        path = f"{where}.obstacles[{i}]"
        center = _vec(r.get("center_m"), 2, f"{path}.center_m")
        radius = _num(r.get("radius_m"), f"{path}.radius_m")
        if radius <= 0:
            raise ScenarioError(f"{path}.radius_m: must be positive")
        t_on = _num(r.get("t_on_s", 0.0), f"{path}.t_on_s")
        t_off = _num(r["t_off_s"], f"{path}.t_off_s") if "t_off_s" in r else np.inf
        if t_off < t_on:
            raise ScenarioError(f"{path}.t_off_s: must not precede t_on_s")
        obs.append(Obstacle(center, radius, t_on, t_off))
    sc.obstacles = obs


def load_scenario(path):
    path = Path(path)
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: YAML parse error: {exc}") from None
    return scenario_from_dict(data, where=path.stem)


SCENARIO_DIR = Path(__file__).parent / "scenarios"


def builtin_scenario(name):
    """Load one of the scenarios shipped with the package, by file stem."""
    path = SCENARIO_DIR / f"{name}.yaml"
    if not path.exists():
        known = sorted(p.stem for p in SCENARIO_DIR.glob("*.yaml"))
        raise ScenarioError(f"unknown built-in scenario {name!r}; available: {known}")
    return load_scenario(path)
