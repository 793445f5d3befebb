import numpy as np
import pytest

from ergofix.params import FixtureParams
from ergofix.scenario import SCENARIO_DIR, ScenarioError, builtin_scenario, load_scenario, scenario_from_dict


def test_minimal_file_uses_defaults(tmp_path):
    path = tmp_path / "min.yaml"
    path.write_text("duration_s: 2.0\n")
    sc = load_scenario(path)
    assert sc.duration == 2.0 and sc.n_ticks == 2000
    ref = FixtureParams()
    arm = sc.profiles["arm"]
    for name in ("M_d", "D_c", "K_d"):
        np.testing.assert_array_equal(getattr(arm, name), getattr(ref, name))
    assert (arm.k_r, arm.m, arm.a_p, arm.c_p) == (ref.k_r, ref.m, ref.a_p, ref.c_p)
    assert np.all(sc.profiles["base"].K_d == 0)
    assert sc.a_th == 0.5


@pytest.mark.parametrize("doc, where", [
    ({}, "scenario.duration_s"),
    ({"duration_s": "abc"}, "scenario.duration_s"),
    ({"duration_s": 1, "bogus": 1}, "scenario.bogus"),
    ({"duration_s": 1, "fixture": {"arm": {"k_p_N_per_m": "x"}}}, "scenario.fixture.arm.k_p_N_per_m"),
    ({"duration_s": 1, "scripts": {"trunk_bend": [{"t_s": 1, "bend_deg": 0}, {"t_s": 0.5, "bend_deg": 3}]}},
     "scenario.scripts.trunk_bend"),
    ({"duration_s": 1, "scripts": {"mode": [{"t_s": 0.1, "mode": "fly"}]}}, "scenario.scripts.mode[0].mode"),
    ({"duration_s": 1, "seed": 1.5}, "scenario.seed"),
])
def test_validation_errors_name_the_key(doc, where):
    with pytest.raises(ScenarioError) as exc:
        scenario_from_dict(doc)
    assert where in str(exc.value)


def test_battery_file_is_not_a_scenario():
    with pytest.raises(ScenarioError, match="verify"):
        load_scenario(SCENARIO_DIR / "passivity_battery.yaml")


def test_unknown_builtin():
    with pytest.raises(ScenarioError, match="available"):
        builtin_scenario("nope")


@pytest.mark.parametrize("name", ["elbow_overextension", "leg_approach", "loco_manipulation", "gluing_path"])
def test_builtin_scenarios_load(name):
    sc = builtin_scenario(name)
    assert sc.duration > 0


def test_waypoints_interpolate_and_hold():
    sc = scenario_from_dict({"duration_s": 1, "scripts": {"trunk_bend": [
        {"t_s": 0.2, "bend_deg": 0.0}, {"t_s": 0.4, "bend_deg": 10.0}]}})
    wp = sc.trunk_bend
    assert wp(0.0) == 0.0
    assert wp(0.3) == pytest.approx(np.deg2rad(5.0))
    assert wp(5.0) == pytest.approx(np.deg2rad(10.0))
