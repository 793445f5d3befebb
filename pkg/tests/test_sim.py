import numpy as np
import pytest

from ergofix.scenario import builtin_scenario, scenario_from_dict
from ergofix.sim import SimulationError, run_scenario
from ergofix.trace import compute_metrics


def test_null_scenario_rests():
    tr = run_scenario(scenario_from_dict({"duration_s": 0.5}))
    assert len(tr) == 500
    q = tr.block("q", 9)
    np.testing.assert_array_equal(q, np.repeat(q[:1], len(q), axis=0))
    assert np.all(tr.block("v", 6) == 0)
    assert np.all(tr["a_measured"] == tr["a_measured"][0])


def test_hand_wrist_coupling_and_baseline_score():
    sc = builtin_scenario("elbow_overextension")
    sc.duration = 1.0
    tr = run_scenario(sc, baseline=True)
    hand = np.column_stack([tr["hand_x"], tr["hand_y"], tr["hand_z"]])
    wrist = np.column_stack([tr["wrist_x"], tr["wrist_y"], tr["wrist_z"]])
    assert np.max(np.linalg.norm(hand - wrist, axis=1)) <= 1e-12
    assert np.all(tr["a"] == 1.0)
    assert compute_metrics(tr, 0.1).a_bar < 1.0


def test_seed_changes_noisy_run():
    sc = builtin_scenario("gluing_path")
    sc.duration = 0.3
    a = run_scenario(sc, seed=1)
    b = run_scenario(sc, seed=1)
    c = run_scenario(sc, seed=2)
    np.testing.assert_array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_divergence_returns_partial_trace(monkeypatch):
    sc = scenario_from_dict({"duration_s": 0.2, "scripts": {"hand_reference": [
        {"t_s": 0.0, "offset_m": [0, 0, 0]}, {"t_s": 0.2, "offset_m": [0.05, 0, 0]}]}})
    calls = {"n": 0}
    real = type(sc.force_model).force

    def flaky(self, *args):
        calls["n"] += 1
        return real(self, *args) if calls["n"] <= 50 else np.full(3, np.nan)

    monkeypatch.setattr(type(sc.force_model), "force", flaky)
    with pytest.raises(SimulationError) as exc:
        run_scenario(sc)
    assert len(exc.value.trace) == 50
