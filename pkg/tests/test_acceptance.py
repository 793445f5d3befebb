"""Acceptance criteria 1-11, each reported as one PASS/FAIL line."""

import pytest

from ergofix import verify

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def battery():
    cfg = verify.BatteryConfig.load()
    return cfg, verify.check_passivity(cfg)


def test_01_passivity(battery, report):
    _, res = battery
    assert report("1", res).passed, res.detail


def test_02_boundedness(battery, report):
    cfg, pas = battery
    res = report("2", verify.check_boundedness(cfg, results=pas.data["results"]))
    assert res.passed, res.detail


def test_03_stiffness_calibration(report):
    res = report("3", verify.check_stiffness())
    assert res.passed, res.detail


def test_04_angle_oracle(report):
    res = report("4", verify.check_angle_oracle())
    assert res.passed, res.detail


def test_05_sub_factor_values(report):
    res = report("5", verify.check_sub_factors())
    assert res.passed, res.detail


def test_06_capsule_geometry(report):
    res = report("6", verify.check_capsule())
    assert res.passed, res.detail


def test_07_dls(report):
    res = report("7", verify.check_dls())
    assert res.passed, res.detail


def test_08_mode_gate(report):
    res = report("8", verify.check_mode_gate())
    assert res.passed, res.detail


def test_09_elbow_overextension(report):
    res = report("9", verify.check_elbow())
    assert res.passed, res.detail


def test_10_repulsion(report):
    res = report("10", verify.check_repulsion())
    assert res.passed, res.detail


def test_11_determinism(report):
    res = report("11", verify.check_determinism())
    assert res.passed, res.detail
