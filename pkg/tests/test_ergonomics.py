import math
from dataclasses import replace

import numpy as np
import pytest

from ergofix.ergonomics import (
    JointAngles,
    compute_joint_angles,
    compute_planes,
    compute_score,
    read_keypoint_file,
    score_sequence,
    sub_factor_abduction,
    sub_factor_bending,
    sub_factor_elbow,
    write_keypoint_file,
)
from ergofix.human import (
    BodyGeometry,
    SyntheticHuman,
    elbow_angle_for_reach,
    posture_to_keypoints,
    synthesize_keypoints,
)
from ergofix.mathcore import quat_from_axis_angle, quat_to_rotmat

deg = math.radians


def test_upright_planes():
    kp = posture_to_keypoints(0, 0, 0, deg(100), 0)
    pl = compute_planes(kp)
    assert abs(abs(pl.f[0]) - 1) < 1e-12
    assert abs(abs(pl.s[1]) - 1) < 1e-12
    assert not pl.degenerate


def test_collinear_torso_keeps_previous_planes():
    kp = posture_to_keypoints(0, 0, 0, deg(100), 0)
    prev = compute_planes(kp)
    bad = replace(kp, Th=kp.Ne + 2.0 * (kp.S_R - kp.Ne))
    out = compute_planes(bad, prev)
    assert out.degenerate
    np.testing.assert_array_equal(out.f, prev.f)
    with pytest.raises(ValueError):
        compute_planes(bad)


def test_straight_hanging_arm():
    kp = posture_to_keypoints(0, 0, 0, deg(90), 0)
    d = kp.E_R - kp.S_R
    kp = replace(kp, W_R=kp.E_R + 0.35 * d / np.linalg.norm(d))
    ang = compute_joint_angles(kp)
    assert abs(ang.theta_a) < 1e-9
    assert abs(ang.theta_f) < 1e-9
    assert abs(ang.theta_e - math.pi) < 1e-7
    assert abs(ang.theta_b) < 1e-9


def test_right_angle_elbow():
    ang = compute_joint_angles(posture_to_keypoints(deg(10), deg(20), 0, deg(90), 0))
    assert ang.theta_e == pytest.approx(math.pi / 2, abs=1e-12)


@pytest.mark.parametrize("side", ["right", "left"])
def test_forward_oracle_random_postures(side):
    rng = np.random.default_rng(3)
    for _ in range(200):
        want = np.array([
            rng.uniform(-deg(80), deg(80)), rng.uniform(-deg(80), deg(80)), rng.uniform(-deg(85), deg(85)),
            rng.uniform(deg(10), deg(170)), rng.uniform(-deg(60), deg(60)),
        ])
        R = quat_to_rotmat(quat_from_axis_angle(rng.normal(size=3), rng.uniform(-math.pi, math.pi)))
        kp = posture_to_keypoints(*want, side=side, R=R, t=rng.normal(size=3))
        got = compute_joint_angles(kp).as_array()
        np.testing.assert_allclose(got, want, atol=1e-9)


def test_degenerate_elbow_keeps_previous_angle():
    kp = posture_to_keypoints(0, 0, 0, deg(100), 0)
    prev = JointAngles(theta_e=deg(123))
    ang = compute_joint_angles(replace(kp, W_R=kp.E_R.copy()), prev)
    assert ang.degenerate and ang.theta_e == deg(123)


@pytest.mark.parametrize("fn, x, expected", [
    (sub_factor_elbow, 100, 1.0),
    (sub_factor_elbow, 70, 0.0),
    (sub_factor_bending, 0, 1.0),
    (sub_factor_bending, 15, 0.505),
    (sub_factor_abduction, 0, 1.0),
    (sub_factor_abduction, 25, 0.5),
])
def test_sub_factor_values(fn, x, expected):
    assert abs(fn(deg(x)) - expected) <= 1e-12


def test_score_examples():
    neutral = dict(theta_a=0.0, theta_f=0.0, theta_r=0.0, theta_e=deg(100), theta_b=0.0)
    assert compute_score(JointAngles(**neutral)).a == 1.0
    assert compute_score(JointAngles(**{**neutral, "theta_e": deg(70)})).a == 0.0
    assert compute_score(JointAngles(**{**neutral, "theta_a": deg(25)})).a == pytest.approx(0.5, abs=1e-12)


def test_score_rigid_motion_invariant():
    rng = np.random.default_rng(5)
    kp = posture_to_keypoints(deg(15), deg(30), deg(10), deg(95), deg(12))
    R = quat_to_rotmat(quat_from_axis_angle([0.3, -1, 2], 1.1))
    a0 = compute_score(compute_joint_angles(kp)).a
    a1 = compute_score(compute_joint_angles(kp.transformed(R, rng.normal(size=3)))).a
    assert a1 == pytest.approx(a0, abs=1e-12)


def test_keypoint_file_roundtrip(tmp_path):
    frames = [posture_to_keypoints(deg(5 * i), 0, 0, deg(100), 0) for i in range(4)]
    path = tmp_path / "kp.csv"
    write_keypoint_file(path, [0.0, 0.1, 0.2, 0.3], frames)
    times, back = read_keypoint_file(path)
    assert times == [0.0, 0.1, 0.2, 0.3]
    for a, b in zip(frames, back):
        np.testing.assert_array_equal(a.as_row(), b.as_row())
    scores = score_sequence(back)
    assert len(scores) == 4


def test_keypoint_file_bad_header(tmp_path):
    path = tmp_path / "kp.csv"
    path.write_text("t,x\n0,1\n")
    with pytest.raises(ValueError):
        read_keypoint_file(path)


def test_synthetic_full_reach_is_straight():
    g = BodyGeometry()
    h = SyntheticHuman(geom=g)
    S = h.shoulder()
    kp, clamped = synthesize_keypoints(h, S + np.array([g.upper_arm + g.forearm, 0, 0]))
    assert not clamped
    assert compute_joint_angles(kp).theta_e == pytest.approx(math.pi, abs=1e-6)


def test_synthetic_right_angle_reach():
    g = BodyGeometry()
    h = SyntheticHuman(geom=g)
    D = math.hypot(g.upper_arm, g.forearm)
    assert elbow_angle_for_reach(D, g.upper_arm, g.forearm) == pytest.approx(math.pi / 2)
    kp, _ = synthesize_keypoints(h, h.shoulder() + D * np.array([0.6, 0.0, -0.8]))
    assert compute_joint_angles(kp).theta_e == pytest.approx(math.pi / 2, abs=1e-9)


def test_synthetic_unreachable_is_clamped_and_wrist_is_hand():
    h = SyntheticHuman()
    hand = h.shoulder() + np.array([2.0, 0.0, 0.0])
    kp, clamped = synthesize_keypoints(h, hand)
    assert clamped
    np.testing.assert_array_equal(kp.wrist, hand)
    assert compute_joint_angles(kp).theta_e == pytest.approx(math.pi, abs=1e-6)


@pytest.mark.parametrize("name, lo, hi", [
    ("theta_a", -90, 90), ("theta_f", -90, 180), ("theta_r", -90, 90), ("theta_e", 0, 180), ("theta_b", -90, 90),
])
def test_score_continuous_in_each_angle(name, lo, hi):
    base = dict(theta_a=0.0, theta_f=0.0, theta_r=0.0, theta_e=deg(100), theta_b=0.0)
    grid = np.arange(lo, hi, 0.01)
    a = np.array([compute_score(JointAngles(**{**base, name: deg(x)})).a for x in grid])
    assert np.max(np.abs(np.diff(a))) <= 0.01
