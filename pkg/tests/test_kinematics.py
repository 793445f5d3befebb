import math

import numpy as np
import pytest

from ergofix.kinematics import (
    ARM_PRIORITY,
    BASE_PRIORITY,
    UR16E_DH,
    ChainModel,
    ModeState,
    body_jacobian,
    dls_solve,
    forward_kinematics,
    integrate_joints,
    jacobian,
    kinematics,
    mode_update,
    null_space_command,
    pose_error,
)
from ergofix.mathcore import IDENTITY, quat_angle, quat_conj, quat_from_axis_angle, quat_mul
from ergofix.params import IkWeights, arm_profile, base_profile
from ergofix.scenario import DEFAULT_Q0

MODEL = ChainModel.default()
PROFILES = {"arm": arm_profile(), "base": base_profile()}


def test_home_pose_by_hand():
    (d1, _, _), (_, a2, _), (_, a3, _), (d4, _, _), (d5, _, _), (d6, _, _) = UR16E_DH
    p, _ = forward_kinematics(MODEL, np.zeros(9))
    # mount offset plus the stretched-out arm: x along a2 + a3, y back by d4 + d6, z up by d1 - d5
    np.testing.assert_allclose(p, [0.2 + a2 + a3, -(d4 + d6), 0.45 + d1 - d5], atol=1e-12)


def test_base_pose_moves_the_hand_rigidly():
    q = np.array(DEFAULT_Q0, dtype=float)
    p0, Q0 = forward_kinematics(MODEL, q)
    q2 = q.copy()
    q2[:3] = [1.0, -2.0, 0.7]
    p1, Q1 = forward_kinematics(MODEL, q2)
    c, s = math.cos(0.7), math.sin(0.7)
    np.testing.assert_allclose(p1, [1 + c * p0[0] - s * p0[1], -2 + s * p0[0] + c * p0[1], p0[2]], atol=1e-12)
    rel = quat_mul(Q1, quat_conj(Q0))
    assert abs(quat_angle(rel) - 0.7) < 1e-12


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(0)
    for _ in range(10):
        q = rng.uniform(-2, 2, 9)
        J = jacobian(MODEL, q)
        p0, Q0 = forward_kinematics(MODEL, q)
        h = 1e-6
        for i in range(9):
            dq = np.zeros(9)
            dq[i] = h
            p1, Q1 = forward_kinematics(MODEL, q + dq)
            p_1, Q_1 = forward_kinematics(MODEL, q - dq)
            np.testing.assert_allclose((p1 - p_1) / (2 * h), J[:3, i], atol=1e-7)
            w = quat_mul(Q1, quat_conj(Q_1))
            np.testing.assert_allclose(2 * w[1:] * np.sign(w[0]) / (2 * h), J[3:, i], atol=1e-7)


def test_kinematics_bundle_agrees():
    q = np.array(DEFAULT_Q0, dtype=float)
    p, Q, J = kinematics(MODEL, q)
    p2, Q2 = forward_kinematics(MODEL, q)
    np.testing.assert_array_equal(p, p2)
    np.testing.assert_array_equal(Q, Q2)
    np.testing.assert_allclose(J, jacobian(MODEL, q), atol=1e-14)


def test_body_jacobian_base_columns():
    q = np.array(DEFAULT_Q0, dtype=float)
    q[2] = 0.9
    Jb = body_jacobian(MODEL, q)
    # forward base velocity translates the hand along the heading
    np.testing.assert_allclose(Jb[:3, 0], [math.cos(0.9), math.sin(0.9), 0], atol=1e-12)
    np.testing.assert_allclose(Jb[3:, 2], [0, 0, 1], atol=1e-12)


def test_integrate_joints_clamps():
    m = ChainModel.from_dict({"dh": [list(r) for r in UR16E_DH], "limits_rad": [[-1, 1]] * 6})
    q, clamped = integrate_joints(m, np.zeros(9), np.array([0, 0, 0, 5, 0, 0, 0, 0, 0.0]), 1.0)
    assert clamped and q[3] == 1.0


def test_pose_error_sign():
    Q_ref = quat_from_axis_angle([0, 0, 1], 0.1)
    x_e = pose_error(np.ones(3), IDENTITY, np.zeros(3), Q_ref)
    np.testing.assert_allclose(x_e[:3], 1.0)
    assert x_e[5] == pytest.approx(-math.sin(0.05))


def _random_instance(rng):
    J = rng.normal(size=(6, 9))
    return J, rng.uniform(0.5, 2, 6), rng.uniform(0.01, 1, 9), rng.normal(size=6), rng.normal(size=6)


def test_dls_zero_command():
    J, W_x, W_q, _, _ = _random_instance(np.random.default_rng(1))
    qd, _ = dls_solve(J, W_x, W_q, np.zeros(6), np.zeros(6), np.ones(6))
    np.testing.assert_array_equal(qd, 0)


def test_dls_optimality():
    rng = np.random.default_rng(2)
    for _ in range(100):
        J, W_x, W_q, v, x_e = _random_instance(rng)
        K = rng.uniform(0, 5, 6)
        qd, _ = dls_solve(J, W_x, W_q, v, x_e, K)
        vp = v - K * x_e
        grad = J.T @ (W_x * (J @ qd - vp)) + W_q * qd
        assert np.linalg.norm(grad) <= 1e-8 * max(1.0, np.linalg.norm(J.T @ (W_x * vp)))


def test_dls_small_damping_limit():
    rng = np.random.default_rng(3)
    J, W_x, _, v, x_e = _random_instance(rng)
    qd, _ = dls_solve(J, W_x, np.full(9, 1e-8), v, x_e, np.ones(6))
    assert np.linalg.norm(J @ qd - (v - x_e)) <= 1e-6


def test_dls_rejects_bad_input():
    J, W_x, W_q, v, x_e = _random_instance(np.random.default_rng(4))
    v[0] = np.nan
    with pytest.raises(ValueError):
        dls_solve(J, W_x, W_q, v, x_e, np.ones(6))


def test_null_space_command():
    rng = np.random.default_rng(5)
    J, W_x, _, v, x_e = _random_instance(rng)
    qd, Js = dls_solve(J, W_x, np.full(9, 1e-9), v, x_e, np.ones(6))
    np.testing.assert_array_equal(null_space_command(qd, Js, J, np.zeros(9)), qd)
    v_r = rng.normal(size=9)
    qc = null_space_command(qd, Js, J, v_r)
    assert np.linalg.norm(J @ (qc - qd)) <= 1e-6 * np.linalg.norm(v_r)


def test_arm_priority_suppresses_base():
    w = IkWeights()
    q = np.array(DEFAULT_Q0, dtype=float)
    Jb = body_jacobian(MODEL, q)
    v = np.array([0.1, 0.05, 0.0, 0, 0, 0])
    arm, _ = dls_solve(Jb, w.W_x, w.W_q_arm, v, np.zeros(6), np.zeros(6))
    unit, _ = dls_solve(Jb, w.W_x, np.ones(9), v, np.zeros(6), np.zeros(6))
    assert np.linalg.norm(unit[:3]) >= 100 * np.linalg.norm(arm[:3])


def test_mode_gate():
    w = IkWeights()
    st = ModeState()
    st, params, W_q, sw = mode_update(st, BASE_PRIORITY, 0.3, PROFILES, w)
    assert st.mode == ARM_PRIORITY and st.pending and not sw
    st, params, W_q, sw = mode_update(st, None, 0.49, PROFILES, w)
    assert st.mode == ARM_PRIORITY and st.pending
    st, params, W_q, sw = mode_update(st, None, 0.5, PROFILES, w)
    assert st.mode == BASE_PRIORITY and sw and not st.pending
    assert params is PROFILES["base"] and np.all(params.K_d == 0)
    np.testing.assert_array_equal(W_q, w.W_q_base)
    st, params, W_q, sw = mode_update(st, ARM_PRIORITY, 0.0, PROFILES, w)
    assert st.mode == ARM_PRIORITY and sw
    np.testing.assert_array_equal(W_q, w.W_q_arm)


def test_mode_gate_granted_immediately_and_baseline_bypass():
    w = IkWeights()
    st, _, _, sw = mode_update(ModeState(), BASE_PRIORITY, 0.7, PROFILES, w)
    assert st.mode == BASE_PRIORITY and sw
    st, _, _, sw = mode_update(ModeState(), BASE_PRIORITY, 0.0, PROFILES, w, baseline=True)
    assert st.mode == BASE_PRIORITY and sw


def test_chain_from_dict_errors_name_the_key():
    with pytest.raises(ValueError, match=r"chain\.dh\[1\]"):
        ChainModel.from_dict({"dh": [[0, 0, 0], [0, "x", 0]] + [[0, 0, 0]] * 4})
    with pytest.raises(ValueError, match=r"chain\.bogus"):
        ChainModel.from_dict({"dh": [], "bogus": 1})


def test_chain_load_joints_yaml(tmp_path):
    path = tmp_path / "arm.yaml"
    path.write_text(
        "mount: {xyz_m: [0.1, 0, 0.5]}\n"
        "joints:\n" + "".join("  - {xyz_m: [0, 0, 0.1], axis: [0, 1, 0]}\n" for _ in range(6))
    )
    m = ChainModel.load(path)
    p, _ = forward_kinematics(m, np.zeros(9))
    np.testing.assert_allclose(p, [0.1, 0, 0.5 + 6 * 0.1], atol=1e-12)
