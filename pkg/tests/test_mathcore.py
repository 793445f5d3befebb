import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergofix.mathcore import (
    IDENTITY,
    angle_between,
    pose_deviation,
    quat_angle,
    quat_from_axis_angle,
    quat_integrate,
    quat_mul,
    quat_to_rotmat,
    rotmat_to_quat,
    smooth_step,
    unit_vector_rotate,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


@pytest.mark.parametrize("w, expected", [(0.0, 1.0), (3.0, 0.0), (1.5, 0.5), (1.25, 0.896484375)])
def test_smooth_step_values(w, expected):
    assert smooth_step(w, 1, 2) == pytest.approx(expected, abs=1e-15)


def test_smooth_step_rejects_empty_interval():
    with pytest.raises(ValueError):
        smooth_step(0.5, 2.0, 2.0)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_smooth_step_monotone(w1, w2):
    lo, hi = -1.0, 2.0
    a, b = sorted((w1, w2))
    assert smooth_step(a, lo, hi) >= smooth_step(b, lo, hi)


def test_smooth_step_flat_at_ends():
    for h in (1e-3, 1e-4):
        assert abs(smooth_step(1.0 + h, 1, 2) - 1.0) / h < 10 * h
        assert abs(smooth_step(2.0 - h, 1, 2)) / h < 10 * h


def test_angle_between_cases():
    assert angle_between((1, 0, 0), (1, 0, 0)) == 0.0
    assert angle_between((1, 0, 0), (0, 1, 0)) == pytest.approx(math.pi / 2)
    assert angle_between((1, 0, 0), (0, 0, 0)) == 0.0
    assert angle_between((1, 0, 0), (-1, 0, 0)) == pytest.approx(math.pi)


@given(vec3, vec3)
def test_angle_between_range(a, b):
    th = angle_between(a, b)
    assert 0.0 <= th <= math.pi


def test_quat_integrate_zero_rate():
    np.testing.assert_array_equal(quat_integrate(IDENTITY, np.zeros(3), 0.002), IDENTITY)


def test_quat_integrate_quarter_turn():
    Q = IDENTITY.copy()
    for _ in range(1000):
        Q = quat_integrate(Q, np.array([0.0, 0.0, math.pi / 2]), 1e-3)
    ref = quat_from_axis_angle([0, 0, 1], math.pi / 2)
    assert quat_angle(quat_mul(Q, ref * [1, -1, -1, -1])) < 1e-9


def test_quat_integrate_stays_unit():
    rng = np.random.default_rng(1)
    Q = IDENTITY.copy()
    for _ in range(10):
        for w in rng.normal(0, 3, (100_000, 3)):
            Q = quat_integrate(Q, w, 1e-3)
    assert abs(np.linalg.norm(Q) - 1.0) < 1e-9


def test_unit_vector_rotate():
    np.testing.assert_array_equal(unit_vector_rotate(np.array([1.0, 0, 0]), np.zeros(3)), [1, 0, 0])
    out = unit_vector_rotate(np.array([1.0, 0, 0]), np.array([0, 0, math.pi / 2]))
    np.testing.assert_allclose(out, [0, 1, 0], atol=1e-12)


def test_unit_vector_rotate_rejects_non_unit():
    with pytest.raises(ValueError):
        unit_vector_rotate(np.array([1.1, 0, 0]), np.zeros(3))


@settings(max_examples=200)
@given(vec3, st.floats(-3.0, 3.0))
def test_rotmat_quat_roundtrip(axis, angle):
    if np.linalg.norm(axis) < 1e-6:
        return
    Q = quat_from_axis_angle(axis, angle)
    Q2 = rotmat_to_quat(quat_to_rotmat(Q))
    assert min(np.linalg.norm(Q - Q2), np.linalg.norm(Q + Q2)) < 1e-9


def test_pose_deviation_identical():
    dev = pose_deviation(np.ones(3), IDENTITY, np.ones(3), IDENTITY)
    assert np.all(dev.p_e == 0) and dev.eta_e == 1.0 and dev.Psi_e == 0.0


def test_pose_deviation_four_degrees():
    Q_g = quat_from_axis_angle([0, 0, 1], math.radians(4))
    dev = pose_deviation(np.zeros(3), Q_g, np.zeros(3), IDENTITY)
    np.testing.assert_allclose(dev.eps_e, [0, 0, math.sin(math.radians(2))], atol=1e-15)
    assert dev.eta_e == pytest.approx(math.cos(math.radians(2)), abs=1e-15)


@settings(max_examples=200)
@given(vec3, st.floats(-3.0, 3.0))
def test_rotation_leaves_eps_invariant(axis, angle):
    if np.linalg.norm(axis) < 1e-6:
        return
    Q_g = quat_from_axis_angle(axis, angle)
    dev = pose_deviation(np.zeros(3), Q_g, np.zeros(3), IDENTITY)
    np.testing.assert_allclose(dev.R_e.T @ dev.eps_e, dev.eps_e, atol=1e-12)
