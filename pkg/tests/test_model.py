import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reachtamp.errors import InvalidResolution, ModelMismatch
from reachtamp.geometry import wrap_angle
from reachtamp.model import (
    Configuration,
    config_distance,
    fk_batch,
    forward_kinematics,
    interpolate,
    joint_limit_violation,
    load_robot_model,
    max_vertical_reach,
)

MODEL = load_robot_model()


def zero_config():
    return Configuration.from_parts((0.0, 0.0, 0.0), np.zeros(MODEL.num_arm_joints))


def test_zero_config_ee_matches_hand_composed_chain():
    # Oracle: all offsets are pure translations, so the zero-pose ee position
    # is just their componentwise sum.
    expected = np.zeros(3)
    for joint in MODEL.joints:
        expected += joint.offset[:3, 3]
    expected += MODEL.ee_offset[:3, 3]
    ee, frames = forward_kinematics(MODEL, zero_config())
    assert np.allclose(ee, expected, atol=1e-12)
    assert len(frames) == MODEL.num_arm_joints + 2


def test_base_translation_equivariance():
    q = Configuration.from_parts((0.0, 0.0, 0.0), MODEL.home_arm)
    ee0, _ = forward_kinematics(MODEL, q)
    q_shift = Configuration.from_parts((1.0, 2.0, 0.0), MODEL.home_arm)
    ee1, _ = forward_kinematics(MODEL, q_shift)
    assert np.allclose(ee1, ee0 + np.array([1.0, 2.0, 0.0]), atol=1e-12)


def test_base_rotation_pi_reflects_zero_config_offset():
    ee0, _ = forward_kinematics(MODEL, zero_config())
    q = Configuration.from_parts((0.0, 0.0, math.pi), np.zeros(MODEL.num_arm_joints))
    ee1, _ = forward_kinematics(MODEL, q)
    # planar rotation by pi about the base point negates the xy offset
    assert np.allclose(ee1[:2], -ee0[:2], atol=1e-12)
    assert ee1[2] == pytest.approx(ee0[2], abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-2.0, 2.0), min_size=8, max_size=8),
    st.floats(-3.0, 3.0),
    st.floats(-3.0, 3.0),
)
def test_planar_equivariance_property(vals, tx, ty):
    q = Configuration(vals)
    ee0, _ = forward_kinematics(MODEL, q)
    shifted = np.array(vals)
    shifted[0] += tx
    shifted[1] += ty
    ee1, _ = forward_kinematics(MODEL, Configuration(shifted))
    assert np.allclose(ee1, ee0 + np.array([tx, ty, 0.0]), atol=1e-12)


def test_dimension_mismatch_raises():
    with pytest.raises(ModelMismatch):
        forward_kinematics(MODEL, Configuration([0.0, 0.0, 0.0, 1.0]))


def test_fk_batch_agrees_with_single():
    rng = np.random.default_rng(0)
    Q = rng.uniform(-1.0, 1.0, size=(20, MODEL.dim))
    ee_b, _, _ = fk_batch(MODEL, Q)
    for i in range(Q.shape[0]):
        ee, _ = forward_kinematics(MODEL, Configuration(Q[i]))
        assert np.allclose(ee_b[i], ee, atol=1e-12)


def test_joint_limits_midrange_and_excess():
    mid = (MODEL.arm_lower + MODEL.arm_upper) / 2.0
    q = Configuration.from_parts((0.3, -0.4, 1.0), mid)
    assert joint_limit_violation(MODEL, q) == 0.0
    over = mid.copy()
    over[1] = MODEL.arm_upper[1] + 0.2
    q_over = Configuration.from_parts((0.0, 0.0, 0.0), over)
    assert joint_limit_violation(MODEL, q_over) == pytest.approx(0.2, abs=1e-12)


def test_base_pose_never_contributes_to_limits():
    # the base is holonomic and unconstrained
    mid = (MODEL.arm_lower + MODEL.arm_upper) / 2.0
    q = Configuration.from_parts((55.0, -90.0, 3.0), mid)
    assert joint_limit_violation(MODEL, q) == 0.0


def test_interpolate_degenerate_segment():
    q = MODEL.home_configuration()
    samples = interpolate(q, q, 4)
    assert len(samples) == 5
    for s in samples:
        assert s.allclose(q)


def test_interpolate_linear_in_x():
    q1 = Configuration.from_parts((0.0, 0.0, 0.0), MODEL.home_arm)
    q2 = Configuration.from_parts((1.0, 0.0, 0.0), MODEL.home_arm)
    xs = [s.base_x for s in interpolate(q1, q2, 4)]
    assert xs == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])


def test_interpolate_yaw_shortest_arc():
    # Oracle: shortest arc from 3.0 to -3.0 goes through pi, not 0.
    q1 = Configuration.from_parts((0.0, 0.0, 3.0), MODEL.home_arm)
    q2 = Configuration.from_parts((0.0, 0.0, -3.0), MODEL.home_arm)
    mid = interpolate(q1, q2, 2)[1]
    expected = wrap_angle(3.0 + 0.5 * wrap_angle(-3.0 - 3.0))
    assert mid.base_yaw == pytest.approx(expected, abs=1e-12)
    assert abs(mid.base_yaw) == pytest.approx(math.pi, abs=1e-9)


def test_interpolate_zero_steps_rejected():
    q = MODEL.home_configuration()
    with pytest.raises(InvalidResolution):
        interpolate(q, q, 0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3.0, 3.0), min_size=8, max_size=8), st.lists(st.floats(-3.0, 3.0), min_size=8, max_size=8))
def test_interpolate_even_spacing(v1, v2):
    q1, q2 = Configuration(v1), Configuration(v2)
    samples = interpolate(q1, q2, 5)
    assert samples[0].allclose(q1, atol=1e-9)
    assert samples[-1].allclose(q2, atol=1e-9)
    gaps = [config_distance(samples[i], samples[i + 1]) for i in range(5)]
    assert max(gaps) - min(gaps) < 1e-9


def test_yaw_wraps_on_construction():
    q = Configuration.from_parts((0.0, 0.0, 3.0 * math.pi), np.zeros(5))
    assert -math.pi < q.base_yaw <= math.pi
    assert q.base_yaw == pytest.approx(math.pi, abs=1e-12)


def test_max_vertical_reach_matches_hand_sum():
    # torso z offsets + full lift + pan/shoulder offsets, then the three
    # distal segments fully extended upward
    expected = 0.35 + 0.35 + 0.10 + 0.05 + (0.30 + 0.25 + 0.15)
    assert max_vertical_reach(MODEL) == pytest.approx(expected, abs=1e-12)
