import numpy as np
import pytest

from mostyle import quat
from mostyle.motion import (
    PositionalMotion3D,
    RotationalMotion,
    local_joint_velocity,
    root_normalize,
    root_restore,
)
from tests.conftest import random_unit_quats


def test_static_motion_zero_velocity():
    pos = np.tile(np.arange(12.0).reshape(1, 4, 3), (5, 1, 1))
    speeds = local_joint_velocity(PositionalMotion3D(positions=pos, fps=30.0))
    assert np.allclose(speeds, 0.0)


def test_constant_speed_joint():
    t = 6
    pos = np.zeros((t, 2, 3))
    pos[:, 1, 0] = np.arange(t)  # 1 unit/frame relative to the root
    speeds = local_joint_velocity(PositionalMotion3D(positions=pos, fps=30.0))
    assert np.allclose(speeds[:, 1], 30.0)
    assert np.allclose(speeds[:, 0], 0.0)


def test_velocity_requires_two_frames():
    with pytest.raises(ValueError):
        local_joint_velocity(PositionalMotion3D(positions=np.zeros((1, 2, 3)), fps=30.0))


def test_sinusoid_matches_analytic_derivative():
    fps = 120.0
    t = np.arange(64) / fps
    pos = np.zeros((64, 2, 3))
    pos[:, 1, 1] = np.sin(2 * np.pi * t)
    speeds = local_joint_velocity(PositionalMotion3D(positions=pos, fps=fps))
    analytic = np.abs(2 * np.pi * np.cos(2 * np.pi * t))
    # central differences: O(1/fps^2) at interior samples
    assert np.abs(speeds[1:-1, 1] - analytic[1:-1]).max() < (2 * np.pi) ** 3 / (6 * fps ** 2) * 1.1


def test_velocity_is_root_relative():
    t = 8
    pos = np.zeros((t, 3, 3))
    drift = np.linspace(0, 5, t)
    pos[:, :, 2] = drift[:, None]  # whole body translates together
    speeds = local_joint_velocity(PositionalMotion3D(positions=pos, fps=30.0))
    assert np.allclose(speeds, 0.0)


def _random_motion(rng, t=10, j=4):
    rot = random_unit_quats(rng, (t, j))
    rot = np.stack([quat.hemisphere_align(rot[:, jj]) for jj in range(j)], axis=1)
    root = rng.standard_normal((t, 3))
    return RotationalMotion(rotations=rot, root_translation=root, fps=30.0)


def test_root_normalize_already_normalized(rng):
    rot = np.zeros((4, 3, 4))
    rot[..., 0] = 1.0
    motion = RotationalMotion(rotations=rot, root_translation=np.zeros((4, 3)), fps=30.0)
    normalized, xform = root_normalize(motion)
    assert np.allclose(normalized.rotations, motion.rotations, atol=1e-12)
    assert np.allclose(normalized.root_translation, 0.0)
    assert xform.yaw == 0.0


def test_root_normalize_stores_translation():
    rot = np.zeros((4, 3, 4))
    rot[..., 0] = 1.0
    shifted = RotationalMotion(
        rotations=rot, root_translation=np.tile([5.0, 0, 0], (4, 1)), fps=30.0
    )
    normalized, xform = root_normalize(shifted)
    assert np.allclose(normalized.root_translation, 0.0)
    assert np.allclose(xform.translation, [[5, 0, 0]] * 4)


def test_root_normalize_removes_heading():
    yaw = 1.1
    q_yaw = quat.from_axis_angle(np.array([0.0, 1.0, 0.0]), yaw)
    rot = np.zeros((6, 2, 4))
    rot[..., 0] = 1.0
    rot[:, 0] = q_yaw
    motion = RotationalMotion(rotations=rot, root_translation=np.zeros((6, 3)), fps=30.0)
    normalized, xform = root_normalize(motion)
    assert abs(xform.yaw - yaw) < 1e-9
    assert np.allclose(normalized.rotations[:, 0], [1, 0, 0, 0], atol=1e-9)


def test_root_normalize_keeps_pitch():
    pitch = quat.from_axis_angle(np.array([1.0, 0.0, 0.0]), 0.4)
    rot = np.zeros((3, 2, 4))
    rot[..., 0] = 1.0
    rot[:, 0] = pitch
    motion = RotationalMotion(rotations=rot, root_translation=np.zeros((3, 3)), fps=30.0)
    normalized, _ = root_normalize(motion)
    # pure pitch has forward in the YZ plane: heading 0, rotation preserved
    assert np.allclose(np.abs(np.sum(normalized.rotations[:, 0] * pitch, axis=-1)), 1.0, atol=1e-9)


def test_root_normalize_round_trip(rng):
    for _ in range(5):
        motion = _random_motion(rng)
        normalized, xform = root_normalize(motion)
        restored = root_restore(normalized, xform)
        assert np.abs(restored.root_translation - motion.root_translation).max() < 1e-6
        assert np.allclose(
            quat.to_matrix(restored.rotations), quat.to_matrix(motion.rotations), atol=1e-6
        )


def test_rotational_motion_validation():
    with pytest.raises(ValueError):
        RotationalMotion(rotations=np.zeros((2, 3, 3)), root_translation=np.zeros((2, 3)), fps=30)
    with pytest.raises(ValueError):
        RotationalMotion(rotations=np.zeros((2, 3, 4)), root_translation=np.zeros((3, 3)), fps=30)
