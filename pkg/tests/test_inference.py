import numpy as np
import pytest

from mostyle import inference, nets, quat, toydata
from mostyle.inference import (
    TransferOptions,
    detect_foot_contacts,
    fix_foot_contacts,
    foot_skate_metric,
    time_warp,
    transfer,
    velocity_factor,
    warp_motion,
)
from mostyle.kinematics import forward_kinematics
from mostyle.motion import PositionalMotion3D, RotationalMotion, root_normalize
from tests.conftest import tiny_hyper


# ---------------------------------------------------------------------------
# velocity factor

def test_velocity_factor_static_zero():
    pos = np.tile(np.arange(6.0).reshape(1, 2, 3), (8, 1, 1))
    assert velocity_factor(PositionalMotion3D(positions=pos, fps=30.0)) == 0.0


def test_velocity_factor_constant_speed():
    t = 10
    pos = np.zeros((t, 3, 3))
    pos[:, 1, 0] = 2.0 * np.arange(t) / 30.0  # 2 units/s root-relative
    v = velocity_factor(PositionalMotion3D(positions=pos, fps=30.0))
    assert abs(v - 2.0) < 1e-12


def test_velocity_factor_matches_bruteforce_exactly(rng):
    from mostyle.motion import local_joint_velocity

    pos = rng.standard_normal((20, 5, 3))
    clip = PositionalMotion3D(positions=pos, fps=24.0)
    speeds = local_joint_velocity(clip)
    per_frame_max = []
    for t in range(20):
        best = speeds[t, 0]
        for j in range(5):
            best = max(best, speeds[t, j])
        per_frame_max.append(best)
    oracle = np.mean(np.asarray(per_frame_max))
    assert velocity_factor(clip) == oracle  # same arithmetic, no tolerance


def test_velocity_factor_needs_two_frames():
    with pytest.raises(ValueError):
        velocity_factor(PositionalMotion3D(positions=np.zeros((1, 2, 3)), fps=30.0))


# ---------------------------------------------------------------------------
# time warping

def test_time_warp_identity():
    track = np.cumsum(np.ones((12, 3)), axis=0)
    assert np.array_equal(time_warp(track, 1.0), track)


def test_time_warp_factor_two_linear():
    t = 16
    track = np.stack([np.linspace(0, 5, t), np.zeros(t), np.linspace(0, 3, t)], axis=1)
    warped = time_warp(track, 2.0)
    assert warped.shape == (8, 3)
    assert np.allclose(warped[0], track[0], atol=1e-12)
    assert np.allclose(warped[-1], track[-1], atol=1e-12)
    # same line traversed: all samples on the segment
    direction = track[-1] - track[0]
    for p in warped:
        alpha = np.dot(p - track[0], direction) / np.dot(direction, direction)
        assert np.linalg.norm(p - (track[0] + alpha * direction)) < 1e-9


def test_time_warp_round_trip_interior_error():
    rng = np.random.default_rng(0)
    t = np.linspace(0, 1, 64)
    track = np.stack(
        [np.sin(2 * np.pi * t), np.cos(3 * np.pi * t), t ** 2], axis=1
    ) + 0.05 * np.cumsum(rng.standard_normal((64, 3)), axis=0) / 64
    extent = track.max(axis=0) - track.min(axis=0)
    for factor in (1.37, 0.61, 2.0):
        back = time_warp(time_warp(track, factor), 1.0 / factor)
        n = min(len(back), len(track))
        interior = slice(2, n - 2)
        err = np.abs(back[: n][interior] - track[: n][interior]).max()
        assert err < 1e-3 * extent.max() * 3  # smooth-track round trip


def test_time_warp_invalid_factor():
    with pytest.raises(ValueError):
        time_warp(np.zeros((8, 3)), 0.0)


def test_warp_motion_slerps_rotations():
    t = 9
    angles = np.linspace(0.0, np.pi / 2, t)
    rot = np.stack([quat.from_axis_angle(np.array([0, 0, 1.0]), a) for a in angles])[:, None, :]
    motion = RotationalMotion(rotations=rot, root_translation=np.zeros((t, 3)), fps=30.0)
    warped = warp_motion(motion, 2.0)
    assert warped.num_frames == round(t / 2.0)
    # resampled rotations stay on the same geodesic
    for q in warped.rotations[:, 0]:
        axis = q[1:]
        assert np.abs(axis[:2]).max() < 1e-9


# ---------------------------------------------------------------------------
# foot contacts

def _stamp_clip(frames=40, fps=30.0):
    """Feet planted except for known lift intervals of the left foot."""
    skel = toydata.toy_skeleton()
    rot = np.zeros((frames, 8, 4))
    rot[..., 0] = 1.0
    truth = np.ones((frames, 2), dtype=bool)
    lift = np.zeros(frames)
    for start, end in ((10, 18), (28, 34)):
        window = np.hanning(end - start)
        lift[start:end] = 0.9 * window
        truth[start:end, 0] = False
    for f in range(frames):
        rot[f, toydata.LHIP] = quat.from_axis_angle(np.array([1.0, 0, 0]), lift[f])
        rot[f, toydata.LKNEE] = quat.from_axis_angle(np.array([1.0, 0, 0]), 0.4 * lift[f])
    root = np.zeros((frames, 3))
    root[:, 1] = 0.953  # ankles a hair above ground when standing
    return skel, RotationalMotion(rotations=rot, root_translation=root, fps=fps), truth


def test_detect_contacts_airborne_all_false():
    skel = toydata.toy_skeleton()
    rot = np.zeros((6, 8, 4))
    rot[..., 0] = 1.0
    root = np.zeros((6, 3))
    root[:, 1] = 5.0  # far above ground
    clip = RotationalMotion(rotations=rot, root_translation=root, fps=30.0)
    labels = detect_foot_contacts(clip, skel, TransferOptions())
    assert not labels.any()


def test_detect_contacts_pinned_all_true():
    skel, clip, _ = _stamp_clip(frames=12)
    still = RotationalMotion(
        rotations=np.tile(clip.rotations[:1], (12, 1, 1)),
        root_translation=clip.root_translation[:12],
        fps=clip.fps,
    )
    labels = detect_foot_contacts(still, skel, TransferOptions())
    assert labels.all()


def test_detect_contacts_matches_constructed_truth():
    skel, clip, truth = _stamp_clip()
    labels = detect_foot_contacts(clip, skel, TransferOptions())
    agreement = (labels == truth).mean()
    assert agreement >= 0.95


def test_detect_contacts_requires_feet(rng):
    from tests.conftest import random_skeleton

    skel = random_skeleton(rng, 5)  # no feet defined
    rot = np.zeros((4, 5, 4))
    rot[..., 0] = 1.0
    clip = RotationalMotion(rotations=rot, root_translation=np.zeros((4, 3)), fps=30.0)
    with pytest.raises(ValueError):
        detect_foot_contacts(clip, skel, TransferOptions())


# ---------------------------------------------------------------------------
# foot contact fixing

def _gait_clip(seed=5, frames=64, style=0):
    rng = np.random.default_rng(seed)
    return toydata.make_gait(
        toydata.TOY_STYLES[style], toydata.GaitContent.sample(rng), frames=frames
    )


def test_fix_all_false_labels_unchanged():
    skel = toydata.toy_skeleton()
    clip = _gait_clip()
    labels = np.zeros((clip.num_frames, 2), dtype=bool)
    fixed = fix_foot_contacts(clip, labels, skel)
    assert np.array_equal(fixed.rotations, clip.rotations)


def test_fix_foot_already_at_target_unchanged():
    skel, clip, _ = _stamp_clip(frames=12)
    still = RotationalMotion(
        rotations=np.tile(clip.rotations[:1], (12, 1, 1)),
        root_translation=np.tile(clip.root_translation[:1], (12, 1)),
        fps=clip.fps,
    )
    labels = np.ones((12, 2), dtype=bool)
    fixed = fix_foot_contacts(still, labels, skel)
    pos_a = forward_kinematics(skel, still).positions
    pos_b = forward_kinematics(skel, fixed).positions
    assert np.abs(pos_a - pos_b).max() < 1e-6


def test_fix_reduces_skate_and_is_idempotent():
    skel = toydata.toy_skeleton()
    content = _gait_clip(seed=11)
    labels = detect_foot_contacts(content, skel, TransferOptions())
    assert labels.any()
    normalized, _ = root_normalize(content)  # the frame the pipeline fixes in
    before = foot_skate_metric(normalized, labels, skel)
    diag = {}
    fixed = fix_foot_contacts(normalized, labels, skel, diag)
    after = foot_skate_metric(fixed, labels, skel)
    assert after < before
    fixed2 = fix_foot_contacts(fixed, labels, skel)
    assert np.abs(fixed2.rotations - fixed.rotations).max() < 1e-5


def test_fix_touches_only_leg_joints():
    skel = toydata.toy_skeleton()
    content = _gait_clip(seed=3)
    labels = detect_foot_contacts(content, skel, TransferOptions())
    fixed = fix_foot_contacts(content, labels, skel)
    for j in (toydata.PELVIS, toydata.CHEST, toydata.LANKLE, toydata.RANKLE):
        assert np.array_equal(fixed.rotations[:, j], content.rotations[:, j])


def test_fix_reaches_reachable_targets():
    skel = toydata.toy_skeleton()
    content = _gait_clip(seed=7)
    labels = detect_foot_contacts(content, skel, TransferOptions())
    diag = {}
    fixed = fix_foot_contacts(content, labels, skel, diag)
    if diag.get("ik_clamped_frames", 0) == 0:
        pos = forward_kinematics(skel, fixed).positions
        feet = skel.foot_indices()
        for f, ankle in enumerate(feet):
            for start, end in inference._runs(labels[:, f]):
                deep = [t for t in range(start, end)
                        if t - start >= 3 and end - 1 - t >= 3]
                if len(deep) >= 2:
                    spread = pos[deep][:, ankle].std(axis=0).max()
                    assert spread < 1e-6  # pinned to one target


# ---------------------------------------------------------------------------
# transfer pipeline

@pytest.fixture(scope="module")
def toy_params():
    ds = toydata.generate_toy_dataset(windows_per_style=2, seed=0)
    hyper = nets.Hyperparams(
        num_joints=8,
        style_labels=ds.label_names,
        content_widths=(8, 12),
        style_widths=(8, 12, 16),
        decoder_up_width=8,
        disc_widths=(8, 12, 16),
        mlp_hidden=16,
    )
    return nets.ModelParams.init(hyper, ds.skeleton, seed=1)


def test_transfer_plumbing_no_warp(toy_params):
    content = _gait_clip(seed=1, frames=32)
    style = _gait_clip(seed=2, frames=32, style=1)
    info = {}
    out = transfer(
        toy_params, content, style, TransferOptions(enable_warp=False, enable_ik=False), info
    )
    assert out.num_frames == content.num_frames
    assert np.allclose(np.linalg.norm(out.rotations, axis=-1), 1.0, atol=1e-3)
    assert np.abs(out.root_translation - content.root_translation).max() < 1e-9
    assert info["warp_factor"] == 1.0 and info["v_con"] > 0


def test_transfer_warp_changes_length(toy_params):
    content = _gait_clip(seed=1, frames=32)
    style = _gait_clip(seed=2, frames=32, style=3)  # hurried: faster
    info = {}
    out = transfer(toy_params, content, style, TransferOptions(enable_ik=False), info)
    factor = info["v_sty"] / info["v_con"]
    assert abs(info["warp_factor"] - factor) < 1e-12
    assert out.num_frames == max(2, round(content.num_frames / factor))
    # warped root trajectory equals warping the content root directly
    assert np.allclose(
        out.root_translation, time_warp(content.root_translation, factor), atol=1e-9
    )


def test_transfer_2d_style_path(toy_params):
    from mostyle.camera import CameraParams, project

    content = _gait_clip(seed=1, frames=32)
    style3d = _gait_clip(seed=2, frames=32, style=2)
    normalized, _ = root_normalize(style3d)
    pos = forward_kinematics(toy_params.skeleton, normalized, include_root_translation=False)
    style2d = project(pos, CameraParams(), toydata.toy_landmarks())
    out = transfer(
        toy_params, content, style2d, TransferOptions(enable_warp=False, enable_ik=False)
    )
    assert out.num_frames == content.num_frames


def test_transfer_static_style_skips_warp(toy_params):
    content = _gait_clip(seed=1, frames=32)
    rot = np.zeros((32, 8, 4))
    rot[..., 0] = 1.0
    static = RotationalMotion(rotations=rot, root_translation=np.zeros((32, 3)), fps=30.0)
    info = {}
    out = transfer(toy_params, content, static, TransferOptions(enable_ik=False), info)
    assert info.get("warp_skipped_static") is True
    assert out.num_frames == content.num_frames


def test_interpolate_weight_bounds(toy_params):
    content = _gait_clip(seed=1, frames=32)
    with pytest.raises(ValueError):
        inference.interpolate_styles(toy_params, content, content, content, 1.5)


def test_interpolate_endpoints_bitwise(toy_params):
    content = _gait_clip(seed=1, frames=32)
    style_a = _gait_clip(seed=2, frames=32, style=1)
    style_b = _gait_clip(seed=3, frames=32, style=2)
    options = TransferOptions()
    plain_a = transfer(toy_params, content, style_a, options)
    plain_b = transfer(toy_params, content, style_b, options)
    w0 = inference.interpolate_styles(toy_params, content, style_a, style_b, 0.0, options)
    w1 = inference.interpolate_styles(toy_params, content, style_a, style_b, 1.0, options)
    assert np.array_equal(w0.rotations, plain_a.rotations)
    assert np.array_equal(w0.root_translation, plain_a.root_translation)
    assert np.array_equal(w1.rotations, plain_b.rotations)


def test_interpolate_equal_styles_midpoint(toy_params):
    content = _gait_clip(seed=1, frames=32)
    style = _gait_clip(seed=2, frames=32, style=1)
    options = TransferOptions(enable_warp=False, enable_ik=False)
    mid = inference.interpolate_styles(toy_params, content, style, style, 0.5, options)
    end = transfer(toy_params, content, style, options)
    assert np.abs(mid.rotations - end.rotations).max() < 1e-6


def test_transfer_options_validation():
    with pytest.raises(ValueError):
        TransferOptions(contact_speed=0.0)
    with pytest.raises(ValueError):
        TransferOptions(contact_height=-1.0)
