"""Test-time pipeline: translation, root-trajectory handling with
velocity-ratio time warping, foot-contact IK cleanup, style interpolation.

Pipeline order for transfer: root-normalize content -> translate ->
foot-contact fix (labels from the content input) -> restore the content
root trajectory -> time-warp the whole clip by V_style / V_content.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nets, quat
from .kinematics import forward_kinematics
from .motion import (
    PositionalMotion2D,
    PositionalMotion3D,
    RotationalMotion,
    local_joint_velocity,
    root_normalize,
    root_restore,
)
from .nets import ModelParams
from .skeleton import SkeletonTopology

BLEND_FRAMES = 3


@dataclass(frozen=True)
class TransferOptions:
    enable_warp: bool = True
    enable_ik: bool = True
    contact_height: float | None = None  # None: 3% of skeleton height
    contact_speed: float = 0.5
    style2d_scale: float = 1.0

    def __post_init__(self):
        if self.contact_height is not None and self.contact_height <= 0:
            raise ValueError("contact height threshold must be positive")
        if self.contact_speed <= 0:
            raise ValueError("contact speed threshold must be positive")
        if self.style2d_scale <= 0:
            raise ValueError("style2d_scale must be positive")

    def height_threshold(self, skel: SkeletonTopology) -> float:
        if self.contact_height is not None:
            return self.contact_height
        return 0.03 * skel.height()


# ---------------------------------------------------------------------------
# velocity factor and time warping

def velocity_factor(motion: PositionalMotion3D) -> float:
    """Temporal mean of the per-frame maximum root-relative joint speed."""
    speeds = local_joint_velocity(motion)
    return float(np.mean(np.max(speeds, axis=1)))


def velocity_factor_2d(motion: PositionalMotion2D, fps: float | None = None) -> float:
    """2D analogue of velocity_factor for keypoint style inputs: speeds of
    pelvis-relative keypoints in image units per second."""
    if motion.num_frames < 2:
        raise ValueError("need at least 2 frames")
    fps = fps if fps is not None else motion.fps
    rel = motion.positions - motion.positions[:, :1, :]
    vel = np.empty_like(rel)
    vel[1:-1] = (rel[2:] - rel[:-2]) * (0.5 * fps)
    vel[0] = (rel[1] - rel[0]) * fps
    vel[-1] = (rel[-1] - rel[-2]) * fps
    speeds = np.linalg.norm(vel, axis=-1)
    return float(np.mean(np.max(speeds, axis=1)))


def _warp_samples(length: int, factor: float) -> np.ndarray:
    if factor <= 0:
        raise ValueError("warp factor must be positive")
    new_len = max(2, int(round(length / factor)))
    return np.linspace(0.0, length - 1.0, new_len)


def time_warp(root_track: np.ndarray, factor: float) -> np.ndarray:
    """Linearly resample a (T, 3) trajectory to length round(T / factor).

    factor > 1 (style faster than content) shortens the track; warping by f
    and then 1/f recovers interior samples up to interpolation error.
    """
    track = np.asarray(root_track, dtype=np.float64)
    samples = _warp_samples(track.shape[0], factor)
    lo = np.floor(samples).astype(int)
    hi = np.minimum(lo + 1, track.shape[0] - 1)
    frac = (samples - lo)[:, None]
    return (1.0 - frac) * track[lo] + frac * track[hi]


def warp_motion(motion: RotationalMotion, factor: float) -> RotationalMotion:
    """Resample a whole clip: root track linearly, joint rotations by
    per-joint slerp. Frame rate is unchanged, so duration scales by 1/factor."""
    samples = _warp_samples(motion.num_frames, factor)
    lo = np.floor(samples).astype(int)
    hi = np.minimum(lo + 1, motion.num_frames - 1)
    frac = samples - lo
    rot = np.empty((len(samples), motion.num_joints, 4))
    for i, (a, b, t) in enumerate(zip(lo, hi, frac)):
        if a == b or t == 0.0:
            rot[i] = motion.rotations[a]
        else:
            rot[i] = quat.slerp(motion.rotations[a], motion.rotations[b], float(t))
    rot = np.stack([quat.hemisphere_align(rot[:, j]) for j in range(motion.num_joints)], axis=1)
    return RotationalMotion(
        rotations=rot,
        root_translation=time_warp(motion.root_translation, factor),
        fps=motion.fps,
        style_label=motion.style_label,
    )


# ---------------------------------------------------------------------------
# foot contacts

def _track_speeds(track: np.ndarray, fps: float) -> np.ndarray:
    vel = np.empty_like(track)
    if track.shape[0] < 2:
        return np.zeros(track.shape[0])
    vel[1:-1] = (track[2:] - track[:-2]) * (0.5 * fps)
    vel[0] = (track[1] - track[0]) * fps
    vel[-1] = (track[-1] - track[-2]) * fps
    return np.linalg.norm(vel, axis=-1)


def detect_foot_contacts(
    content: RotationalMotion, skel: SkeletonTopology, options: TransferOptions
) -> np.ndarray:
    """(T, 2) boolean labels (left, right): contact when the foot is both
    below the height threshold and slower than the speed threshold, measured
    on FK of the content input."""
    feet = skel.foot_indices()
    pos = forward_kinematics(skel, content, include_root_translation=True).positions
    h_thr = options.height_threshold(skel)
    labels = np.zeros((content.num_frames, 2), dtype=bool)
    for i, foot in enumerate(feet):
        track = pos[:, foot]
        speed = _track_speeds(track, content.fps)
        labels[:, i] = (track[:, 1] < h_thr) & (speed < options.contact_speed)
    return labels


def foot_skate_metric(
    motion: RotationalMotion, labels: np.ndarray, skel: SkeletonTopology
) -> float:
    """Mean world foot speed over contact frames; 0 when nothing is in contact."""
    feet = skel.foot_indices()
    pos = forward_kinematics(skel, motion, include_root_translation=True).positions
    speeds = []
    for i, foot in enumerate(feet):
        speed = _track_speeds(pos[:, foot], motion.fps)
        speeds.append(speed[labels[: len(speed), i]])
    collected = np.concatenate(speeds) if speeds else np.zeros(0)
    return float(collected.mean()) if collected.size else 0.0


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    runs = []
    start = None
    for i, v in enumerate(mask):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(mask)))
    return runs


def _shortest_arc(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unit quaternion rotating unit vector a onto unit vector b."""
    d = float(np.dot(a, b))
    if d > 1.0 - 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    if d < -1.0 + 1e-12:
        helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        axis = np.cross(a, helper)
        axis /= np.linalg.norm(axis)
        return quat.from_axis_angle(axis, np.pi)
    axis = np.cross(a, b)
    axis = axis / np.linalg.norm(axis)
    return quat.from_axis_angle(axis, float(np.arccos(np.clip(d, -1.0, 1.0))))


def _leg_chain(skel: SkeletonTopology, ankle: int) -> tuple[int, int, int]:
    knee = int(skel.parents[ankle])
    if knee <= 0:
        raise ValueError(f"foot joint {ankle} has no two-bone chain above it")
    hip = int(skel.parents[knee])
    if hip < 0:
        raise ValueError(f"foot joint {ankle} has no two-bone chain above it")
    return hip, knee, ankle


def _chain_global_quat(rotations: np.ndarray, skel: SkeletonTopology, joint: int) -> np.ndarray:
    """Global orientation of `joint`'s frame as a quaternion (root first)."""
    chain = skel.chain_to_root(joint)[::-1]
    g = rotations[chain[0]]
    for j in chain[1:]:
        g = quat.qmul(g, rotations[j])
    return g


def _solve_two_bone(
    rotations: np.ndarray,
    skel: SkeletonTopology,
    hip: int,
    knee: int,
    ankle: int,
    root_pos: np.ndarray,
    target: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Analytic hinge-knee IK. Returns new (hip, knee) local quaternions and
    whether the target had to be clamped to the reachable range."""
    l1 = float(np.linalg.norm(skel.offsets[knee]))
    l2 = float(np.linalg.norm(skel.offsets[ankle]))
    parent = int(skel.parents[hip])
    if parent >= 0:
        g_hp = _chain_global_quat(rotations, skel, parent)
    else:
        g_hp = np.array([1.0, 0.0, 0.0, 0.0])

    # hip world position (depends only on joints above the hip)
    pos = root_pos.copy()
    chain = skel.chain_to_root(hip)[::-1]
    g = np.array([1.0, 0.0, 0.0, 0.0])
    for idx, j in enumerate(chain):
        if idx > 0:
            pos = pos + quat.qrot(g, skel.offsets[j])
        g = quat.qmul(g, rotations[j])
    p_hip = pos

    to_target = target - p_hip
    dist = float(np.linalg.norm(to_target))
    lo = abs(l1 - l2) + 1e-9
    hi = l1 + l2 - 1e-9
    clamped = not (lo <= dist <= hi)
    d = float(np.clip(dist, lo, hi))
    if dist > 1e-12:
        target = p_hip + to_target * (d / dist)
    else:
        return rotations[hip], rotations[knee], True

    # hinge-knee bend from the law of cosines, sign taken from the pose
    cos_int = (l1 * l1 + l2 * l2 - d * d) / (2.0 * l1 * l2)
    bend = np.pi - float(np.arccos(np.clip(cos_int, -1.0, 1.0)))
    cur_knee = rotations[knee]
    sign = 1.0 if cur_knee[1] >= 0 else -1.0
    q_knee = quat.from_axis_angle(np.array([1.0, 0.0, 0.0]), sign * bend)

    # point the (now rigid) hip->ankle segment at the target
    g_hip = quat.qmul(g_hp, rotations[hip])
    p_knee = p_hip + quat.qrot(g_hip, skel.offsets[knee])
    p_ankle = p_knee + quat.qrot(quat.qmul(g_hip, q_knee), skel.offsets[ankle])
    v_cur = p_ankle - p_hip
    n_cur = np.linalg.norm(v_cur)
    v_tgt = target - p_hip
    n_tgt = np.linalg.norm(v_tgt)
    if n_cur < 1e-12 or n_tgt < 1e-12:
        return rotations[hip], q_knee, clamped
    arc = _shortest_arc(v_cur / n_cur, v_tgt / n_tgt)
    q_hip = quat.qmul(quat.qconj(g_hp), quat.qmul(arc, quat.qmul(g_hp, rotations[hip])))
    return quat.normalize(q_hip), q_knee, clamped


def fix_foot_contacts(
    output: RotationalMotion,
    labels: np.ndarray,
    skel: SkeletonTopology,
    diagnostics: dict | None = None,
) -> RotationalMotion:
    """Pin feet during contact runs with analytic two-bone leg IK.

    The per-run target is the median foot position over the run's interior
    (frames at least 3 from either run edge; short runs use the whole run and
    skip blending). Boundary frames blend the target toward the foot position
    of the nearest untouched frame, which keeps re-application a no-op.
    Only hip and knee rotations change; unreachable targets clamp to full
    leg extension and are counted in `diagnostics`.
    """
    labels = np.asarray(labels, dtype=bool)
    if labels.shape != (output.num_frames, 2):
        raise ValueError(f"labels must be ({output.num_frames}, 2)")
    feet = skel.foot_indices()
    rot = output.rotations.copy()
    pos = forward_kinematics(skel, output, include_root_translation=True).positions
    clamp_count = 0
    for f, ankle in enumerate(feet):
        hip, knee, ankle = _leg_chain(skel, ankle)
        track = pos[:, ankle]
        for start, end in _runs(labels[:, f]):
            deep = [t for t in range(start, end)
                    if t - start >= BLEND_FRAMES and end - 1 - t >= BLEND_FRAMES]
            if deep:
                median = np.median(track[deep], axis=0)
            else:
                median = np.median(track[start:end], axis=0)
            for t in range(start, end):
                k_edge = min(t - start, end - 1 - t)
                if deep and k_edge < BLEND_FRAMES:
                    anchor_frame = start - 1 if (t - start) <= (end - 1 - t) else end
                    if 0 <= anchor_frame < output.num_frames:
                        wgt = (k_edge + 1) / (BLEND_FRAMES + 1)
                        target = (1.0 - wgt) * track[anchor_frame] + wgt * median
                    else:
                        target = median
                else:
                    target = median
                if np.linalg.norm(track[t] - target) <= 1e-9:
                    continue  # already pinned; keeps re-application exact
                q_hip, q_knee, clamped = _solve_two_bone(
                    rot[t], skel, hip, knee, ankle,
                    output.root_translation[t], target,
                )
                rot[t, hip] = q_hip
                rot[t, knee] = q_knee
                clamp_count += int(clamped)
        rot[:, hip] = quat.hemisphere_align(rot[:, hip])
        rot[:, knee] = quat.hemisphere_align(rot[:, knee])
    if diagnostics is not None:
        diagnostics["ik_clamped_frames"] = diagnostics.get("ik_clamped_frames", 0) + clamp_count
    return RotationalMotion(
        rotations=rot,
        root_translation=output.root_translation.copy(),
        fps=output.fps,
        style_label=output.style_label,
    )


# ---------------------------------------------------------------------------
# transfer pipeline

def _prepare_style(
    params: ModelParams,
    style: RotationalMotion | PositionalMotion3D | PositionalMotion2D,
    options: TransferOptions,
) -> tuple[np.ndarray, float]:
    """Style code and velocity factor for a 3D clip or 2D keypoints."""
    if isinstance(style, RotationalMotion):
        normalized, _ = root_normalize(style)
        pos = forward_kinematics(params.skeleton, normalized, include_root_translation=False)
        return nets.encode_style_3d(params, pos), velocity_factor(pos)
    if isinstance(style, PositionalMotion3D):
        return nets.encode_style_3d(params, style), velocity_factor(style)
    if isinstance(style, PositionalMotion2D):
        scaled = PositionalMotion2D(
            positions=style.positions * options.style2d_scale,
            confidence=style.confidence,
            fps=style.fps,
        )
        return nets.encode_style_2d(params, scaled), velocity_factor_2d(scaled)
    raise TypeError(f"unsupported style input type {type(style).__name__}")


def _transfer_with_code(
    params: ModelParams,
    content: RotationalMotion,
    z_s: np.ndarray,
    v_sty: float,
    options: TransferOptions,
    info: dict | None,
) -> RotationalMotion:
    skel = params.skeleton
    if content.num_joints != skel.num_joints:
        raise ValueError("content joint count does not match the checkpoint skeleton")
    labels = detect_foot_contacts(content, skel, options) if options.enable_ik else None
    normalized, xform = root_normalize(content)

    content_pos = forward_kinematics(skel, normalized, include_root_translation=False)
    v_con = velocity_factor(content_pos)

    z_c = nets.encode_content(params, normalized)
    out = nets.decode(params, z_c, nets.style_to_adain(params, z_s), fps=content.fps)

    diagnostics: dict = {}
    if options.enable_ik:
        out = fix_foot_contacts(out, labels, skel, diagnostics)
    out = root_restore(out, xform)

    factor = 1.0
    if options.enable_warp:
        if v_con > 1e-8 and v_sty > 1e-8:
            factor = v_sty / v_con
            if factor != 1.0:
                out = warp_motion(out, factor)
        else:
            diagnostics["warp_skipped_static"] = True
    if info is not None:
        info.update(
            v_con=v_con,
            v_sty=v_sty,
            warp_factor=factor,
            contact_frames=(
                [int(labels[:, 0].sum()), int(labels[:, 1].sum())] if labels is not None else [0, 0]
            ),
            **diagnostics,
        )
    return out


def transfer(
    params: ModelParams,
    content: RotationalMotion,
    style: RotationalMotion | PositionalMotion3D | PositionalMotion2D,
    options: TransferOptions = TransferOptions(),
    info: dict | None = None,
) -> RotationalMotion:
    """Apply a style example to a content clip.

    Joint rotations come from the network; the root trajectory is the
    content's, warped by the velocity-factor ratio V_style / V_content.
    """
    z_s, v_sty = _prepare_style(params, style, options)
    return _transfer_with_code(params, content, z_s, v_sty, options, info)


def interpolate_styles(
    params: ModelParams,
    content: RotationalMotion,
    style_a,
    style_b,
    weight: float,
    options: TransferOptions = TransferOptions(),
    info: dict | None = None,
) -> RotationalMotion:
    """Transfer with a convex combination of two style codes; weight 0 or 1
    reproduces the corresponding plain transfer exactly."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError("interpolation weight must lie in [0, 1]")
    z_a, v_a = _prepare_style(params, style_a, options)
    z_b, v_b = _prepare_style(params, style_b, options)
    if weight == 0.0:
        z_s, v_s = z_a, v_a
    elif weight == 1.0:
        z_s, v_s = z_b, v_b
    else:
        z_s = (1.0 - weight) * z_a + weight * z_b
        v_s = (1.0 - weight) * v_a + weight * v_b
    return _transfer_with_code(params, content, z_s, v_s, options, info)
