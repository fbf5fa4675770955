"""Motion containers and root-track utilities.

All containers are treated as immutable values: operations return new
instances and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import quat


@dataclass(frozen=True)
class RotationalMotion:
    """A clip as per-joint unit quaternions plus a root translation track.

    rotations: (T, J, 4) scalar-first quaternions, hemisphere-aligned per joint.
    root_translation: (T, 3) in the length units of the source file.
    """

    rotations: np.ndarray
    root_translation: np.ndarray
    fps: float
    style_label: str | None = None

    def __post_init__(self):
        rot = np.asarray(self.rotations, dtype=np.float64)
        root = np.asarray(self.root_translation, dtype=np.float64)
        object.__setattr__(self, "rotations", rot)
        object.__setattr__(self, "root_translation", root)
        if rot.ndim != 3 or rot.shape[-1] != 4 or rot.shape[0] < 1:
            raise ValueError("rotations must be (T, J, 4) with T >= 1")
        if root.shape != (rot.shape[0], 3):
            raise ValueError("root_translation must be (T, 3) matching rotations")

    @property
    def num_frames(self) -> int:
        return self.rotations.shape[0]

    @property
    def num_joints(self) -> int:
        return self.rotations.shape[1]

    def slice(self, start: int, length: int) -> "RotationalMotion":
        return replace(
            self,
            rotations=self.rotations[start : start + length],
            root_translation=self.root_translation[start : start + length],
        )


@dataclass(frozen=True)
class PositionalMotion3D:
    """Joint position sequence, (T, J, 3); joint 0 is the root."""

    positions: np.ndarray
    fps: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        object.__setattr__(self, "positions", pos)
        if pos.ndim != 3 or pos.shape[-1] != 3 or pos.shape[0] < 1:
            raise ValueError("positions must be (T, J, 3) with T >= 1")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")

    @property
    def num_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def num_joints(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class PositionalMotion2D:
    """Projected joint positions, (T, J, 2), with per-joint confidence in [0, 1]."""

    positions: np.ndarray
    confidence: np.ndarray
    fps: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        conf = np.asarray(self.confidence, dtype=np.float64)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "confidence", conf)
        if pos.ndim != 3 or pos.shape[-1] != 2 or pos.shape[0] < 1:
            raise ValueError("positions must be (T, J, 2) with T >= 1")
        if conf.shape != pos.shape[:2]:
            raise ValueError("confidence must be (T, J)")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if np.any(conf < 0) or np.any(conf > 1):
            raise ValueError("confidence must lie in [0, 1]")

    @property
    def num_frames(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class RootTransform:
    """Inverse data recorded by root_normalize: heading angle plus the
    original root translation track."""

    yaw: float
    translation: np.ndarray  # (T, 3)


def local_joint_velocity(motion: PositionalMotion3D) -> np.ndarray:
    """Per-joint root-relative speeds, (T, J), in length units per second.

    Central differences at interior frames, one-sided at the ends.
    """
    if motion.num_frames < 2:
        raise ValueError("need at least 2 frames for velocities")
    rel = motion.positions - motion.positions[:, :1, :]
    vel = np.empty_like(rel)
    vel[1:-1] = (rel[2:] - rel[:-2]) * (0.5 * motion.fps)
    vel[0] = (rel[1] - rel[0]) * motion.fps
    vel[-1] = (rel[-1] - rel[-2]) * motion.fps
    return np.linalg.norm(vel, axis=-1)


def _average_heading(rotations: np.ndarray) -> float:
    """Yaw (about +Y) of the average forward direction of the root track.

    Forward is the root-rotated +Z axis projected to the ground plane.
    Returns 0 for degenerate (vertical) headings.
    """
    fwd = quat.qrot(rotations[:, 0, :], np.array([0.0, 0.0, 1.0]))
    mean = fwd.mean(axis=0)
    flat = np.hypot(mean[0], mean[2])
    if flat < 1e-8:
        return 0.0
    return float(np.arctan2(mean[0], mean[2]))


def root_normalize(motion: RotationalMotion) -> tuple[RotationalMotion, RootTransform]:
    """Zero the root translation and remove the clip's average heading (yaw).

    Pitch and roll of the root are kept. Returns the normalized motion and
    the transform that root_restore uses to invert the operation exactly.
    """
    yaw = _average_heading(motion.rotations)
    q_yaw_inv = quat.from_axis_angle(np.array([0.0, 1.0, 0.0]), -yaw)
    rot = motion.rotations.copy()
    rot[:, 0, :] = quat.hemisphere_align(quat.qmul(q_yaw_inv, rot[:, 0, :]))
    normalized = RotationalMotion(
        rotations=rot,
        root_translation=np.zeros_like(motion.root_translation),
        fps=motion.fps,
        style_label=motion.style_label,
    )
    return normalized, RootTransform(yaw=yaw, translation=motion.root_translation.copy())


def root_restore(motion: RotationalMotion, transform: RootTransform) -> RotationalMotion:
    """Invert root_normalize: reattach heading and translation track.

    The stored track is resampled linearly if the motion's frame count
    changed (e.g. after time warping).
    """
    q_yaw = quat.from_axis_angle(np.array([0.0, 1.0, 0.0]), transform.yaw)
    rot = motion.rotations.copy()
    rot[:, 0, :] = quat.hemisphere_align(quat.qmul(q_yaw, rot[:, 0, :]))
    track = transform.translation
    if track.shape[0] != motion.num_frames:
        src = np.linspace(0.0, track.shape[0] - 1.0, motion.num_frames)
        track = _resample_linear(track, src)
    return RotationalMotion(
        rotations=rot,
        root_translation=track.copy(),
        fps=motion.fps,
        style_label=motion.style_label,
    )


def _resample_linear(track: np.ndarray, samples: np.ndarray) -> np.ndarray:
    idx = np.clip(samples, 0.0, track.shape[0] - 1.0)
    lo = np.floor(idx).astype(int)
    hi = np.minimum(lo + 1, track.shape[0] - 1)
    frac = (idx - lo)[:, None]
    return (1.0 - frac) * track[lo] + frac * track[hi]
