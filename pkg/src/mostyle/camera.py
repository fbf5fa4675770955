"""Weak-perspective camera for the joint 2D-3D style embedding.

Conventions: right-handed coordinates, Y up. A clip's forward direction is
normalize(cross(lateral, Y)) where lateral is the left-to-right body axis
averaged over shoulders and hips; with lateral = +X this gives forward = +Z.
Yaw rotates about the aligned frame's Y axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .motion import PositionalMotion2D, PositionalMotion3D

UP = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class CameraParams:
    """Scale plus Euler angles (degrees). Weak perspective: rigid rotation,
    uniform scale, drop depth."""

    scale: float = 1.0
    pitch: float = 0.0
    yaw: float = 0.0
    roll: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("camera scale must be positive")
        for a in (self.pitch, self.yaw, self.roll):
            if not np.isfinite(a):
                raise ValueError("camera angles must be finite")


@dataclass(frozen=True)
class BodyLandmarks:
    """Joint indices used to derive the body's lateral axis."""

    left_shoulder: int
    right_shoulder: int
    left_hip: int
    right_hip: int


def _per_frame_forward(positions: np.ndarray, lm: BodyLandmarks) -> np.ndarray:
    lateral = 0.5 * (
        positions[:, lm.right_shoulder] - positions[:, lm.left_shoulder]
    ) + 0.5 * (positions[:, lm.right_hip] - positions[:, lm.left_hip])
    fwd = np.cross(lateral, UP)
    norms = np.linalg.norm(fwd, axis=-1)
    return fwd, norms


def forward_direction(motion: PositionalMotion3D, landmarks: BodyLandmarks) -> np.ndarray:
    """Unit forward vector of a clip: the normalized temporal mean of
    per-frame forward directions. Frames with a degenerate lateral axis are
    skipped; all-degenerate clips raise."""
    for idx in (landmarks.left_shoulder, landmarks.right_shoulder,
                landmarks.left_hip, landmarks.right_hip):
        if not 0 <= idx < motion.num_joints:
            raise ValueError(f"landmark index {idx} out of range")
    fwd, norms = _per_frame_forward(motion.positions, landmarks)
    valid = norms > 1e-10
    if not np.any(valid):
        raise ValueError("lateral body axis is degenerate in every frame")
    unit = fwd[valid] / norms[valid, None]
    mean = unit.mean(axis=0)
    n = np.linalg.norm(mean)
    if n < 1e-10:
        raise ValueError("per-frame forward directions cancel out")
    return mean / n


def _rot_x(deg: float) -> np.ndarray:
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def _rot_y(deg: float) -> np.ndarray:
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def _rot_z(deg: float) -> np.ndarray:
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def alignment_basis(forward: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns X, Y, Z) whose Z axis is `forward`
    flattened to the ground plane and whose Y is world up."""
    f = np.asarray(forward, dtype=np.float64)
    f = np.array([f[0], 0.0, f[2]])
    n = np.linalg.norm(f)
    if n < 1e-10:
        f = np.array([0.0, 0.0, 1.0])
    else:
        f = f / n
    x = np.cross(UP, f)
    x /= np.linalg.norm(x)
    return np.stack([x, UP, f], axis=1)


def project(
    motion: PositionalMotion3D, cam: CameraParams, landmarks: BodyLandmarks
) -> PositionalMotion2D:
    """Weak-perspective projection.

    Positions are re-expressed in the clip's forward-aligned frame, rotated
    by (roll, pitch, yaw) about that frame's axes, scaled, and the depth
    axis is dropped. Confidence is 1 everywhere (synthetic views).
    """
    fwd = forward_direction(motion, landmarks)
    basis = alignment_basis(fwd)
    local = motion.positions @ basis  # row-vector form of basis^T @ p
    rot = _rot_y(cam.yaw) @ _rot_x(cam.pitch) @ _rot_z(cam.roll)
    view = local @ rot.T
    xy = cam.scale * view[..., :2]
    return PositionalMotion2D(
        positions=xy,
        confidence=np.ones(xy.shape[:2]),
        fps=motion.fps,
    )


def sample_cameras(rng: np.random.Generator, n: int = 5) -> list[CameraParams]:
    """Training-time camera draws: yaw uniform on [-90, 90] degrees, scale
    uniform on [0.8, 1.2], pitch = roll = 0."""
    cams = []
    for _ in range(n):
        yaw = float(rng.uniform(-90.0, 90.0))
        scale = float(rng.uniform(0.8, 1.2))
        cams.append(CameraParams(scale=scale, yaw=yaw))
    return cams
