"""Quaternion math for skeletal animation.

Conventions (fixed package-wide):
  * scalar-first component order (w, x, y, z)
  * active rotations, composed child-after-parent: mat(qmul(a, b)) = mat(a) @ mat(b)
  * right-handed coordinates, Y up

All functions accept arrays whose last axis has length 4 and broadcast over
leading axes.
"""

from __future__ import annotations

import numpy as np

DEGENERATE_NORM = 1e-12


class DegenerateQuaternionError(ValueError):
    """Raised when a quaternion's norm is too small to normalize."""


def normalize(q: np.ndarray) -> np.ndarray:
    """Scale quaternion(s) to unit norm.

    Raises DegenerateQuaternionError if any norm is <= 1e-12.
    """
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n <= DEGENERATE_NORM):
        raise DegenerateQuaternionError("quaternion norm below 1e-12")
    return q / n


def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a*b; rotating by the result applies b first, then a."""
    a = np.asarray(a)
    b = np.asarray(b)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def qconj(q: np.ndarray) -> np.ndarray:
    """Conjugate; the inverse for unit quaternions."""
    q = np.asarray(q)
    out = q.copy()
    out[..., 1:] = -out[..., 1:]
    return out


def qrot(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate 3-vector(s) v by unit quaternion(s) q."""
    q = np.asarray(q)
    v = np.asarray(v)
    qv = q[..., 1:]
    w = q[..., :1]
    t = 2.0 * np.cross(qv, v)
    return v + w * t + np.cross(qv, t)


def to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of quaternion(s), shape (..., 3, 3).

    Uses the unit-quaternion polynomial verbatim (no internal normalization),
    so the map is smooth in the raw components.
    """
    q = np.asarray(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3), dtype=q.dtype)
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - w * z)
    m[..., 0, 2] = 2 * (x * z + w * y)
    m[..., 1, 0] = 2 * (x * y + w * z)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - w * x)
    m[..., 2, 0] = 2 * (x * z - w * y)
    m[..., 2, 1] = 2 * (y * z + w * x)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def from_axis_angle(axis: np.ndarray, angle: float | np.ndarray) -> np.ndarray:
    """Unit quaternion rotating by `angle` (radians) about unit `axis`."""
    axis = np.asarray(axis, dtype=np.float64)
    angle = np.asarray(angle, dtype=np.float64)
    half = 0.5 * angle
    s = np.sin(half)
    return np.concatenate(
        [np.cos(half)[..., None], s[..., None] * axis], axis=-1
    )


_AXES = {"X": np.array([1.0, 0, 0]), "Y": np.array([0, 1.0, 0]), "Z": np.array([0, 0, 1.0])}


def from_euler(angles_deg: np.ndarray, order: str) -> np.ndarray:
    """Quaternions from Euler angles in degrees.

    `order` is a string like "ZXY"; rotations compose left to right, i.e.
    mat(result) = R_Z @ R_X @ R_Y for order "ZXY" (the BVH convention for
    channels listed Z, X, Y).
    """
    angles = np.radians(np.asarray(angles_deg, dtype=np.float64))
    if angles.shape[-1] != len(order):
        raise ValueError(f"angle count {angles.shape[-1]} != order length {len(order)}")
    q = None
    for i, ax in enumerate(order):
        qi = from_axis_angle(_AXES[ax], angles[..., i])
        q = qi if q is None else qmul(q, qi)
    return q


def to_euler_zyx(q: np.ndarray) -> np.ndarray:
    """Euler angles (degrees) in Z, Y, X channel order: mat(q) = Rz @ Ry @ Rx.

    Returns (..., 3) array ordered (z, y, x). Near gimbal lock (|sin y| = 1)
    the x angle is folded into z.
    """
    m = to_matrix(normalize(q))
    sy = -m[..., 2, 0]
    sy = np.clip(sy, -1.0, 1.0)
    y = np.arcsin(sy)
    near_lock = np.abs(sy) > 1.0 - 1e-9
    z = np.where(
        near_lock,
        np.arctan2(-m[..., 0, 1], m[..., 1, 1]),
        np.arctan2(m[..., 1, 0], m[..., 0, 0]),
    )
    x = np.where(near_lock, 0.0, np.arctan2(m[..., 2, 1], m[..., 2, 2]))
    return np.degrees(np.stack([z, y, x], axis=-1))


def hemisphere_align(track: np.ndarray) -> np.ndarray:
    """Flip signs along a (T, ..., 4) quaternion track so consecutive frames
    satisfy dot(q_t, q_{t+1}) >= 0.

    Each output frame equals +/- the input frame; represented rotations are
    unchanged.
    """
    track = np.asarray(track)
    if track.shape[0] == 0:
        raise ValueError("empty quaternion track")
    out = track.copy()
    for t in range(1, out.shape[0]):
        dots = np.sum(out[t] * out[t - 1], axis=-1, keepdims=True)
        out[t] = np.where(dots < 0, -out[t], out[t])
    return out


def slerp(qa: np.ndarray, qb: np.ndarray, t: float) -> np.ndarray:
    """Spherical linear interpolation between unit quaternions.

    Takes the shorter arc; falls back to normalized lerp for nearly
    parallel inputs.
    """
    qa = np.asarray(qa, dtype=np.float64)
    qb = np.asarray(qb, dtype=np.float64)
    dot = np.sum(qa * qb, axis=-1, keepdims=True)
    qb = np.where(dot < 0, -qb, qb)
    dot = np.abs(dot)
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    sin_theta = np.sin(theta)
    close = sin_theta < 1e-6
    w_a = np.where(close, 1.0 - t, np.sin((1.0 - t) * theta) / np.where(close, 1.0, sin_theta))
    w_b = np.where(close, t, np.sin(t * theta) / np.where(close, 1.0, sin_theta))
    out = w_a * qa + w_b * qb
    return out / np.linalg.norm(out, axis=-1, keepdims=True)
