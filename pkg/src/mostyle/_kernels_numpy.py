"""Pure-numpy implementations of the hot kernels.

These are the fallback path behind mostyle.backend (select with
MSK_BACKEND=numpy) and the reference the numba kernels are tested against.
Convolutions go through im2col + BLAS; forward kinematics is vectorized over
batch and time with a Python loop over the (small) joint axis.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def _im2col(xp: np.ndarray, k: int, stride: int) -> np.ndarray:
    """(B, C, Tp) padded input -> (B, C, To, K) gathered windows."""
    t_out = (xp.shape[2] - k) // stride + 1
    idx = np.arange(t_out)[:, None] * stride + np.arange(k)[None, :]
    return xp[:, :, idx]


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int) -> np.ndarray:
    """Temporal convolution: x (B, Cin, T), w (Cout, Cin, K) -> (B, Cout, To)."""
    batch, _, _ = x.shape
    c_out, c_in, k = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
    cols = _im2col(xp, k, stride)
    t_out = cols.shape[2]
    flat = cols.transpose(0, 2, 1, 3).reshape(batch * t_out, c_in * k)
    out = flat @ w.reshape(c_out, c_in * k).T + b
    return np.ascontiguousarray(out.reshape(batch, t_out, c_out).transpose(0, 2, 1))


def conv1d_backward(
    x: np.ndarray, w: np.ndarray, stride: int, pad: int, g_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv1d_forward w.r.t. (x, w, b)."""
    batch, c_in, t = x.shape
    c_out, _, k = w.shape
    t_out = g_out.shape[2]
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x

    g_b = g_out.sum(axis=(0, 2))

    cols = _im2col(xp, k, stride)  # (B, Cin, To, K)
    g_w = np.einsum("bot,bitk->oik", g_out, cols, optimize=True)

    g_flat = g_out.transpose(0, 2, 1).reshape(batch * t_out, c_out) @ w.reshape(c_out, c_in * k)
    g_cols = g_flat.reshape(batch, t_out, c_in, k).transpose(0, 2, 1, 3)
    g_xp = np.zeros_like(xp)
    for kk in range(k):
        g_xp[:, :, kk : kk + t_out * stride : stride] += g_cols[:, :, :, kk]
    g_x = g_xp[:, :, pad : pad + t] if pad else g_xp
    return np.ascontiguousarray(g_x), g_w, g_b


def _quat_to_mat(q: np.ndarray) -> np.ndarray:
    """(..., 4) -> (..., 3, 3), unit-quaternion polynomial applied verbatim."""
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


def fk_forward(
    rot: np.ndarray, offsets: np.ndarray, parents: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Hierarchical FK, root at origin.

    rot (B, T, J, 4) -> positions (B, T, J, 3) and global rotation matrices
    (B, T, J, 3, 3), the latter reused by the backward pass.
    """
    batch, t, j, _ = rot.shape
    local = _quat_to_mat(rot)
    glob = np.empty_like(local)
    pos = np.zeros((batch, t, j, 3), dtype=rot.dtype)
    glob[:, :, 0] = local[:, :, 0]
    for jj in range(1, j):
        par = parents[jj]
        glob[:, :, jj] = glob[:, :, par] @ local[:, :, jj]
        pos[:, :, jj] = pos[:, :, par] + (glob[:, :, par] @ offsets[jj].astype(rot.dtype))
    return pos, glob


def fk_backward(
    rot: np.ndarray,
    offsets: np.ndarray,
    parents: np.ndarray,
    glob: np.ndarray,
    g_pos: np.ndarray,
) -> np.ndarray:
    """Gradient of fk_forward positions w.r.t. the quaternions."""
    batch, t, j, _ = rot.shape
    local = _quat_to_mat(rot)
    g_p = g_pos.astype(rot.dtype).copy()
    g_g = np.zeros((batch, t, j, 3, 3), dtype=rot.dtype)
    g_rot = np.empty_like(rot)
    for jj in range(j - 1, 0, -1):
        par = parents[jj]
        g_p[:, :, par] += g_p[:, :, jj]
        g_g[:, :, par] += g_p[:, :, jj][..., :, None] * offsets[jj].astype(rot.dtype)[None, None, None, :]
        g_g[:, :, par] += g_g[:, :, jj] @ np.swapaxes(local[:, :, jj], -1, -2)
        g_r = np.swapaxes(glob[:, :, par], -1, -2) @ g_g[:, :, jj]
        g_rot[:, :, jj] = _mat_grad_to_quat(rot[:, :, jj], g_r)
    g_rot[:, :, 0] = _mat_grad_to_quat(rot[:, :, 0], g_g[:, :, 0])
    return g_rot


def _mat_grad_to_quat(q: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Chain a (..., 3, 3) matrix adjoint through _quat_to_mat."""
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    g00, g01, g02 = g[..., 0, 0], g[..., 0, 1], g[..., 0, 2]
    g10, g11, g12 = g[..., 1, 0], g[..., 1, 1], g[..., 1, 2]
    g20, g21, g22 = g[..., 2, 0], g[..., 2, 1], g[..., 2, 2]
    gw = 2 * (x * (g21 - g12) + y * (g02 - g20) + z * (g10 - g01))
    gx = 2 * (y * (g01 + g10) + z * (g02 + g20) + w * (g21 - g12) - 2 * x * (g11 + g22))
    gy = 2 * (x * (g01 + g10) + w * (g02 - g20) + z * (g12 + g21) - 2 * y * (g00 + g22))
    gz = 2 * (w * (g10 - g01) + x * (g02 + g20) + y * (g12 + g21) - 2 * z * (g00 + g11))
    return np.stack([gw, gx, gy, gz], axis=-1)
