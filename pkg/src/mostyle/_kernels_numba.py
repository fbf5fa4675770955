"""Numba-jitted implementations of the hot kernels.

Same contracts as mostyle._kernels_numpy. Loops are written so every output
element is computed independently and in a fixed order, keeping results
deterministic. fastmath stays off: IEEE semantics are part of the
reproducibility contract.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def _conv1d_forward_padded(xp, w, b, stride):
    batch, c_in, t_p = xp.shape
    c_out, _, k = w.shape
    t_out = (t_p - k) // stride + 1
    out = np.empty((batch, c_out, t_out), dtype=xp.dtype)
    for n in range(batch):
        for co in range(c_out):
            for to in range(t_out):
                out[n, co, to] = b[co]
        for co in range(c_out):
            for ci in range(c_in):
                for kk in range(k):
                    wv = w[co, ci, kk]
                    for to in range(t_out):
                        out[n, co, to] += wv * xp[n, ci, to * stride + kk]
    return out


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int) -> np.ndarray:
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else np.ascontiguousarray(x)
    return _conv1d_forward_padded(xp, w, b, stride)


@njit(cache=True)
def _conv1d_backward_padded(xp, w, stride, g_out):
    batch, c_in, t_p = xp.shape
    c_out, _, k = w.shape
    t_out = g_out.shape[2]
    g_xp = np.zeros_like(xp)
    g_w = np.zeros_like(w)
    g_b = np.zeros(c_out, dtype=xp.dtype)
    for n in range(batch):
        for co in range(c_out):
            for to in range(t_out):
                g_b[co] += g_out[n, co, to]
        for co in range(c_out):
            for ci in range(c_in):
                for kk in range(k):
                    acc = 0.0
                    wv = w[co, ci, kk]
                    for to in range(t_out):
                        g = g_out[n, co, to]
                        acc += g * xp[n, ci, to * stride + kk]
                        g_xp[n, ci, to * stride + kk] += g * wv
                    g_w[co, ci, kk] += acc
    return g_xp, g_w, g_b


def conv1d_backward(
    x: np.ndarray, w: np.ndarray, stride: int, pad: int, g_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = x.shape[2]
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else np.ascontiguousarray(x)
    g_xp, g_w, g_b = _conv1d_backward_padded(xp, w, stride, np.ascontiguousarray(g_out))
    g_x = g_xp[:, :, pad : pad + t] if pad else g_xp
    return np.ascontiguousarray(g_x), g_w, g_b


@njit(cache=True, inline="always")
def _quat_to_mat_single(q, m):
    w, x, y, z = q[0], q[1], q[2], q[3]
    m[0, 0] = 1 - 2 * (y * y + z * z)
    m[0, 1] = 2 * (x * y - w * z)
    m[0, 2] = 2 * (x * z + w * y)
    m[1, 0] = 2 * (x * y + w * z)
    m[1, 1] = 1 - 2 * (x * x + z * z)
    m[1, 2] = 2 * (y * z - w * x)
    m[2, 0] = 2 * (x * z - w * y)
    m[2, 1] = 2 * (y * z + w * x)
    m[2, 2] = 1 - 2 * (x * x + y * y)


@njit(cache=True)
def _fk_forward(rot, offsets, parents):
    batch, t, j, _ = rot.shape
    pos = np.zeros((batch, t, j, 3), dtype=rot.dtype)
    glob = np.empty((batch, t, j, 3, 3), dtype=rot.dtype)
    local = np.empty((3, 3), dtype=rot.dtype)
    for n in range(batch):
        for tt in range(t):
            _quat_to_mat_single(rot[n, tt, 0], glob[n, tt, 0])
            for jj in range(1, j):
                par = parents[jj]
                _quat_to_mat_single(rot[n, tt, jj], local)
                for a in range(3):
                    pa = pos[n, tt, par, a]
                    for bb in range(3):
                        glob[n, tt, jj, a, bb] = (
                            glob[n, tt, par, a, 0] * local[0, bb]
                            + glob[n, tt, par, a, 1] * local[1, bb]
                            + glob[n, tt, par, a, 2] * local[2, bb]
                        )
                        pa += glob[n, tt, par, a, bb] * offsets[jj, bb]
                    pos[n, tt, jj, a] = pa
    return pos, glob


def fk_forward(
    rot: np.ndarray, offsets: np.ndarray, parents: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    return _fk_forward(
        np.ascontiguousarray(rot), offsets.astype(rot.dtype), parents.astype(np.int64)
    )


@njit(cache=True, inline="always")
def _mat_grad_to_quat_single(q, g, out):
    w, x, y, z = q[0], q[1], q[2], q[3]
    out[0] = 2 * (x * (g[2, 1] - g[1, 2]) + y * (g[0, 2] - g[2, 0]) + z * (g[1, 0] - g[0, 1]))
    out[1] = 2 * (
        y * (g[0, 1] + g[1, 0]) + z * (g[0, 2] + g[2, 0]) + w * (g[2, 1] - g[1, 2])
        - 2 * x * (g[1, 1] + g[2, 2])
    )
    out[2] = 2 * (
        x * (g[0, 1] + g[1, 0]) + w * (g[0, 2] - g[2, 0]) + z * (g[1, 2] + g[2, 1])
        - 2 * y * (g[0, 0] + g[2, 2])
    )
    out[3] = 2 * (
        w * (g[1, 0] - g[0, 1]) + x * (g[0, 2] + g[2, 0]) + y * (g[1, 2] + g[2, 1])
        - 2 * z * (g[0, 0] + g[1, 1])
    )


@njit(cache=True)
def _fk_backward(rot, offsets, parents, glob, g_pos):
    batch, t, j, _ = rot.shape
    g_rot = np.empty_like(rot)
    local = np.empty((3, 3), dtype=rot.dtype)
    g_r = np.empty((3, 3), dtype=rot.dtype)
    for n in range(batch):
        for tt in range(t):
            g_g = np.zeros((j, 3, 3), dtype=rot.dtype)
            g_p = np.empty((j, 3), dtype=rot.dtype)
            for jj in range(j):
                for a in range(3):
                    g_p[jj, a] = g_pos[n, tt, jj, a]
            for jj in range(j - 1, 0, -1):
                par = parents[jj]
                _quat_to_mat_single(rot[n, tt, jj], local)
                for a in range(3):
                    g_p[par, a] += g_p[jj, a]
                    for bb in range(3):
                        g_g[par, a, bb] += g_p[jj, a] * offsets[jj, bb]
                        acc = 0.0
                        racc = 0.0
                        for c in range(3):
                            acc += g_g[jj, a, c] * local[bb, c]
                            racc += glob[n, tt, par, c, a] * g_g[jj, c, bb]
                        g_g[par, a, bb] += acc
                        g_r[a, bb] = racc
                _mat_grad_to_quat_single(rot[n, tt, jj], g_r, g_rot[n, tt, jj])
            _mat_grad_to_quat_single(rot[n, tt, 0], g_g[0], g_rot[n, tt, 0])
    return g_rot


def fk_backward(
    rot: np.ndarray,
    offsets: np.ndarray,
    parents: np.ndarray,
    glob: np.ndarray,
    g_pos: np.ndarray,
) -> np.ndarray:
    return _fk_backward(
        np.ascontiguousarray(rot),
        offsets.astype(rot.dtype),
        parents.astype(np.int64),
        np.ascontiguousarray(glob),
        np.ascontiguousarray(g_pos.astype(rot.dtype)),
    )
