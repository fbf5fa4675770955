"""Minimal reverse-mode autodiff over numpy arrays.

Just enough machinery for this package's networks and losses: a Tensor
wrapper with a tape, and the ops the models are built from. Hot ops
(conv1d, forward kinematics) dispatch through mostyle.backend; everything
else is plain numpy. Dtype follows the inputs, so the same graph runs in
float32 for training and float64 for finite-difference checks.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import backend


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        _parents: tuple["Tensor", ...] = (),
        _backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None,
    ):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def item(self) -> float:
        return float(self.data)

    def backward(self, grad: np.ndarray | None = None):
        if grad is None:
            grad = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad:
                    stack.append((p, False))
        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=self.data.dtype)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for p, pg in zip(node._parents, node._backward(g)):
                if pg is None or not p.requires_grad:
                    continue
                if id(p) in grads:
                    grads[id(p)] = grads[id(p)] + pg
                else:
                    grads[id(p)] = pg

    # operator sugar -------------------------------------------------------
    def __add__(self, other):
        return add(self, _wrap(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_wrap(other)))

    def __rsub__(self, other):
        return add(_wrap(other), neg(self))

    def __mul__(self, other):
        return mul(self, _wrap(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def _sum_to(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to `shape`."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    out = a.data + b.data

    def back(g):
        return _sum_to(g, a.data.shape), _sum_to(g, b.data.shape)

    return Tensor(out, _parents=(a, b), _backward=back)


def neg(a: Tensor) -> Tensor:
    return Tensor(-a.data, _parents=(a,), _backward=lambda g: (-g,))


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data * b.data

    def back(g):
        return _sum_to(g * b.data, a.data.shape), _sum_to(g * a.data, b.data.shape)

    return Tensor(out, _parents=(a, b), _backward=back)


def div(a: Tensor, b: Tensor) -> Tensor:
    out = a.data / b.data

    def back(g):
        ga = _sum_to(g / b.data, a.data.shape)
        gb = _sum_to(-g * a.data / (b.data * b.data), b.data.shape)
        return ga, gb

    return Tensor(out, _parents=(a, b), _backward=back)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2D x 2D matrix product (linear layers)."""
    out = a.data @ b.data

    def back(g):
        return g @ b.data.T, a.data.T @ g

    return Tensor(out, _parents=(a, b), _backward=back)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return add(matmul(x, w), b)


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    mask = x.data >= 0
    out = np.where(mask, x.data, x.data * slope)

    def back(g):
        return (np.where(mask, g, g * slope),)

    return Tensor(out, _parents=(x,), _backward=back)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor(
        np.where(mask, x.data, 0.0).astype(x.dtype),
        _parents=(x,),
        _backward=lambda g: (np.where(mask, g, 0.0).astype(x.dtype),),
    )


def abs_(x: Tensor) -> Tensor:
    s = np.sign(x.data)
    return Tensor(np.abs(x.data), _parents=(x,), _backward=lambda g: (g * s,))


def sqrt(x: Tensor) -> Tensor:
    out = np.sqrt(x.data)

    def back(g):
        return (g * (0.5 / out),)

    return Tensor(out, _parents=(x,), _backward=back)


def mean(x: Tensor) -> Tensor:
    size = x.data.size

    def back(g):
        return (np.full_like(x.data, 1.0 / size) * g,)

    return Tensor(np.mean(x.data), _parents=(x,), _backward=back)


def sum_(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = np.sum(x.data, axis=axis, keepdims=keepdims)

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.data.shape).astype(x.dtype, copy=False),)

    return Tensor(out, _parents=(x,), _backward=back)


def reshape(x: Tensor, shape) -> Tensor:
    orig = x.data.shape
    return Tensor(
        x.data.reshape(shape), _parents=(x,), _backward=lambda g: (g.reshape(orig),)
    )


def transpose(x: Tensor, axes) -> Tensor:
    inv = np.argsort(axes)
    return Tensor(
        np.ascontiguousarray(x.data.transpose(axes)),
        _parents=(x,),
        _backward=lambda g: (np.ascontiguousarray(g.transpose(inv)),),
    )


def getitem(x: Tensor, key) -> Tensor:
    def back(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, key, g)
        return (gx,)

    return Tensor(x.data[key], _parents=(x,), _backward=back)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    datas = [t.data for t in tensors]
    sizes = [d.shape[axis] for d in datas]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return Tensor(np.concatenate(datas, axis=axis), _parents=tuple(tensors), _backward=back)


def conv1d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """Temporal convolution on (B, C, T) input."""
    out = backend.conv1d_forward(x.data, w.data, b.data, stride, pad)

    def back(g):
        return backend.conv1d_backward(x.data, w.data, stride, pad, g)

    return Tensor(out, _parents=(x, w, b), _backward=back)


def pad_reflect(x: Tensor, pad: int) -> Tensor:
    """Reflect-pad the trailing (time) axis; keeps constant signals constant
    at the borders, unlike zero padding."""
    if pad == 0:
        return x
    t = x.data.shape[-1]
    if pad >= t:
        raise ValueError("reflect pad must be smaller than the time length")
    left = x.data[..., 1 : pad + 1][..., ::-1]
    right = x.data[..., t - pad - 1 : t - 1][..., ::-1]
    out = np.concatenate([left, x.data, right], axis=-1)

    def back(g):
        gx = g[..., pad : pad + t].copy()
        gx[..., 1 : pad + 1] += g[..., :pad][..., ::-1]
        gx[..., t - pad - 1 : t - 1] += g[..., pad + t :][..., ::-1]
        return (gx,)

    return Tensor(out, _parents=(x,), _backward=back)


def instance_norm(x: Tensor, eps: float = 1e-5) -> Tensor:
    """Standardize each channel over the trailing (time) axis.

    Input (..., C, T); mean/variance are taken per channel per instance.
    """
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    out = xc * inv
    t = x.data.shape[-1]

    def back(g):
        g_mean = g.mean(axis=-1, keepdims=True)
        gx_corr = np.mean(g * xc, axis=-1, keepdims=True)
        gx = inv * (g - g_mean) - (inv ** 3) * gx_corr * xc
        return (gx.astype(x.dtype, copy=False),)

    return Tensor(out.astype(x.dtype, copy=False), _parents=(x,), _backward=back)


def upsample_nearest(x: Tensor, factor: int = 2) -> Tensor:
    """Repeat each timestep `factor` times along the trailing axis."""
    out = np.repeat(x.data, factor, axis=-1)

    def back(g):
        return (g.reshape(g.shape[:-1] + (x.data.shape[-1], factor)).sum(axis=-1),)

    return Tensor(out, _parents=(x,), _backward=back)


def max_over_time(x: Tensor) -> Tensor:
    """Global max pooling over the trailing axis: (B, C, T) -> (B, C)."""
    idx = np.argmax(x.data, axis=-1)
    out = np.take_along_axis(x.data, idx[..., None], axis=-1)[..., 0]

    def back(g):
        gx = np.zeros_like(x.data)
        np.put_along_axis(gx, idx[..., None], g[..., None], axis=-1)
        return (gx,)

    return Tensor(out, _parents=(x,), _backward=back)


def mean_over_time(x: Tensor) -> Tensor:
    """Temporal average pooling: (B, C, T) -> (B, C)."""
    t = x.data.shape[-1]
    out = x.data.mean(axis=-1)

    def back(g):
        return (np.broadcast_to(g[..., None] / t, x.data.shape).astype(x.dtype, copy=False),)

    return Tensor(out, _parents=(x,), _backward=back)


def fk(rot: Tensor, offsets: np.ndarray, parents: np.ndarray) -> Tensor:
    """Differentiable forward kinematics: (B, T, J, 4) -> (B, T, J, 3), root at origin."""
    pos, glob = backend.fk_forward(rot.data, offsets, parents)

    def back(g):
        return (backend.fk_backward(rot.data, offsets, parents, glob, g),)

    return Tensor(pos, _parents=(rot,), _backward=back)


def normalize_lastdim(x: Tensor, axis: int, eps: float = 1e-8) -> Tensor:
    """Scale vectors along `axis` to unit norm (epsilon-guarded)."""
    sq = sum_(mul(x, x), axis=axis, keepdims=True)
    norm = sqrt(add(sq, Tensor(np.asarray(eps, dtype=x.dtype))))
    return div(x, norm)


def norm_l2(x: Tensor, axis: int = -1, eps: float = 0.0) -> Tensor:
    """Euclidean norm along `axis` (no keepdims)."""
    sq = sum_(mul(x, x), axis=axis, keepdims=False)
    if eps:
        sq = add(sq, Tensor(np.asarray(eps, dtype=x.dtype)))
    return sqrt(sq)


def zero_grads(params: Sequence[Tensor]):
    for p in params:
        p.grad = None
