"""Kernel backend selection.

The hot kernels (temporal convolution, forward kinematics) exist twice:
numba-jitted loops and a pure-numpy fallback. MSK_BACKEND selects the
active set at import:

  * "auto" (default): numba for the FK scan, numpy/BLAS for convolution —
    the faster side of each per benchmarks/bench_backends.py.
  * "numba": jitted kernels throughout.
  * "numpy": pure-numpy fallback throughout.

`use()` switches at runtime, which the cross-backend tests and the
benchmark rely on. Results are deterministic within a backend; across
backends they agree to floating-point tolerance only (different summation
orders).
"""

from __future__ import annotations

import os
import warnings
from types import SimpleNamespace

from . import _kernels_numpy

_BACKENDS: dict[str, object] = {"numpy": _kernels_numpy}

try:
    from . import _kernels_numba

    _BACKENDS["numba"] = _kernels_numba
    _BACKENDS["auto"] = SimpleNamespace(
        NAME="auto",
        conv1d_forward=_kernels_numpy.conv1d_forward,
        conv1d_backward=_kernels_numpy.conv1d_backward,
        fk_forward=_kernels_numba.fk_forward,
        fk_backward=_kernels_numba.fk_backward,
    )
    _DEFAULT = "auto"
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable without it
    _DEFAULT = "numpy"

_active = None


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def use(name: str):
    """Select the kernel backend by name; returns the kernel module."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = _BACKENDS[name]
    return _active


def active():
    """The currently selected kernel module."""
    global _active
    if _active is None:
        requested = os.environ.get("MSK_BACKEND", _DEFAULT).strip().lower()
        if requested not in _BACKENDS:
            warnings.warn(
                f"MSK_BACKEND={requested!r} not available, falling back to {_DEFAULT!r}"
            )
            requested = _DEFAULT
        _active = _BACKENDS[requested]
    return _active


def conv1d_forward(x, w, b, stride, pad):
    return active().conv1d_forward(x, w, b, stride, pad)


def conv1d_backward(x, w, stride, pad, g_out):
    return active().conv1d_backward(x, w, stride, pad, g_out)


def fk_forward(rot, offsets, parents):
    return active().fk_forward(rot, offsets, parents)


def fk_backward(rot, offsets, parents, glob, g_pos):
    return active().fk_backward(rot, offsets, parents, glob, g_pos)
