"""Frequency-domain style-transfer baseline and the convolution/affine
equivalence identity.

The baseline moves style between signals by transplanting spectral
magnitude differences while keeping the input's phase. The equivalence
helper demonstrates that a convolution followed by a per-channel affine map
(the IN/AdaIN situation) is one convolution with rescaled kernel and bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quat
from .kinematics import forward_kinematics
from .motion import RotationalMotion
from .nets import positions_to_channels, quats_to_channels
from .skeleton import SkeletonTopology


@dataclass(frozen=True)
class SpectralPair:
    """Two per-channel signal arrays with similar content and different
    styles; shapes must match."""

    source: np.ndarray  # style to remove, (C, T)
    target: np.ndarray  # style to add, (C, T)

    def __post_init__(self):
        src = np.asarray(self.source, dtype=np.float64)
        tgt = np.asarray(self.target, dtype=np.float64)
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "target", tgt)
        if src.shape != tgt.shape or src.ndim != 2:
            raise ValueError("pair signals must both be (C, T) with equal shape")


def spectral_transfer(x: np.ndarray, pair: SpectralPair) -> np.ndarray:
    """Per channel: output magnitude = max(0, |x| + |target| - |source|),
    phase taken from x; inverse transform, real part returned.

    Bins where x vanishes keep phase 0. The imaginary residue of the inverse
    transform is checked to be negligible before it is dropped.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != pair.source.shape:
        raise ValueError(f"input shape {x.shape} != pair shape {pair.source.shape}")
    spec_x = np.fft.fft(x, axis=-1)
    mag = np.abs(spec_x) + np.abs(np.fft.fft(pair.target, axis=-1)) - np.abs(
        np.fft.fft(pair.source, axis=-1)
    )
    mag = np.maximum(mag, 0.0)
    phase = np.angle(spec_x)
    out = np.fft.ifft(mag * np.exp(1j * phase), axis=-1)
    residue = np.abs(out.imag).max() if out.size else 0.0
    if residue > 1e-9 * max(1.0, np.abs(out.real).max()):
        raise FloatingPointError(f"imaginary residue {residue} after inverse FFT")
    return out.real


def spectral_transfer_rotations(
    content: RotationalMotion, pair_source: RotationalMotion, pair_target: RotationalMotion
) -> RotationalMotion:
    """Rotation-channel mode: transfer on quaternion component channels, then
    renormalize and hemisphere-align. The content root track is kept."""
    pair = SpectralPair(
        source=quats_to_channels(pair_source.rotations),
        target=quats_to_channels(pair_target.rotations),
    )
    out = spectral_transfer(quats_to_channels(content.rotations), pair)
    t = content.num_frames
    j = content.num_joints
    rot = out.reshape(j, 4, t).transpose(2, 0, 1)
    rot = quat.normalize(rot)
    rot = np.stack([quat.hemisphere_align(rot[:, jj]) for jj in range(j)], axis=1)
    return RotationalMotion(
        rotations=rot,
        root_translation=content.root_translation.copy(),
        fps=content.fps,
        style_label=None,
    )


def spectral_transfer_positions(
    content: RotationalMotion,
    pair_source: RotationalMotion,
    pair_target: RotationalMotion,
    skel: SkeletonTopology,
) -> np.ndarray:
    """Position-channel mode: transfer on root-free FK coordinates; returns
    (T, J, 3) positions (not convertible back to rotations)."""
    def channels(m: RotationalMotion) -> np.ndarray:
        pos = forward_kinematics(skel, m, include_root_translation=False)
        return positions_to_channels(pos.positions)

    pair = SpectralPair(source=channels(pair_source), target=channels(pair_target))
    out = spectral_transfer(channels(content), pair)
    t = content.num_frames
    return out.reshape(skel.num_joints, 3, t).transpose(2, 0, 1)


def affine_conv_equivalence(
    x: np.ndarray, kernel: np.ndarray, bias: float, beta: float, gamma: float
) -> tuple[np.ndarray, np.ndarray]:
    """Return (beta * (x * k + b) + gamma, x * (beta k) + (beta b + gamma)).

    The two sides are algebraically identical: a temporally invariant affine
    map after a convolution is just a convolution with rescaled weights.
    """
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    lhs = beta * (np.convolve(x, kernel, mode="same") + bias) + gamma
    rhs = np.convolve(x, beta * kernel, mode="same") + (beta * bias + gamma)
    return lhs, rhs
