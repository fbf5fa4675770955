import numpy as np
import pytest

from mostyle import quat, toydata
from mostyle.spectral import (
    SpectralPair,
    affine_conv_equivalence,
    spectral_transfer,
    spectral_transfer_positions,
    spectral_transfer_rotations,
)


def naive_dft(x: np.ndarray) -> np.ndarray:
    """O(T^2) DFT, one channel."""
    t = len(x)
    k = np.arange(t)
    basis = np.exp(-2j * np.pi * np.outer(k, k) / t)
    return basis @ x


def naive_spectral_transfer(x, y_s, y_t):
    out = np.empty_like(x)
    t = x.shape[1]
    k = np.arange(t)
    inv_basis = np.exp(2j * np.pi * np.outer(k, k) / t) / t
    for c in range(x.shape[0]):
        spec = naive_dft(x[c])
        mag = np.maximum(np.abs(spec) + np.abs(naive_dft(y_t[c])) - np.abs(naive_dft(y_s[c])), 0.0)
        phase = np.angle(spec)
        out[c] = (inv_basis @ (mag * np.exp(1j * phase))).real
    return out


def test_identity_when_pair_equal(rng):
    x = rng.standard_normal((4, 32))
    y = rng.standard_normal((4, 32))
    out = spectral_transfer(x, SpectralPair(source=y, target=y))
    assert np.abs(out - x).max() < 1e-6


def test_zero_input_magnitude_rule(rng):
    t = 16
    y_s = rng.standard_normal((2, t)) * 0.1
    y_t = y_s + np.abs(rng.standard_normal((2, t))) + 1.0  # |Y_t| >= |Y_s| not guaranteed per bin
    x = np.zeros((2, t))
    out = spectral_transfer(x, SpectralPair(source=y_s, target=y_t))
    # zero phase everywhere: spectrum is the clamped magnitude difference
    expected_mag = np.maximum(
        np.abs(np.fft.fft(y_t, axis=-1)) - np.abs(np.fft.fft(y_s, axis=-1)), 0.0
    )
    spec = np.fft.fft(out, axis=-1)
    assert np.abs(np.abs(spec) - expected_mag).max() < 1e-9


def test_matches_naive_dft_oracle(rng):
    for t in (8, 16, 33, 64):
        x = rng.standard_normal((3, t))
        y_s = rng.standard_normal((3, t))
        y_t = rng.standard_normal((3, t))
        ours = spectral_transfer(x, SpectralPair(source=y_s, target=y_t))
        oracle = naive_spectral_transfer(x, y_s, y_t)
        assert np.abs(ours - oracle).max() < 1e-6


def test_output_is_real(rng):
    x = rng.standard_normal((5, 24))
    pair = SpectralPair(source=rng.standard_normal((5, 24)), target=rng.standard_normal((5, 24)))
    out = spectral_transfer(x, pair)
    assert out.dtype == np.float64


def test_length_mismatch():
    with pytest.raises(ValueError):
        spectral_transfer(np.zeros((2, 8)), SpectralPair(source=np.zeros((2, 9)), target=np.zeros((2, 9))))
    with pytest.raises(ValueError):
        SpectralPair(source=np.zeros((2, 8)), target=np.zeros((2, 9)))


def test_rotation_mode_keeps_root_and_unit_norm(rng):
    content = toydata.make_gait(
        toydata.TOY_STYLES[0], toydata.GaitContent.sample(np.random.default_rng(0)), frames=32
    )
    y_s = toydata.make_gait(
        toydata.TOY_STYLES[0], toydata.GaitContent.sample(np.random.default_rng(1)), frames=32
    )
    y_t = toydata.make_gait(
        toydata.TOY_STYLES[1], toydata.GaitContent.sample(np.random.default_rng(2)), frames=32
    )
    out = spectral_transfer_rotations(content, y_s, y_t)
    assert out.num_frames == 32
    assert np.allclose(np.linalg.norm(out.rotations, axis=-1), 1.0, atol=1e-9)
    assert np.array_equal(out.root_translation, content.root_translation)
    dots = np.sum(out.rotations[1:] * out.rotations[:-1], axis=-1)
    assert dots.min() >= 0  # hemisphere-aligned


def test_rotation_mode_identity_pair(rng):
    content = toydata.make_gait(
        toydata.TOY_STYLES[0], toydata.GaitContent.sample(np.random.default_rng(3)), frames=32
    )
    same = spectral_transfer_rotations(content, content, content)
    assert (
        np.abs(quat.to_matrix(same.rotations) - quat.to_matrix(content.rotations)).max() < 1e-6
    )


def test_position_mode_shape():
    skel = toydata.toy_skeleton()
    rng = np.random.default_rng(4)
    clips = [
        toydata.make_gait(toydata.TOY_STYLES[i % 4], toydata.GaitContent.sample(rng), frames=32)
        for i in range(3)
    ]
    out = spectral_transfer_positions(clips[0], clips[1], clips[2], skel)
    assert out.shape == (32, 8, 3)


def test_affine_conv_equivalence_random(rng):
    x = rng.standard_normal(40)
    k = rng.standard_normal(5)
    lhs, rhs = affine_conv_equivalence(x, k, bias=0.7, beta=1.3, gamma=-0.2)
    assert np.abs(lhs - rhs).max() < 1e-6


def test_affine_conv_equivalence_beta_zero(rng):
    x = rng.standard_normal(16)
    k = rng.standard_normal(3)
    lhs, rhs = affine_conv_equivalence(x, k, bias=2.0, beta=0.0, gamma=0.5)
    assert np.allclose(lhs, 0.5) and np.allclose(rhs, 0.5)


def test_affine_conv_equivalence_plain_conv(rng):
    x = rng.standard_normal(16)
    k = rng.standard_normal(3)
    lhs, rhs = affine_conv_equivalence(x, k, bias=0.0, beta=1.0, gamma=0.0)
    expected = np.convolve(x, k, mode="same")
    assert np.allclose(lhs, expected) and np.allclose(rhs, expected)
