import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mostyle import quat
from tests.conftest import random_unit_quats


def test_normalize_scales_to_unit():
    out = quat.normalize(np.array([2.0, 0.0, 0.0, 0.0]))
    assert np.allclose(out, [1, 0, 0, 0])


def test_normalize_identity_fixed_point():
    out = quat.normalize(np.array([1.0, 0.0, 0.0, 0.0]))
    assert np.allclose(out, [1, 0, 0, 0])
    assert abs(np.linalg.norm(out) - 1) < 1e-6


def test_normalize_degenerate_raises():
    with pytest.raises(quat.DegenerateQuaternionError):
        quat.normalize(np.array([0.0, 0.0, 0.0, 1e-15]))


def test_qmul_matches_matrix_product(rng):
    a = random_unit_quats(rng, (5,))
    b = random_unit_quats(rng, (5,))
    ab = quat.qmul(a, b)
    assert np.allclose(quat.to_matrix(ab), quat.to_matrix(a) @ quat.to_matrix(b), atol=1e-12)


def test_qrot_matches_matrix(rng):
    q = random_unit_quats(rng, (7,))
    v = rng.standard_normal((7, 3))
    rotated = quat.qrot(q, v)
    expected = np.einsum("nij,nj->ni", quat.to_matrix(q), v)
    assert np.allclose(rotated, expected, atol=1e-12)


def test_hemisphere_align_sign_flip():
    track = np.array([[1.0, 0, 0, 0], [-1.0, 0, 0, 0]])
    out = quat.hemisphere_align(track)
    assert np.allclose(out, [[1, 0, 0, 0], [1, 0, 0, 0]])


def test_hemisphere_align_constant_unchanged(rng):
    q = random_unit_quats(rng, ())
    track = np.tile(q, (6, 1))
    assert np.array_equal(quat.hemisphere_align(track), track)


def test_hemisphere_align_removes_injected_flips(rng):
    # smooth track: small incremental rotations
    steps = [quat.from_axis_angle(np.array([0, 1.0, 0]), 0.05 * i) for i in range(20)]
    track = np.stack(steps)
    flipped = track.copy()
    flip_at = rng.choice(20, size=6, replace=False)
    flipped[flip_at] *= -1.0
    aligned = quat.hemisphere_align(flipped)
    dots = np.sum(aligned[1:] * aligned[:-1], axis=-1)
    assert np.all(dots >= 0)
    # rotation matrices unchanged frame by frame
    assert np.allclose(quat.to_matrix(aligned), quat.to_matrix(track), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_hemisphere_align_properties(seed):
    rng = np.random.default_rng(seed)
    track = random_unit_quats(rng, (12,))
    out = quat.hemisphere_align(track)
    assert np.all(np.sum(out[1:] * out[:-1], axis=-1) >= 0)
    # each frame equals +/- the input elementwise
    sign = np.where(np.sum(out * track, axis=-1, keepdims=True) >= 0, 1.0, -1.0)
    assert np.array_equal(out, sign * track)
    assert np.allclose(quat.to_matrix(out), quat.to_matrix(track), atol=1e-12)


def test_from_euler_single_axis():
    q = quat.from_euler(np.array([90.0]), "Z")
    assert np.allclose(q, [np.cos(np.pi / 4), 0, 0, np.sin(np.pi / 4)])


def test_from_euler_order_composition(rng):
    angles = rng.uniform(-80, 80, size=3)
    for order in ("ZXY", "XYZ", "ZYX", "YZX"):
        q = quat.from_euler(angles, order)
        mats = {"X": quat.to_matrix(quat.from_euler(angles[:1] * 0 + angles[0:1], order[0]))}
        expected = np.eye(3)
        for i, ax in enumerate(order):
            expected = expected @ quat.to_matrix(quat.from_euler(np.array([angles[i]]), ax))
        assert np.allclose(quat.to_matrix(q), expected, atol=1e-12)


def test_euler_zyx_round_trip(rng):
    q = random_unit_quats(rng, (50,))
    angles = quat.to_euler_zyx(q)
    back = quat.from_euler(angles, "ZYX")
    assert np.allclose(quat.to_matrix(back), quat.to_matrix(q), atol=1e-9)


def test_slerp_endpoints_and_midpoint():
    qa = np.array([1.0, 0, 0, 0])
    qb = quat.from_axis_angle(np.array([0, 0, 1.0]), np.pi / 2)
    assert np.allclose(quat.slerp(qa, qb, 0.0), qa, atol=1e-12)
    assert np.allclose(quat.slerp(qa, qb, 1.0), qb, atol=1e-12)
    mid = quat.slerp(qa, qb, 0.5)
    assert np.allclose(mid, quat.from_axis_angle(np.array([0, 0, 1.0]), np.pi / 4), atol=1e-12)


def test_slerp_takes_shorter_arc():
    qa = np.array([1.0, 0, 0, 0])
    qb = -quat.from_axis_angle(np.array([0, 0, 1.0]), 0.3)
    mid = quat.slerp(qa, qb, 0.5)
    expected = quat.from_axis_angle(np.array([0, 0, 1.0]), 0.15)
    assert np.allclose(np.abs(np.dot(mid, expected)), 1.0, atol=1e-10)
