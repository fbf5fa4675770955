import numpy as np
import pytest

from mostyle import losses
from mostyle.autograd import Tensor
from mostyle.losses import LossWeights, TrainingDivergenceError
from mostyle.motion import RotationalMotion
from tests.conftest import numeric_grad, random_skeleton, random_unit_quats, rel_error


def _motion(rot):
    return RotationalMotion(
        rotations=rot, root_translation=np.zeros((rot.shape[0], 3)), fps=30.0
    )


# ---------------------------------------------------------------------------
# content consistency

def test_content_zero_at_identity(rng):
    skel = random_skeleton(rng, 4)
    rot = random_unit_quats(rng, (8, 4))
    assert losses.content_consistency(_motion(rot), _motion(rot), skel) == 0.0


def test_content_l1_arithmetic(rng):
    skel = random_skeleton(rng, 1)
    a = np.array([[[1.0, 0.0, 0.0, 0.0]]])
    b = np.array([[[0.9, 0.0, 0.0, 0.0]]])
    val = losses.content_consistency(_motion(a), _motion(b), skel, position_weight=0.0)
    assert abs(val - 0.1 / 4.0) < 1e-12  # mean over the 4 quaternion elements


def test_content_matches_elementwise_oracle(rng):
    skel = random_skeleton(rng, 5)
    a = random_unit_quats(rng, (6, 5))
    b = random_unit_quats(rng, (6, 5))
    lam = 0.7
    val = losses.content_consistency(_motion(a), _motion(b), skel, position_weight=lam)
    from mostyle import backend

    pa, _ = backend.fk_forward(a[None], skel.offsets, skel.parents)
    pb, _ = backend.fk_forward(b[None], skel.offsets, skel.parents)
    oracle = np.abs(a - b).mean() + lam * np.abs(pa - pb).mean()
    assert abs(val - oracle) < 1e-6


def test_content_shape_mismatch(rng):
    skel = random_skeleton(rng, 3)
    with pytest.raises(ValueError):
        losses.content_consistency(
            _motion(random_unit_quats(rng, (4, 3))), _motion(random_unit_quats(rng, (5, 3))), skel
        )


# ---------------------------------------------------------------------------
# adversarial / feature matching

def test_adversarial_perfect_d():
    assert losses.adversarial_d(1.0, 0.0) == 0.0


def test_adversarial_perfect_g():
    assert losses.adversarial_g(1.0) == 0.0


def test_adversarial_arithmetic():
    assert abs(losses.adversarial_d(0.5, 0.25) - 0.3125) < 1e-12


def test_feature_matching_zero_at_mean(rng):
    reals = rng.standard_normal((5, 7))
    assert losses.feature_matching(reals.mean(axis=0), reals) == 0.0


def test_feature_matching_single_vector(rng):
    a = rng.standard_normal(6)
    b = rng.standard_normal(6)
    assert abs(losses.feature_matching(a, b[None]) - np.abs(a - b).mean()) < 1e-12


def test_feature_matching_oracle(rng):
    fake = rng.standard_normal(9)
    reals = rng.standard_normal((4, 9))
    oracle = np.abs(fake - reals.mean(axis=0)).mean()
    assert abs(losses.feature_matching(fake, reals) - oracle) < 1e-12


def test_feature_matching_empty_set():
    with pytest.raises(ValueError):
        losses.feature_matching(np.ones(3), np.zeros((0, 3)))


# ---------------------------------------------------------------------------
# joint embedding / triplet

def test_joint_embedding_examples(rng):
    z = rng.standard_normal(8)
    assert losses.joint_embedding(z, z) == 0.0
    e = np.zeros(8)
    e[2] = 1.0
    assert abs(losses.joint_embedding(z, z + e) - 1.0) < 1e-12


def test_joint_embedding_oracle(rng):
    a = rng.standard_normal((5, 6))
    b = rng.standard_normal((5, 6))
    oracle = np.mean([np.sum((a[i] - b[i]) ** 2) for i in range(5)])
    assert abs(losses.joint_embedding(a, b) - oracle) < 1e-10


def test_joint_embedding_shape_mismatch():
    with pytest.raises(ValueError):
        losses.joint_embedding(np.ones(3), np.ones(4))


def test_triplet_examples():
    a = np.zeros(3)
    p = np.zeros(3)
    n = np.array([10.0, 0, 0])
    assert losses.triplet(a, p, n, margin=5.0) == 0.0
    p2 = np.array([3.0, 0, 0])
    n2 = np.array([0.0, 4.0, 0])
    assert abs(losses.triplet(a, p2, n2, margin=5.0) - 4.0) < 1e-12
    assert abs(losses.triplet(a, p2, p2, margin=5.0) - 5.0) < 1e-12


def test_triplet_rotation_invariance(rng):
    a, p, n = rng.standard_normal((3, 12))
    q, _ = np.linalg.qr(rng.standard_normal((12, 12)))
    before = losses.triplet(a, p, n)
    after = losses.triplet(q @ a, q @ p, q @ n)
    assert abs(before - after) < 1e-9


# ---------------------------------------------------------------------------
# total

def test_total_paper_weights():
    comps = {"con": 1.0, "adv": 1.0, "reg": 1.0, "joint": 1.0, "trip": 1.0}
    assert abs(losses.total(comps, LossWeights()) - 3.1) < 1e-12


def test_total_zero():
    comps = {"con": 0.0, "adv": 0.0, "reg": 0.0, "joint": 0.0, "trip": 0.0}
    assert losses.total(comps, LossWeights()) == 0.0


def test_total_adversarial_ablation():
    comps = {"con": 0.5, "adv": 9.0, "reg": 0.0, "joint": 0.2, "trip": 0.1}
    weights = LossWeights(adv=0.0)
    assert abs(losses.total(comps, weights) - (0.5 + 0.3 * 0.2 + 0.3 * 0.1)) < 1e-12


def test_total_divergence_error():
    with pytest.raises(TrainingDivergenceError) as err:
        losses.total({"con": float("nan")}, LossWeights())
    assert "con" in str(err.value)


def test_loss_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(adv=-0.1)


# ---------------------------------------------------------------------------
# gradient suite: every loss matches central finite differences

def test_content_consistency_gradient(rng):
    for _ in range(3):
        skel = random_skeleton(rng, 4)
        target = random_unit_quats(rng, (4, 4))[None]
        x0 = random_unit_quats(rng, (4, 4))[None]

        def f(v):
            return float(losses.content_consistency_t(Tensor(v), target, skel, 0.5).data)

        xt = Tensor(x0, requires_grad=True)
        losses.content_consistency_t(xt, target, skel, 0.5).backward()
        assert rel_error(xt.grad, numeric_grad(f, x0)) < 1e-4


def test_adversarial_gradients(rng):
    real = rng.standard_normal(6)
    fake = rng.standard_normal(6)

    def fd_d(v):
        return float(losses.adversarial_d_t(Tensor(v), Tensor(fake)).data)

    rt = Tensor(real, requires_grad=True)
    losses.adversarial_d_t(rt, Tensor(fake)).backward()
    assert rel_error(rt.grad, numeric_grad(fd_d, real)) < 1e-6

    def fd_g(v):
        return float(losses.adversarial_g_t(Tensor(v)).data)

    ft = Tensor(fake, requires_grad=True)
    losses.adversarial_g_t(ft).backward()
    assert rel_error(ft.grad, numeric_grad(fd_g, fake)) < 1e-6


def test_feature_matching_gradient(rng):
    real_mean = rng.standard_normal((3, 8))
    x0 = rng.standard_normal((3, 8))

    def f(v):
        return float(losses.feature_matching_t(Tensor(v), real_mean).data)

    xt = Tensor(x0, requires_grad=True)
    losses.feature_matching_t(xt, real_mean).backward()
    assert rel_error(xt.grad, numeric_grad(f, x0)) < 1e-6


def test_joint_embedding_gradient(rng):
    b = rng.standard_normal((4, 7))
    x0 = rng.standard_normal((4, 7))

    def f(v):
        return float(losses.joint_embedding_t(Tensor(v), Tensor(b)).data)

    xt = Tensor(x0, requires_grad=True)
    losses.joint_embedding_t(xt, Tensor(b)).backward()
    assert rel_error(xt.grad, numeric_grad(f, x0)) < 1e-6


def test_triplet_gradient(rng):
    p = rng.standard_normal((5, 6))
    n = rng.standard_normal((5, 6)) + 3.0
    x0 = rng.standard_normal((5, 6))

    def f(v):
        return float(losses.triplet_t(Tensor(v), Tensor(p), Tensor(n), margin=1.0).data)

    xt = Tensor(x0, requires_grad=True)
    losses.triplet_t(xt, Tensor(p), Tensor(n), margin=1.0).backward()
    assert rel_error(xt.grad, numeric_grad(f, x0)) < 1e-5
