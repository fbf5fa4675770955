"""Training objectives.

Every L1-style loss averages over elements rather than summing, so the
weights stay comparable across joint counts and clip lengths. Distances on
style codes (joint embedding, triplet) use the full Euclidean norm. Each
loss has a graph form (`*_t`, autograd Tensors, used by the training loop)
and a plain numpy wrapper with the same arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .motion import RotationalMotion
from .skeleton import SkeletonTopology


class TrainingDivergenceError(RuntimeError):
    """A loss component became non-finite."""


@dataclass(frozen=True)
class LossWeights:
    adv: float = 1.0
    reg: float = 0.5
    joint: float = 0.3
    trip: float = 0.3
    margin: float = 5.0
    content_position: float = 1.0

    def __post_init__(self):
        for name in ("adv", "reg", "joint", "trip", "margin", "content_position"):
            if getattr(self, name) < 0:
                raise ValueError(f"loss weight {name} must be non-negative")


# ---------------------------------------------------------------------------
# graph forms

def content_consistency_t(
    out_rot: Tensor,
    target_rot: np.ndarray,
    skel: SkeletonTopology,
    position_weight: float = 1.0,
) -> Tensor:
    """L1 between quaternion tracks plus L1 between their root-free FK
    positions; both (B, T, J, 4)."""
    if out_rot.shape != target_rot.shape:
        raise ValueError(f"shape mismatch: {out_rot.shape} vs {target_rot.shape}")
    diff = ag.add(out_rot, Tensor(-target_rot.astype(out_rot.dtype)))
    loss = ag.mean(ag.abs_(diff))
    if position_weight > 0:
        out_pos = ag.fk(out_rot, skel.offsets, skel.parents)
        tgt = Tensor(target_rot.astype(out_rot.dtype))
        tgt_pos = ag.fk(tgt, skel.offsets, skel.parents)
        pdiff = ag.add(out_pos, ag.neg(tgt_pos))
        loss = ag.add(loss, ag.mul(Tensor(np.asarray(position_weight, dtype=out_rot.dtype)),
                                   ag.mean(ag.abs_(pdiff))))
    return loss


def adversarial_d_t(real_scores: Tensor, fake_scores: Tensor) -> Tensor:
    """Least-squares discriminator loss on the target-class head outputs."""
    one = Tensor(np.asarray(1.0, dtype=real_scores.dtype))
    r = ag.add(real_scores, ag.neg(one))
    return ag.add(ag.mean(ag.mul(r, r)), ag.mean(ag.mul(fake_scores, fake_scores)))


def adversarial_g_t(fake_scores: Tensor) -> Tensor:
    """Least-squares generator loss: the target-class head should say real."""
    one = Tensor(np.asarray(1.0, dtype=fake_scores.dtype))
    d = ag.add(fake_scores, ag.neg(one))
    return ag.mean(ag.mul(d, d))


def feature_matching_t(fake_feature: Tensor, real_mean: np.ndarray) -> Tensor:
    """L1 (mean over elements) between fake trunk features and the class-mean
    real trunk features."""
    diff = ag.add(fake_feature, Tensor(-np.asarray(real_mean, dtype=fake_feature.dtype)))
    return ag.mean(ag.abs_(diff))


def joint_embedding_t(code3d: Tensor, code2d: Tensor) -> Tensor:
    """Mean (over rows) squared Euclidean distance between paired codes."""
    diff = ag.add(code3d, ag.neg(code2d))
    sq = ag.sum_(ag.mul(diff, diff), axis=-1)
    return ag.mean(sq)


def triplet_t(anchor: Tensor, positive: Tensor, negative: Tensor, margin: float = 5.0) -> Tensor:
    """Hinge on Euclidean style-code distances: [d(a,p) - d(a,n) + margin]+."""
    d_pos = ag.norm_l2(ag.add(anchor, ag.neg(positive)), axis=-1)
    d_neg = ag.norm_l2(ag.add(anchor, ag.neg(negative)), axis=-1)
    m = Tensor(np.asarray(margin, dtype=anchor.dtype))
    return ag.mean(ag.relu(ag.add(ag.add(d_pos, ag.neg(d_neg)), m)))


# ---------------------------------------------------------------------------
# numpy wrappers

def content_consistency(
    output: RotationalMotion,
    target: RotationalMotion,
    skel: SkeletonTopology,
    position_weight: float = 1.0,
) -> float:
    if output.rotations.shape != target.rotations.shape:
        raise ValueError("output and target motions must have identical shape")
    loss = content_consistency_t(
        Tensor(output.rotations[None]), target.rotations[None], skel, position_weight
    )
    return float(loss.data)


def adversarial_d(score_real, score_fake) -> float:
    r = np.asarray(score_real, dtype=np.float64)
    f = np.asarray(score_fake, dtype=np.float64)
    return float(np.mean((r - 1.0) ** 2) + np.mean(f ** 2))


def adversarial_g(score_fake) -> float:
    f = np.asarray(score_fake, dtype=np.float64)
    return float(np.mean((f - 1.0) ** 2))


def feature_matching(fake_feature: np.ndarray, real_features: np.ndarray) -> float:
    real = np.atleast_2d(np.asarray(real_features, dtype=np.float64))
    if real.shape[0] == 0:
        raise ValueError("need at least one real feature vector")
    return float(np.mean(np.abs(np.asarray(fake_feature) - real.mean(axis=0))))


def joint_embedding(code3d: np.ndarray, code2d: np.ndarray) -> float:
    a = np.asarray(code3d, dtype=np.float64)
    b = np.asarray(code2d, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("codes must have equal shape")
    sq = np.sum((a - b) ** 2, axis=-1)
    return float(np.mean(sq))


def triplet(anchor, positive, negative, margin: float = 5.0) -> float:
    a = np.asarray(anchor, dtype=np.float64)
    d_pos = np.linalg.norm(a - positive, axis=-1)
    d_neg = np.linalg.norm(a - negative, axis=-1)
    return float(np.mean(np.maximum(0.0, d_pos - d_neg + margin)))


def total(components: dict, weights: LossWeights) -> float:
    """Weighted combination; raises TrainingDivergenceError naming the first
    non-finite component."""
    for name, value in components.items():
        if not np.isfinite(value):
            raise TrainingDivergenceError(f"loss component {name!r} is non-finite: {value}")
    get = lambda k: float(components.get(k, 0.0))
    return (
        get("con")
        + weights.adv * get("adv")
        + weights.reg * get("reg")
        + weights.joint * get("joint")
        + weights.trip * get("trip")
    )
