import numpy as np
import pytest

from mostyle import nets
from mostyle.skeleton import SkeletonTopology


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = max(np.abs(numeric).max(), np.abs(analytic).max(), 1e-12)
    return float(np.abs(analytic - numeric).max() / denom)


def numeric_grad(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function over every element."""
    g = np.zeros_like(x, dtype=np.float64)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xp[idx] += eps
        xm = x.copy()
        xm[idx] -= eps
        g[idx] = (f(xp) - f(xm)) / (2.0 * eps)
    return g


def random_unit_quats(rng: np.random.Generator, shape) -> np.ndarray:
    q = rng.standard_normal(tuple(shape) + (4,))
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def random_skeleton(rng: np.random.Generator, num_joints: int) -> SkeletonTopology:
    """Random topologically-ordered tree with unit-scale offsets."""
    parents = np.full(num_joints, -1, dtype=np.int64)
    for j in range(1, num_joints):
        parents[j] = rng.integers(0, j)
    offsets = rng.standard_normal((num_joints, 3))
    offsets[0] = 0.0
    return SkeletonTopology(
        names=tuple(f"j{i}" for i in range(num_joints)),
        parents=parents,
        offsets=offsets,
    )


def tiny_hyper(num_joints: int = 4, labels=("a", "b")) -> nets.Hyperparams:
    return nets.Hyperparams(
        num_joints=num_joints,
        style_labels=tuple(labels),
        content_widths=(8, 12),
        style_widths=(8, 12, 16),
        decoder_up_width=8,
        disc_widths=(8, 12, 16),
        mlp_hidden=16,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_params(rng):
    hyper = tiny_hyper()
    skel = random_skeleton(rng, hyper.num_joints)
    return nets.ModelParams.init(hyper, skel, seed=7)
