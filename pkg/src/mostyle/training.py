"""Unpaired training loop.

Each iteration samples a batch of window tuples (content m^s, same-style
n^s, cross-style n^t, triplet extras x^t / w^u), runs one discriminator
update followed by one generator update, and logs every loss component.
Style inputs are dual-encoded: the 3D code is averaged with the mean code
of five random weak-perspective projections, which is what ties the 2D and
3D style spaces together.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import autograd as ag
from . import camera, losses, nets
from .autograd import Tensor
from .dataio import MotionDataset
from .losses import LossWeights
from .motion import PositionalMotion3D
from .nets import Hyperparams, ModelParams

METRIC_COLUMNS = ("iteration", "L_con", "L_adv_g", "L_adv_d", "L_reg", "L_joint", "L_trip", "total")


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 1000
    batch_size: int = 8
    lr_g: float = 1e-4
    lr_d: float = 1e-4
    betas: tuple[float, float] = (0.5, 0.999)
    weights: LossWeights = field(default_factory=LossWeights)
    cameras: int = 5
    seed: int = 0
    checkpoint_every: int = 0  # 0 = only final
    p_self: float = 0.2
    content_position_weight: float = 1.0

    def __post_init__(self):
        if self.iterations <= 0 or self.batch_size <= 0:
            raise ValueError("iterations and batch size must be positive")
        if self.lr_g <= 0 or self.lr_d <= 0:
            raise ValueError("learning rates must be positive")
        if not 0 <= self.p_self <= 1:
            raise ValueError("p_self must lie in [0, 1]")


@dataclass(frozen=True)
class Batch:
    """Window indices into the dataset; labels refer to dataset.label_names."""

    idx_m: np.ndarray
    idx_ns: np.ndarray
    idx_nt: np.ndarray
    idx_x: np.ndarray
    idx_w: np.ndarray
    style_s: np.ndarray
    style_t: np.ndarray


class Adam:
    """Standard Adam with bias correction; one instance per parameter group."""

    def __init__(self, params: list[Tensor], lr: float, betas: tuple[float, float], eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]

    def step(self):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[i] / b1t
            v_hat = self.v[i] / b2t
            p.data = (p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.data.dtype)


def validate_dataset(dataset: MotionDataset):
    """Startup configuration checks for training."""
    counts = dataset.label_counts()
    thin = [name for name, c in counts.items() if c < 2]
    if thin:
        raise ValueError(f"every style needs at least 2 windows; too few for: {thin}")
    if len(counts) < 2:
        raise ValueError("training needs at least 2 style labels")


def sample_batch(dataset: MotionDataset, rng: np.random.Generator, config: TrainConfig) -> Batch:
    """Draw one batch of window tuples.

    Style labels are drawn uniformly (so marginals are uniform over styles
    regardless of dataset balance); windows uniformly within a style. With
    probability p_self the same-style pair is the identical window, which
    exercises the pure-reconstruction case of the content loss.
    """
    num_styles = len(dataset.label_names)
    pools = [np.flatnonzero(dataset.labels == s) for s in range(num_styles)]
    b = config.batch_size
    idx_m = np.empty(b, dtype=np.int64)
    idx_ns = np.empty(b, dtype=np.int64)
    idx_nt = np.empty(b, dtype=np.int64)
    idx_x = np.empty(b, dtype=np.int64)
    idx_w = np.empty(b, dtype=np.int64)
    style_s = np.empty(b, dtype=np.int64)
    style_t = np.empty(b, dtype=np.int64)
    for i in range(b):
        s = int(rng.integers(num_styles))
        t = int(rng.integers(num_styles - 1))
        if t >= s:
            t += 1
        style_s[i] = s
        style_t[i] = t
        idx_m[i] = rng.choice(pools[s])
        idx_ns[i] = idx_m[i] if rng.random() < config.p_self else rng.choice(pools[s])
        idx_nt[i] = rng.choice(pools[t])
        x = rng.choice(pools[t])
        if len(pools[t]) > 1:
            while x == idx_nt[i]:
                x = rng.choice(pools[t])
        idx_x[i] = x
        u = int(rng.integers(num_styles - 1))
        if u >= t:
            u += 1
        idx_w[i] = rng.choice(pools[u])
    return Batch(idx_m, idx_ns, idx_nt, idx_x, idx_w, style_s, style_t)


class TrainerState:
    def __init__(self, params: ModelParams, config: TrainConfig):
        self.params = params
        self.config = config
        self.opt_g = Adam(params.generator_weights(), config.lr_g, config.betas)
        self.opt_d = Adam(params.discriminator_weights(), config.lr_d, config.betas)
        self.rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
        self.iteration = 0


def _project_clip(
    positions: np.ndarray, cam: camera.CameraParams, landmarks: camera.BodyLandmarks, fps: float
) -> np.ndarray:
    clip = PositionalMotion3D(positions=positions, fps=fps)
    return camera.project(clip, cam, landmarks).positions


def _style_channels(positions: np.ndarray) -> np.ndarray:
    """(N, T, J, D) -> (N, DJ, T) in float32."""
    n, t, j, d = positions.shape
    return positions.transpose(0, 2, 3, 1).reshape(n, d * j, t).astype(np.float32)


def _encode_2d_means(
    mp: ModelParams,
    positions: np.ndarray,
    cams_per_clip: list[list[camera.CameraParams]],
    dataset: MotionDataset,
) -> tuple[Tensor, Tensor]:
    """Encode every projection of every clip in one batch.

    Returns (mean codes (N, D), per-projection codes (N*K, D)); rows of the
    latter are grouped by clip.
    """
    n = positions.shape[0]
    k = len(cams_per_clip[0])
    projected = [
        _project_clip(positions[i], cam, dataset.landmarks, dataset.fps)
        for i in range(n)
        for cam in cams_per_clip[i]
    ]
    x = Tensor(_style_channels(np.stack(projected)))
    codes = nets.encode_style2d_t(mp, x)  # (N*K, D)
    d = codes.shape[-1]
    grouped = ag.reshape(codes, (n, k, d))
    mean = ag.mul(ag.sum_(grouped, axis=1), Tensor(np.float32(1.0 / k)))
    return mean, codes


def train_step(state: TrainerState, batch: Batch, dataset: MotionDataset) -> dict:
    """One discriminator update followed by one generator update."""
    mp = state.params
    config = state.config
    w = config.weights
    skel = dataset.skeleton
    b = len(batch.idx_m)
    adv_on = w.adv > 0

    m_q = dataset.quats[batch.idx_m].astype(np.float32)
    m_pos = dataset.positions[batch.idx_m].astype(np.float32)
    nt_q = dataset.quats[batch.idx_nt].astype(np.float32)

    # 3D style codes for n^s, n^t, x^t, w^u in one encoder pass
    stacked_pos = np.concatenate(
        [
            dataset.positions[batch.idx_ns],
            dataset.positions[batch.idx_nt],
            dataset.positions[batch.idx_x],
            dataset.positions[batch.idx_w],
        ]
    )
    codes3d = nets.encode_style3d_t(mp, Tensor(_style_channels(stacked_pos)))
    z_ns3, z_nt3, z_x3, z_w3 = (codes3d[i * b : (i + 1) * b] for i in range(4))

    # 2D codes of five projections per style input; the triplet inputs get
    # dual-encoded too, since the working style code is the modality average
    cams = [camera.sample_cameras(state.rng, config.cameras) for _ in range(4 * b)]
    all_pos = np.concatenate(
        [
            dataset.positions[batch.idx_ns],
            dataset.positions[batch.idx_nt],
            dataset.positions[batch.idx_x],
            dataset.positions[batch.idx_w],
        ]
    )
    z2_mean, z2_all = _encode_2d_means(mp, all_pos, cams, dataset)
    z_ns2_mean, z_nt2_mean = z2_mean[:b], z2_mean[b : 2 * b]
    z_x2_mean, z_w2_mean = z2_mean[2 * b : 3 * b], z2_mean[3 * b :]
    k = config.cameras
    z_nt2_all = z2_all[b * k : 2 * b * k]

    half = Tensor(np.float32(0.5))
    z_s_same = ag.mul(ag.add(z_ns3, z_ns2_mean), half)
    z_s_cross = ag.mul(ag.add(z_nt3, z_nt2_mean), half)
    z_trip_a = z_s_cross
    z_trip_p = ag.mul(ag.add(z_x3, z_x2_mean), half)
    z_trip_n = ag.mul(ag.add(z_w3, z_w2_mean), half)

    # shared content code, two decodes in one batched pass
    z_c = nets.encode_content_t(mp, Tensor(nets.quats_to_channels(m_q[0])[None]) if b == 1 else Tensor(
        _content_channels(m_q)))
    z_c2 = ag.concat([z_c, z_c], axis=0)
    ab_same = nets.style_to_adain_t(mp, z_s_same)
    ab_cross = nets.style_to_adain_t(mp, z_s_cross)
    ab_both = [
        (ag.concat([gs, gc], axis=0), ag.concat([bs, bc], axis=0))
        for (gs, bs), (gc, bc) in zip(ab_same, ab_cross)
    ]
    decoded = nets.decode_t(mp, z_c2, ab_both)  # (2B, T, J, 4)
    out_same = decoded[:b]
    out_cross = decoded[b:]

    # --- discriminator update -------------------------------------------
    metrics = {name: 0.0 for name in METRIC_COLUMNS}
    if adv_on:
        fake_const = Tensor(out_cross.data)
        d_in = ag.concat([Tensor(nt_q), fake_const], axis=0)
        scores, _ = nets.discriminate_t(mp, d_in)
        sel = (np.arange(2 * b), np.concatenate([batch.style_t, batch.style_t]))
        picked = scores[sel]
        d_loss = losses.adversarial_d_t(picked[:b], picked[b:])
        ag.zero_grads(mp.all_weights())
        d_loss.backward()
        state.opt_d.step()
        metrics["L_adv_d"] = float(d_loss.data)

    # --- generator update -------------------------------------------------
    g_terms = {}
    con = losses.content_consistency_t(
        out_same, m_q, skel, position_weight=config.content_position_weight
    )
    g_terms["con"] = con
    total_t = con

    if adv_on:
        real_refs = np.concatenate([nt_q, dataset.quats[batch.idx_x].astype(np.float32)])
        d_in_g = ag.concat([out_cross, Tensor(real_refs)], axis=0)
        scores_g, feats_g = nets.discriminate_t(mp, d_in_g)
        fake_scores = scores_g[(np.arange(b), batch.style_t)]
        adv_g = losses.adversarial_g_t(fake_scores)
        g_terms["adv"] = adv_g
        total_t = ag.add(total_t, ag.mul(Tensor(np.float32(w.adv)), adv_g))
        if w.reg > 0:
            real_mean = 0.5 * (feats_g.data[b : 2 * b] + feats_g.data[2 * b :])
            reg = losses.feature_matching_t(feats_g[:b], real_mean)
            g_terms["reg"] = reg
            total_t = ag.add(total_t, ag.mul(Tensor(np.float32(w.reg)), reg))

    if w.joint > 0:
        anchor3d = ag.reshape(z_nt3, (b, 1, z_nt3.shape[-1]))
        tiled = ag.concat([anchor3d] * k, axis=1)
        joint = losses.joint_embedding_t(
            ag.reshape(tiled, (b * k, z_nt3.shape[-1])), z_nt2_all
        )
        g_terms["joint"] = joint
        total_t = ag.add(total_t, ag.mul(Tensor(np.float32(w.joint)), joint))

    if w.trip > 0:
        trip = losses.triplet_t(z_trip_a, z_trip_p, z_trip_n, margin=w.margin)
        g_terms["trip"] = trip
        total_t = ag.add(total_t, ag.mul(Tensor(np.float32(w.trip)), trip))

    ag.zero_grads(mp.all_weights())
    total_t.backward()
    state.opt_g.step()

    components = {name: float(t.data) for name, t in g_terms.items()}
    metrics["L_con"] = components.get("con", 0.0)
    metrics["L_adv_g"] = components.get("adv", 0.0)
    metrics["L_reg"] = components.get("reg", 0.0)
    metrics["L_joint"] = components.get("joint", 0.0)
    metrics["L_trip"] = components.get("trip", 0.0)
    if adv_on:
        components["adv_d"] = metrics["L_adv_d"]
    metrics["total"] = losses.total(components, w)
    metrics["iteration"] = state.iteration
    return metrics


def _content_channels(quats: np.ndarray) -> np.ndarray:
    """(B, T, J, 4) -> (B, 4J, T) float32."""
    n, t, j, _ = quats.shape
    return quats.transpose(0, 2, 3, 1).reshape(n, 4 * j, t).astype(np.float32)


def write_metrics_csv(path: str | Path, rows: list[dict]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        for row in rows:
            writer.writerow([row["iteration"]] + [f"{row[c]:.8g}" for c in METRIC_COLUMNS[1:]])


def fit(
    dataset: MotionDataset,
    config: TrainConfig,
    hyper: Hyperparams | None = None,
    out_dir: str | Path | None = None,
    log_every: int = 0,
) -> tuple[ModelParams, list[dict]]:
    """Train from scratch; returns the final parameters and the metric log.

    Writes checkpoints under out_dir at the configured cadence (plus a final
    one) and metrics.csv alongside, when out_dir is given.
    """
    validate_dataset(dataset)
    if hyper is None:
        hyper = Hyperparams(
            num_joints=dataset.skeleton.num_joints, style_labels=dataset.label_names
        )
    if tuple(hyper.style_labels) != tuple(dataset.label_names):
        raise ValueError("hyperparameter style labels must match the dataset's")
    init_seed = int(np.random.SeedSequence(config.seed).spawn(2)[1].generate_state(1)[0])
    params = ModelParams.init(hyper, dataset.skeleton, seed=init_seed)
    state = TrainerState(params, config)
    rows: list[dict] = []
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    for it in range(config.iterations):
        state.iteration = it
        batch = sample_batch(dataset, state.rng, config)
        metrics = train_step(state, batch, dataset)
        rows.append(metrics)
        if log_every and (it % log_every == 0 or it == config.iterations - 1):
            print(
                f"iter {it}: con={metrics['L_con']:.4f} adv_g={metrics['L_adv_g']:.4f} "
                f"adv_d={metrics['L_adv_d']:.4f} reg={metrics['L_reg']:.4f} "
                f"joint={metrics['L_joint']:.4f} trip={metrics['L_trip']:.4f}"
            )
        if out_dir is not None and config.checkpoint_every and (it + 1) % config.checkpoint_every == 0:
            params.iteration = it + 1
            params.save(out_dir / f"checkpoint_{it + 1:06d}")
    params.iteration = config.iterations
    if out_dir is not None:
        params.save(out_dir / "checkpoint_final")
        write_metrics_csv(out_dir / "metrics.csv", rows)
    return params, rows
