"""Translator networks: content encoder, 3D/2D style encoders, AdaIN
parameter MLP, decoder, and the multi-style discriminator.

Architecture defaults (configurable through Hyperparams):
  * content encoder: two stride-2 convs (kernel 4) then two residual blocks
    (kernel 3), instance norm after every conv, a final instance norm on the
    code; total temporal stride 4.
  * style encoders: three stride-2 convs (kernel 4) and global max pooling
    over time, so the style code length is independent of clip length.
  * decoder: two residual blocks whose convs are followed by AdaIN (four
    AdaIN layers total), then two nearest-upsample + conv stages and a final
    per-joint quaternion normalization.
  * discriminator: FK to root-free joint positions, three stride-2 convs,
    temporal mean pooling, one linear score head per style.

Batched graph functions carry a `_t` suffix and take/return autograd
Tensors; the plain-named wrappers take motion containers and numpy arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .motion import PositionalMotion2D, PositionalMotion3D, RotationalMotion
from .skeleton import SkeletonTopology

CHECKPOINT_FORMAT_VERSION = 1
NUM_ADAIN_LAYERS = 4  # two residual blocks, AdaIN after each conv


@dataclass(frozen=True)
class Hyperparams:
    num_joints: int
    style_labels: tuple[str, ...]
    content_widths: tuple[int, int] = (64, 96)
    style_widths: tuple[int, int, int] = (64, 96, 144)
    decoder_up_width: int = 64
    disc_widths: tuple[int, int, int] = (64, 96, 144)
    mlp_hidden: int = 192
    enc_kernel: int = 4
    res_kernel: int = 3
    slope: float = 0.2

    @property
    def content_dim(self) -> int:
        return self.content_widths[-1]

    @property
    def style_dim(self) -> int:
        return self.style_widths[-1]

    @property
    def num_styles(self) -> int:
        return len(self.style_labels)

    @property
    def content_stride(self) -> int:
        return 4

    @property
    def min_style_frames(self) -> int:
        return 16

    @property
    def adain_channels(self) -> tuple[int, ...]:
        return (self.content_dim,) * NUM_ADAIN_LAYERS

    def to_json_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json_dict(d: dict) -> "Hyperparams":
        d = dict(d)
        for key in ("style_labels", "content_widths", "style_widths", "disc_widths"):
            d[key] = tuple(d[key])
        return Hyperparams(**d)


@dataclass(frozen=True)
class AdaINParams:
    """Per-AdaIN-layer channel gains and biases; arrays are (C,) or (B, C)."""

    gains: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def flatten(self) -> np.ndarray:
        parts = []
        for g, b in zip(self.gains, self.biases):
            parts.append(np.asarray(g).ravel())
            parts.append(np.asarray(b).ravel())
        return np.concatenate(parts)


def _weight_specs(hp: Hyperparams) -> list[tuple[str, tuple[int, ...], int]]:
    """(name, shape, fan_in) for every trainable array."""
    j4 = 4 * hp.num_joints
    j3 = 3 * hp.num_joints
    j2 = 2 * hp.num_joints
    k, rk = hp.enc_kernel, hp.res_kernel
    cw0, cw1 = hp.content_widths
    specs: list[tuple[str, tuple[int, ...], int]] = []

    def conv(name, c_out, c_in, kk):
        specs.append((f"{name}.w", (c_out, c_in, kk), c_in * kk))
        specs.append((f"{name}.b", (c_out,), c_in * kk))

    def fc(name, d_in, d_out):
        specs.append((f"{name}.w", (d_in, d_out), d_in))
        specs.append((f"{name}.b", (d_out,), d_in))

    conv("ec.conv0", cw0, j4, k)
    conv("ec.conv1", cw1, cw0, k)
    for r in range(2):
        conv(f"ec.res{r}.conv0", cw1, cw1, rk)
        conv(f"ec.res{r}.conv1", cw1, cw1, rk)

    for prefix, c_in in (("es3d", j3), ("es2d", j2)):
        widths = (c_in,) + hp.style_widths
        for i in range(3):
            conv(f"{prefix}.conv{i}", widths[i + 1], widths[i], k)

    fc("mlp.fc0", hp.style_dim, hp.mlp_hidden)
    fc("mlp.fc1", hp.mlp_hidden, hp.mlp_hidden)
    for i, c in enumerate(hp.adain_channels):
        fc(f"mlp.head{i}", hp.mlp_hidden, 2 * c)

    for r in range(2):
        conv(f"dec.res{r}.conv0", hp.content_dim, hp.content_dim, rk)
        conv(f"dec.res{r}.conv1", hp.content_dim, hp.content_dim, rk)
    conv("dec.up0", hp.decoder_up_width, hp.content_dim, rk)
    conv("dec.up1", j4, hp.decoder_up_width, rk)

    widths = (j3,) + hp.disc_widths
    for i in range(3):
        conv(f"disc.conv{i}", widths[i + 1], widths[i], k)
    fc("disc.head", hp.disc_widths[-1], hp.num_styles)
    return specs


class ModelParams:
    """All trainable weights plus the hyperparameters and skeleton that
    reconstruct them. Read-only during inference; training is the single
    writer."""

    def __init__(
        self,
        hyper: Hyperparams,
        skeleton: SkeletonTopology,
        weights: dict[str, Tensor],
        seed: int,
        iteration: int = 0,
    ):
        self.hyper = hyper
        self.skeleton = skeleton
        self.weights = weights
        self.seed = seed
        self.iteration = iteration

    @staticmethod
    def init(
        hyper: Hyperparams,
        skeleton: SkeletonTopology,
        seed: int,
        dtype=np.float32,
    ) -> "ModelParams":
        """Fan-in-scaled uniform init; the decoder's final bias starts at the
        identity quaternion so raw outputs begin near unit norm."""
        if skeleton.num_joints != hyper.num_joints:
            raise ValueError("skeleton joint count does not match hyperparameters")
        rng = np.random.default_rng(seed)
        weights: dict[str, Tensor] = {}
        for name, shape, fan_in in _weight_specs(hyper):
            bound = 1.0 / np.sqrt(fan_in)
            arr = rng.uniform(-bound, bound, size=shape).astype(dtype)
            weights[name] = Tensor(arr, requires_grad=True)
        final_b = weights["dec.up1.b"].data
        final_b[:] = 0.0
        final_b[0::4] = 1.0  # w component of each joint quaternion
        return ModelParams(hyper, skeleton, weights, seed)

    def generator_weights(self) -> list[Tensor]:
        return [t for n, t in sorted(self.weights.items()) if not n.startswith("disc.")]

    def discriminator_weights(self) -> list[Tensor]:
        return [t for n, t in sorted(self.weights.items()) if n.startswith("disc.")]

    def all_weights(self) -> list[Tensor]:
        return [t for _, t in sorted(self.weights.items())]

    def astype(self, dtype) -> "ModelParams":
        weights = {
            n: Tensor(t.data.astype(dtype), requires_grad=True)
            for n, t in self.weights.items()
        }
        return ModelParams(self.hyper, self.skeleton, weights, self.seed, self.iteration)

    # checkpoint I/O -------------------------------------------------------
    def save(self, directory: str | Path):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        meta = {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "seed": self.seed,
            "iteration": self.iteration,
            "hyperparams": self.hyper.to_json_dict(),
            "skeleton": {
                "names": list(self.skeleton.names),
                "parents": self.skeleton.parents.tolist(),
                "offsets": self.skeleton.offsets.tolist(),
                "end_offsets": {
                    str(k): np.asarray(v).tolist()
                    for k, v in self.skeleton.end_offsets.items()
                },
                "left_foot": self.skeleton.left_foot,
                "right_foot": self.skeleton.right_foot,
            },
        }
        (directory / "metadata.json").write_text(json.dumps(meta, indent=2))
        np.savez(directory / "weights.npz", **{n: t.data for n, t in self.weights.items()})

    @staticmethod
    def load(directory: str | Path) -> "ModelParams":
        directory = Path(directory)
        meta = json.loads((directory / "metadata.json").read_text())
        if meta["format_version"] != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format {meta['format_version']}")
        hyper = Hyperparams.from_json_dict(meta["hyperparams"])
        sk = meta["skeleton"]
        skeleton = SkeletonTopology(
            names=tuple(sk["names"]),
            parents=np.asarray(sk["parents"], dtype=np.int64),
            offsets=np.asarray(sk["offsets"], dtype=np.float64),
            end_offsets={int(k): np.asarray(v) for k, v in sk["end_offsets"].items()},
            left_foot=sk["left_foot"],
            right_foot=sk["right_foot"],
        )
        with np.load(directory / "weights.npz") as data:
            arrays = {n: data[n] for n in data.files}
        expected = {name: shape for name, shape, _ in _weight_specs(hyper)}
        if set(arrays) != set(expected):
            missing = set(expected) - set(arrays)
            extra = set(arrays) - set(expected)
            raise ValueError(f"checkpoint weights mismatch: missing={missing}, extra={extra}")
        weights = {}
        for name, arr in arrays.items():
            if tuple(arr.shape) != tuple(expected[name]):
                raise ValueError(
                    f"checkpoint array {name} has shape {arr.shape}, expected {expected[name]}"
                )
            weights[name] = Tensor(arr, requires_grad=True)
        return ModelParams(hyper, skeleton, weights, meta["seed"], meta["iteration"])


# ---------------------------------------------------------------------------
# channel packing

def quats_to_channels(rot: np.ndarray) -> np.ndarray:
    """(T, J, 4) -> (4J, T)"""
    t, j, _ = rot.shape
    return rot.transpose(1, 2, 0).reshape(4 * j, t)


def positions_to_channels(pos: np.ndarray) -> np.ndarray:
    """(T, J, D) -> (DJ, T) for D in {2, 3}"""
    t, j, d = pos.shape
    return pos.transpose(1, 2, 0).reshape(d * j, t)


def channels_to_quats_t(x: Tensor, num_joints: int) -> Tensor:
    """(B, 4J, T) tensor -> (B, T, J, 4), graph op."""
    b, _, t = x.shape
    x = ag.reshape(x, (b, num_joints, 4, t))
    return ag.transpose(x, (0, 3, 1, 2))


def quats_to_channels_t(rot: Tensor) -> Tensor:
    """(B, T, J, 4) tensor -> (B, 4J, T), graph op."""
    b, t, j, _ = rot.shape
    x = ag.transpose(rot, (0, 2, 3, 1))
    return ag.reshape(x, (b, 4 * j, t))


def positions_to_channels_t(pos: Tensor) -> Tensor:
    """(B, T, J, D) tensor -> (B, DJ, T), graph op."""
    b, t, j, d = pos.shape
    x = ag.transpose(pos, (0, 2, 3, 1))
    return ag.reshape(x, (b, d * j, t))


# ---------------------------------------------------------------------------
# normalization primitives (spec-level, unbatched numpy API)

def instance_norm(features: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Per-channel standardization over time for a (C, T) feature map."""
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[1] < 2:
        raise ValueError("features must be (C, T) with T >= 2")
    return ag.instance_norm(Tensor(features), eps=eps).data


def adain(features: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Standardize each channel over time, then apply the per-channel affine
    (gain, bias). The same affine acts at every timestep."""
    features = np.asarray(features)
    gain = np.asarray(gain)
    bias = np.asarray(bias)
    if features.ndim != 2 or features.shape[1] < 2:
        raise ValueError("features must be (C, T) with T >= 2")
    if gain.shape != (features.shape[0],) or bias.shape != gain.shape:
        raise ValueError("gain/bias must be (C,) matching the channel count")
    normalized = ag.instance_norm(Tensor(features), eps=eps).data
    return gain[:, None] * normalized + bias[:, None]


def _adain_t(x: Tensor, gain: Tensor, bias: Tensor) -> Tensor:
    b, c, _ = x.shape
    xn = ag.instance_norm(x)
    g = ag.reshape(gain, (b, c, 1))
    bb = ag.reshape(bias, (b, c, 1))
    return ag.add(ag.mul(g, xn), bb)


# ---------------------------------------------------------------------------
# graph builders

def _w(mp: ModelParams, name: str) -> Tensor:
    return mp.weights[name]


def _conv_reflect(mp: ModelParams, name: str, x: Tensor, stride: int) -> Tensor:
    """Convolution with reflect padding; border behavior then commutes with
    per-channel affine input changes, which instance norm can strip exactly."""
    k = _w(mp, f"{name}.w").shape[-1]
    h = ag.pad_reflect(x, (k - 1) // 2)
    return ag.conv1d(h, _w(mp, f"{name}.w"), _w(mp, f"{name}.b"), stride=stride, pad=0)


def _conv_in_lrelu(mp: ModelParams, name: str, x: Tensor, stride: int) -> Tensor:
    hp = mp.hyper
    h = _conv_reflect(mp, name, x, stride)
    h = ag.instance_norm(h)
    return ag.leaky_relu(h, hp.slope)


def _res_block_in(mp: ModelParams, name: str, x: Tensor) -> Tensor:
    hp = mp.hyper
    h = _conv_reflect(mp, f"{name}.conv0", x, stride=1)
    h = ag.instance_norm(h)
    h = ag.leaky_relu(h, hp.slope)
    h = _conv_reflect(mp, f"{name}.conv1", h, stride=1)
    h = ag.instance_norm(h)
    return ag.add(x, h)


def encode_content_t(mp: ModelParams, x: Tensor, pre_norm_offset: np.ndarray | None = None) -> Tensor:
    """Content code from (B, 4J, T) channels; output (B, C, T/4).

    `pre_norm_offset` injects a per-channel constant before the final
    instance norm; it exists to let tests probe the norm's invariance.
    """
    hp = mp.hyper
    t = x.shape[-1]
    if t % hp.content_stride != 0 or t < 2 * hp.content_stride:
        raise ValueError(f"content clip length {t} must be a multiple of {hp.content_stride} and >= 8")
    h = _conv_in_lrelu(mp, "ec.conv0", x, stride=2)
    h = _conv_in_lrelu(mp, "ec.conv1", h, stride=2)
    h = _res_block_in(mp, "ec.res0", h)
    h = _res_block_in(mp, "ec.res1", h)
    if pre_norm_offset is not None:
        h = ag.add(h, Tensor(np.asarray(pre_norm_offset, dtype=h.dtype).reshape(1, -1, 1)))
    return ag.instance_norm(h)


def _encode_style_t(mp: ModelParams, prefix: str, x: Tensor) -> Tensor:
    hp = mp.hyper
    if x.shape[-1] < hp.min_style_frames:
        raise ValueError(
            f"style clip length {x.shape[-1]} below encoder receptive length {hp.min_style_frames}"
        )
    pad = (hp.enc_kernel - 1) // 2
    h = ag.conv1d(x, _w(mp, f"{prefix}.conv0.w"), _w(mp, f"{prefix}.conv0.b"), stride=2, pad=pad)
    h = ag.leaky_relu(h, hp.slope)
    h = ag.conv1d(h, _w(mp, f"{prefix}.conv1.w"), _w(mp, f"{prefix}.conv1.b"), stride=2, pad=pad)
    h = ag.leaky_relu(h, hp.slope)
    h = ag.conv1d(h, _w(mp, f"{prefix}.conv2.w"), _w(mp, f"{prefix}.conv2.b"), stride=2, pad=pad)
    return ag.max_over_time(h)


def encode_style3d_t(mp: ModelParams, x: Tensor) -> Tensor:
    """Style code from (B, 3J, T) position channels; output (B, D)."""
    return _encode_style_t(mp, "es3d", x)


def encode_style2d_t(mp: ModelParams, x: Tensor) -> Tensor:
    """Style code from (B, 2J, T) projected position channels; output (B, D)."""
    return _encode_style_t(mp, "es2d", x)


def style_to_adain_t(mp: ModelParams, z: Tensor) -> list[tuple[Tensor, Tensor]]:
    """Map a (B, D) style code to per-AdaIN-layer (gain, bias) pairs.

    Gains are emitted as 1 + raw head output so an untrained network starts
    near plain instance normalization.
    """
    hp = mp.hyper
    h = ag.leaky_relu(ag.linear(z, _w(mp, "mlp.fc0.w"), _w(mp, "mlp.fc0.b")), hp.slope)
    h = ag.leaky_relu(ag.linear(h, _w(mp, "mlp.fc1.w"), _w(mp, "mlp.fc1.b")), hp.slope)
    out = []
    for i, c in enumerate(hp.adain_channels):
        head = ag.linear(h, _w(mp, f"mlp.head{i}.w"), _w(mp, f"mlp.head{i}.b"))
        gain = ag.add(head[:, :c], Tensor(np.asarray(1.0, dtype=head.dtype)))
        bias = head[:, c:]
        out.append((gain, bias))
    return out


def _res_block_adain(
    mp: ModelParams,
    name: str,
    x: Tensor,
    ab: list[tuple[Tensor, Tensor]],
    tap: dict | None,
) -> Tensor:
    hp = mp.hyper
    h = _conv_reflect(mp, f"{name}.conv0", x, stride=1)
    h = _adain_t(h, *ab[0])
    if tap is not None:
        tap[f"{name}.adain0"] = h.data
    h = ag.leaky_relu(h, hp.slope)
    h = _conv_reflect(mp, f"{name}.conv1", h, stride=1)
    h = _adain_t(h, *ab[1])
    if tap is not None:
        tap[f"{name}.adain1"] = h.data
    return ag.add(x, h)


def decode_t(
    mp: ModelParams,
    z_c: Tensor,
    adain_params: list[tuple[Tensor, Tensor]],
    tap: dict | None = None,
) -> Tensor:
    """Decode a content code under AdaIN style parameters.

    z_c (B, C, Tc) -> unit quaternions (B, 4*Tc, J, 4). `tap`, when given,
    collects the post-AdaIN feature maps for analysis.
    """
    hp = mp.hyper
    if len(adain_params) != NUM_ADAIN_LAYERS:
        raise ValueError(f"expected {NUM_ADAIN_LAYERS} AdaIN parameter pairs")
    h = _res_block_adain(mp, "dec.res0", z_c, adain_params[:2], tap)
    h = _res_block_adain(mp, "dec.res1", h, adain_params[2:], tap)
    h = ag.upsample_nearest(h, 2)
    h = _conv_reflect(mp, "dec.up0", h, stride=1)
    h = ag.leaky_relu(h, hp.slope)
    h = ag.upsample_nearest(h, 2)
    h = _conv_reflect(mp, "dec.up1", h, stride=1)
    b, _, t = h.shape
    h = ag.reshape(h, (b, hp.num_joints, 4, t))
    h = ag.normalize_lastdim(h, axis=2)
    return ag.transpose(h, (0, 3, 1, 2))


def discriminate_t(mp: ModelParams, rot: Tensor) -> tuple[Tensor, Tensor]:
    """Scores (B, S) and trunk feature (B, F) for (B, T, J, 4) rotations.

    The trunk sees root-free joint positions from FK, so quaternion sign
    conventions cannot leak into the decision.
    """
    hp = mp.hyper
    skel = mp.skeleton
    pos = ag.fk(rot, skel.offsets, skel.parents)
    x = positions_to_channels_t(pos)
    pad = (hp.enc_kernel - 1) // 2
    h = ag.conv1d(x, _w(mp, "disc.conv0.w"), _w(mp, "disc.conv0.b"), stride=2, pad=pad)
    h = ag.leaky_relu(h, hp.slope)
    h = ag.conv1d(h, _w(mp, "disc.conv1.w"), _w(mp, "disc.conv1.b"), stride=2, pad=pad)
    h = ag.leaky_relu(h, hp.slope)
    h = ag.conv1d(h, _w(mp, "disc.conv2.w"), _w(mp, "disc.conv2.b"), stride=2, pad=pad)
    h = ag.leaky_relu(h, hp.slope)
    feat = ag.mean_over_time(h)
    scores = ag.linear(feat, _w(mp, "disc.head.w"), _w(mp, "disc.head.b"))
    return scores, feat


# ---------------------------------------------------------------------------
# motion-level wrappers

def encode_content(
    mp: ModelParams, motion: RotationalMotion, pre_norm_offset: np.ndarray | None = None
) -> np.ndarray:
    """Content code (C, T/4) of a root-normalized motion."""
    if motion.num_joints != mp.hyper.num_joints:
        raise ValueError("joint count mismatch")
    x = quats_to_channels(motion.rotations.astype(_weights_dtype(mp)))
    code = encode_content_t(mp, Tensor(x[None]), pre_norm_offset)
    return code.data[0]


def encode_style_3d(mp: ModelParams, motion: PositionalMotion3D) -> np.ndarray:
    """Fixed-length style code from 3D joint positions."""
    x = positions_to_channels(motion.positions.astype(_weights_dtype(mp)))
    return encode_style3d_t(mp, Tensor(x[None])).data[0]


def encode_style_2d(mp: ModelParams, motion: PositionalMotion2D) -> np.ndarray:
    """Fixed-length style code from 2D keypoint positions."""
    x = positions_to_channels(motion.positions.astype(_weights_dtype(mp)))
    return encode_style2d_t(mp, Tensor(x[None])).data[0]


def style_to_adain(mp: ModelParams, z_s: np.ndarray) -> AdaINParams:
    """AdaIN (gain, bias) pairs for a single style code."""
    z = Tensor(np.asarray(z_s, dtype=_weights_dtype(mp))[None])
    pairs = style_to_adain_t(mp, z)
    return AdaINParams(
        gains=tuple(g.data[0] for g, _ in pairs),
        biases=tuple(b.data[0] for _, b in pairs),
    )


def decode(
    mp: ModelParams,
    z_c: np.ndarray,
    adain_params: AdaINParams,
    fps: float,
    tap: dict | None = None,
) -> RotationalMotion:
    """Decode a content code + AdaIN parameters to a rotations-only motion
    (root translation zero; handled downstream)."""
    pairs = [
        (Tensor(np.asarray(g, dtype=_weights_dtype(mp))[None]),
         Tensor(np.asarray(b, dtype=_weights_dtype(mp))[None]))
        for g, b in zip(adain_params.gains, adain_params.biases)
    ]
    rot = decode_t(mp, Tensor(np.asarray(z_c, dtype=_weights_dtype(mp))[None]), pairs, tap)
    t = rot.data.shape[1]
    return RotationalMotion(
        rotations=rot.data[0].astype(np.float64),
        root_translation=np.zeros((t, 3)),
        fps=fps,
    )


def style_code(
    mp: ModelParams,
    style3d: PositionalMotion3D | None = None,
    style2d: PositionalMotion2D | None = None,
) -> np.ndarray:
    """Style code from either modality; the mean of both when both are given."""
    if style3d is None and style2d is None:
        raise ValueError("need a 3D or 2D style input")
    codes = []
    if style3d is not None:
        codes.append(encode_style_3d(mp, style3d))
    if style2d is not None:
        codes.append(encode_style_2d(mp, style2d))
    return np.mean(codes, axis=0)


def translate(
    mp: ModelParams,
    content: RotationalMotion,
    style3d: PositionalMotion3D | None = None,
    style2d: PositionalMotion2D | None = None,
    tap: dict | None = None,
) -> RotationalMotion:
    """Full translator: content encoder -> AdaIN MLP on the style code ->
    decoder. Content must be root-normalized."""
    z_c = encode_content(mp, content)
    z_s = style_code(mp, style3d, style2d)
    out = decode(mp, z_c, style_to_adain(mp, z_s), fps=content.fps, tap=tap)
    return RotationalMotion(
        rotations=out.rotations,
        root_translation=out.root_translation,
        fps=content.fps,
        style_label=None,
    )


def discriminate(mp: ModelParams, motion: RotationalMotion) -> tuple[np.ndarray, np.ndarray]:
    """Per-style scores (S,) and trunk feature for one motion window."""
    rot = Tensor(motion.rotations.astype(_weights_dtype(mp))[None])
    scores, feat = discriminate_t(mp, rot)
    return scores.data[0], feat.data[0]


def _weights_dtype(mp: ModelParams):
    return next(iter(mp.weights.values())).data.dtype
