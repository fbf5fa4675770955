"""Procedural gait generator: a small labeled corpus for experiments and
tests.

Four styles over one 8-joint biped (pelvis, chest, two hip-knee-ankle
legs). Styles differ in swing amplitude, posture offset and cadence;
content varies per window through random phase, base frequency, amplitude
jitter and a waveform-mix parameter, so style labels are not recoverable
from timing alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bvh, kinematics
from .camera import BodyLandmarks
from .dataio import ClipWindow, MotionDataset
from .motion import RotationalMotion, root_normalize
from .quat import from_euler
from .skeleton import SkeletonTopology

FPS = 30.0

JOINT_NAMES = ("pelvis", "chest", "lhip", "lknee", "lankle", "rhip", "rknee", "rankle")
PELVIS, CHEST, LHIP, LKNEE, LANKLE, RHIP, RKNEE, RANKLE = range(8)


def toy_skeleton() -> SkeletonTopology:
    parents = np.array([-1, 0, 0, 2, 3, 0, 5, 6], dtype=np.int64)
    offsets = np.array(
        [
            [0.0, 0.0, 0.0],
            [0.0, 0.5, 0.0],
            [-0.12, -0.05, 0.0],
            [0.0, -0.45, 0.0],
            [0.0, -0.45, 0.0],
            [0.12, -0.05, 0.0],
            [0.0, -0.45, 0.0],
            [0.0, -0.45, 0.0],
        ]
    )
    end_offsets = {
        CHEST: np.array([0.0, 0.25, 0.0]),
        LANKLE: np.array([0.0, -0.05, 0.12]),
        RANKLE: np.array([0.0, -0.05, 0.12]),
    }
    return SkeletonTopology(
        names=JOINT_NAMES,
        parents=parents,
        offsets=offsets,
        end_offsets=end_offsets,
        left_foot=LANKLE,
        right_foot=RANKLE,
    )


def toy_landmarks() -> BodyLandmarks:
    # no arms on this rig: the hip pair stands in for the shoulders
    return BodyLandmarks(left_shoulder=LHIP, right_shoulder=RHIP, left_hip=LHIP, right_hip=RHIP)


@dataclass(frozen=True)
class StyleDef:
    name: str
    amplitude: float = 1.0
    lean: float = 0.0  # radians of forward pitch on chest and hips
    cadence: float = 1.0
    sway: float = 1.0  # lateral roll multiplier


TOY_STYLES = (
    StyleDef("neutral"),
    StyleDef("exaggerated", amplitude=1.8),
    StyleDef("hunched", amplitude=0.8, lean=0.35, sway=1.8),
    StyleDef("hurried", amplitude=0.62, cadence=1.25),
)

NOISE_STD = 0.03  # radians of smooth per-angle content noise


@dataclass(frozen=True)
class GaitContent:
    """Per-window content draw: what varies within a style."""

    phase: float
    frequency: float  # Hz before the style cadence multiplier
    jitter: float
    waveform_mix: float
    noise_seed: int

    @staticmethod
    def sample(rng: np.random.Generator) -> "GaitContent":
        return GaitContent(
            phase=float(rng.uniform(0.0, 2.0 * np.pi)),
            frequency=float(rng.uniform(0.8, 1.25)),
            jitter=float(rng.uniform(0.92, 1.08)),
            waveform_mix=float(rng.uniform(0.0, 1.0)),
            noise_seed=int(rng.integers(1 << 31)),
        )


def _smooth_noise(rng: np.random.Generator, t: np.ndarray, std: float) -> np.ndarray:
    """Band-limited random curve: two sinusoids with random frequency/phase."""
    out = np.zeros_like(t)
    for _ in range(2):
        f = rng.uniform(0.3, 2.5)
        p = rng.uniform(0.0, 2.0 * np.pi)
        out = out + np.sin(2.0 * np.pi * f * t + p)
    return std * out * (2.0 ** -0.5)


def make_gait(
    style: StyleDef,
    content: GaitContent,
    frames: int = 32,
    fps: float = FPS,
) -> RotationalMotion:
    """Synthesize one clip of walking with the given style/content draw.

    The character faces +Z and advances along +Z. Knees lift during the
    forward swing and straighten in stance; root velocity tracks the stance
    foot's backward sweep so planted feet stay nearly world-stationary, and
    pelvis height is set so stance feet dip to ground level.
    """
    t = np.arange(frames) / fps
    freq = content.frequency * style.cadence
    phi = content.phase + 2.0 * np.pi * freq * t
    amp = style.amplitude * content.jitter
    swing = 0.25 * amp
    knee_amp = 0.5 * amp
    mix = content.waveform_mix
    noise_rng = np.random.default_rng(content.noise_seed)

    def noise() -> np.ndarray:
        return _smooth_noise(noise_rng, t, NOISE_STD)

    def leg(phase_offset: float, side: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        p = phi + phase_offset
        hip = swing * (np.sin(p) + 0.2 * mix * np.sin(2.0 * p + 0.8)) + 0.25 * style.lean + noise()
        lift = np.maximum(0.0, np.cos(p - 0.2)) ** 2
        knee = knee_amp * (lift + 0.05 * mix * np.sin(2.0 * p)) + 0.15 + noise()
        ankle = -0.35 * knee + noise()
        abduct = side * (0.10 * amp * style.sway * np.sin(p + 0.4)) + noise()
        return hip, knee, ankle, abduct

    l_hip, l_knee, l_ankle, l_abd = leg(0.0, 1.0)
    r_hip, r_knee, r_ankle, r_abd = leg(np.pi, -1.0)
    chest_pitch = style.lean + 0.06 * amp * np.sin(2.0 * phi + 0.3) + noise()
    chest_roll = 0.05 * amp * style.sway * np.sin(phi) + noise()
    pelvis_roll = 0.04 * amp * style.sway * np.sin(phi) + noise()

    zeros = np.zeros(frames)

    def joint_quats(x_rad, y_rad, z_rad):
        angles = np.degrees(np.stack([z_rad, y_rad, x_rad], axis=-1))
        return from_euler(angles, "ZYX")

    rot = np.zeros((frames, 8, 4))
    rot[:, PELVIS] = joint_quats(zeros, zeros, pelvis_roll)
    rot[:, CHEST] = joint_quats(chest_pitch, zeros, chest_roll)
    rot[:, LHIP] = joint_quats(l_hip, zeros, l_abd)
    rot[:, LKNEE] = joint_quats(l_knee, zeros, zeros)
    rot[:, LANKLE] = joint_quats(l_ankle, zeros, zeros)
    rot[:, RHIP] = joint_quats(r_hip, zeros, r_abd)
    rot[:, RKNEE] = joint_quats(r_knee, zeros, zeros)
    rot[:, RANKLE] = joint_quats(r_ankle, zeros, zeros)

    # root trajectory: follow the stance (lower) foot so it stays planted
    skel = toy_skeleton()
    rel = kinematics.forward_kinematics(
        skel,
        RotationalMotion(rotations=rot, root_translation=np.zeros((frames, 3)), fps=fps),
        include_root_translation=False,
    ).positions
    h_l, h_r = rel[:, LANKLE, 1], rel[:, RANKLE, 1]
    z_l, z_r = rel[:, LANKLE, 2], rel[:, RANKLE, 2]
    stance_l = 1.0 / (1.0 + np.exp((h_l - h_r) / 0.01))  # ~1 when left foot lower
    v_l = np.gradient(z_l) * fps
    v_r = np.gradient(z_r) * fps
    root_vz = -(stance_l * v_l + (1.0 - stance_l) * v_r)
    root = np.zeros((frames, 3))
    root[:, 2] = np.concatenate([[0.0], np.cumsum(root_vz[:-1])]) / fps
    base = 0.012 - min(h_l.min(), h_r.min())
    root[:, 1] = base + 0.01 * amp * np.sin(2.0 * phi)
    return RotationalMotion(
        rotations=rot, root_translation=root, fps=fps, style_label=style.name
    )


def generate_toy_dataset(
    windows_per_style: int = 64,
    frames: int = 32,
    seed: int = 0,
    styles: tuple[StyleDef, ...] = TOY_STYLES,
) -> MotionDataset:
    """Windowed in-memory dataset: each window is an independent gait draw,
    root-normalized with precomputed root-free FK positions."""
    rng = np.random.default_rng(seed)
    skel = toy_skeleton()
    quats, positions, labels, windows = [], [], [], []
    label_names = tuple(s.name for s in styles)
    for s_idx, style in enumerate(styles):
        for w in range(windows_per_style):
            clip = make_gait(style, GaitContent.sample(rng), frames=frames)
            normalized, _ = root_normalize(clip)
            pos = kinematics.forward_kinematics(skel, normalized, include_root_translation=False)
            quats.append(normalized.rotations)
            positions.append(pos.positions)
            labels.append(s_idx)
            windows.append(ClipWindow(entry=s_idx * windows_per_style + w, start=0, length=frames))
    return MotionDataset(
        skeleton=skel,
        landmarks=toy_landmarks(),
        quats=np.stack(quats),
        positions=np.stack(positions),
        labels=np.asarray(labels, dtype=np.int64),
        label_names=label_names,
        fps=FPS,
        windows=tuple(windows),
    )


def write_toy_corpus(
    out_dir: str | Path,
    clips_per_style: int = 4,
    frames_per_clip: int = 80,
    seed: int = 0,
    styles: tuple[StyleDef, ...] = TOY_STYLES,
) -> Path:
    """Write BVH clips plus a manifest.json; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    skel = toy_skeleton()
    entries = []
    for style in styles:
        for c in range(clips_per_style):
            clip = make_gait(style, GaitContent.sample(rng), frames=frames_per_clip)
            name = f"{style.name}_{c:02d}.bvh"
            (out_dir / name).write_text(bvh.write_bvh(skel, clip))
            entries.append({"file": name, "style": style.name})
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps(entries, indent=2))
    return manifest
