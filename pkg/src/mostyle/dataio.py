"""Dataset manifests, 2D keypoint ingestion, clip windowing and splitting.

File formats:
  * manifest: JSON array of {"file": str, "style": str, "fps": float?,
    "frame_range": [start, end]?}
  * keypoints: JSON {"fps": float, "joints": [names], "frames":
    [[[x, y, conf] * J] * T], "joint_map": {keypoint -> skeleton joint}?}
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bvh, kinematics
from .camera import BodyLandmarks
from .motion import PositionalMotion2D, RotationalMotion, root_normalize
from .skeleton import SkeletonTopology

DEFAULT_WINDOW = 32
DEFAULT_CONFIDENCE_THRESHOLD = 0.3


@dataclass(frozen=True)
class ManifestEntry:
    file: Path
    style: str
    fps: float | None = None
    frame_range: tuple[int, int] | None = None


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    @property
    def style_labels(self) -> tuple[str, ...]:
        return tuple(sorted({e.style for e in self.entries}))


@dataclass(frozen=True)
class ClipWindow:
    entry: int
    start: int
    length: int


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    raw = json.loads(path.read_text())
    if not isinstance(raw, list) or not raw:
        raise ValueError(f"manifest {path} must be a non-empty JSON array")
    entries = []
    for i, item in enumerate(raw):
        style = item.get("style", "")
        if not style:
            raise ValueError(f"manifest entry {i} has an empty style label")
        file = (path.parent / item["file"]).resolve()
        if not file.exists():
            raise FileNotFoundError(f"manifest entry {i}: no such file {file}")
        frame_range = item.get("frame_range")
        entries.append(
            ManifestEntry(
                file=file,
                style=style,
                fps=item.get("fps"),
                frame_range=tuple(frame_range) if frame_range else None,
            )
        )
    return DatasetManifest(entries=tuple(entries))


def load_entry(entry: ManifestEntry) -> tuple[SkeletonTopology, RotationalMotion]:
    skel, motion = bvh.parse_bvh(entry.file.read_text())
    if entry.frame_range is not None:
        start, end = entry.frame_range
        motion = motion.slice(start, end - start)
    fps = entry.fps if entry.fps is not None else motion.fps
    return skel, RotationalMotion(
        rotations=motion.rotations,
        root_translation=motion.root_translation,
        fps=fps,
        style_label=entry.style,
    )


def window_clips(
    source, window: int = DEFAULT_WINDOW, overlap: int | None = None
) -> list[ClipWindow]:
    """Cut overlapping fixed-length windows out of each source clip.

    `source` is a DatasetManifest (files are read for their frame counts) or
    a sequence of clip lengths. Default overlap is window/4, i.e. stride
    3*window/4; tails shorter than `window` are discarded.
    """
    if window % 4 != 0:
        raise ValueError("window length must be divisible by 4")
    if overlap is None:
        overlap = window // 4
    stride = window - overlap
    if stride <= 0:
        raise ValueError("overlap must be smaller than the window")
    if isinstance(source, DatasetManifest):
        lengths = [load_entry(e)[1].num_frames for e in source.entries]
    else:
        lengths = list(source)
    windows = []
    for entry_idx, length in enumerate(lengths):
        start = 0
        while start + window <= length:
            windows.append(ClipWindow(entry=entry_idx, start=start, length=window))
            start += stride
    return windows


def split(
    windows: list[ClipWindow], test_fraction: float = 0.10, seed: int = 0
) -> tuple[list[ClipWindow], list[ClipWindow]]:
    """Deterministic train/test partition, grouped by source clip so
    overlapping windows never straddle the split."""
    if not windows:
        raise ValueError("cannot split an empty window list")
    rng = np.random.default_rng(seed)
    entry_ids = sorted({w.entry for w in windows})
    order = rng.permutation(len(entry_ids))
    target = int(round(test_fraction * len(windows)))
    by_entry: dict[int, list[ClipWindow]] = {e: [] for e in entry_ids}
    for w in windows:
        by_entry[w.entry].append(w)
    test_entries: set[int] = set()
    count = 0
    for idx in order:
        if count >= target:
            break
        entry = entry_ids[idx]
        test_entries.add(entry)
        count += len(by_entry[entry])
    train = [w for w in windows if w.entry not in test_entries]
    test = [w for w in windows if w.entry in test_entries]
    return train, test


# ---------------------------------------------------------------------------
# 2D keypoints

def normalize_keypoints2d(
    positions: np.ndarray, pelvis_index: int, neck_index: int
) -> np.ndarray:
    """Center (T, J, 2) keypoints on the pelvis and scale so the mean
    pelvis-to-neck distance is 1."""
    centered = positions - positions[:, pelvis_index : pelvis_index + 1]
    torso = np.linalg.norm(centered[:, neck_index], axis=-1).mean()
    if torso < 1e-9:
        raise ValueError("degenerate torso length in keypoints")
    return centered / torso

_NECK_NAMES = re.compile(r"^(neck|chest|spine\d*|torso|upperback)$", re.IGNORECASE)


def load_keypoints2d(
    path: str | Path,
    skeleton_names,
    name_map: dict[str, str] | None = None,
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
    pelvis: str | None = None,
    neck: str | None = None,
) -> PositionalMotion2D:
    """Load a 2D keypoint JSON file into skeleton joint order.

    Keypoints map onto skeleton joints via `name_map` (keypoint name ->
    skeleton joint name), the file's own "joint_map", or name identity.
    Positions come out pelvis-centered with mean torso length 1. Frames
    whose mean confidence falls below the threshold are dropped with a
    warning; dropping everything is an error.
    """
    path = Path(path)
    doc = json.loads(path.read_text())
    kp_names = list(doc["joints"])
    frames = np.asarray(doc["frames"], dtype=np.float64)
    if frames.size == 0:
        raise ValueError(f"{path}: empty frame list")
    if frames.ndim != 3 or frames.shape[1] != len(kp_names) or frames.shape[2] != 3:
        raise ValueError(f"{path}: frames must be (T, {len(kp_names)}, 3) [x, y, confidence]")

    mapping = name_map or doc.get("joint_map") or {n: n for n in kp_names}
    skel_names = list(skeleton_names)
    kp_for_joint: list[int] = []
    for joint in skel_names:
        candidates = [i for i, n in enumerate(kp_names) if mapping.get(n) == joint]
        if not candidates:
            raise ValueError(f"{path}: no keypoint maps to skeleton joint {joint!r}")
        kp_for_joint.append(candidates[0])

    positions = frames[:, kp_for_joint, :2]
    confidence = np.clip(frames[:, kp_for_joint, 2], 0.0, 1.0)

    keep = confidence.mean(axis=1) >= confidence_threshold
    dropped = int((~keep).sum())
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} low-confidence frames")
    if not np.any(keep):
        raise ValueError(f"{path}: all frames below confidence threshold {confidence_threshold}")
    positions = positions[keep]
    confidence = confidence[keep]

    pelvis_name = pelvis or skel_names[0]
    if pelvis_name not in skel_names:
        raise ValueError(f"pelvis joint {pelvis_name!r} not in skeleton")
    if neck is None:
        matches = [n for n in skel_names if _NECK_NAMES.match(n)]
        if not matches:
            raise ValueError("could not infer a neck/chest joint; pass neck= explicitly")
        neck = matches[0]
    if neck not in skel_names:
        raise ValueError(f"neck joint {neck!r} not in skeleton")
    positions = normalize_keypoints2d(
        positions, skel_names.index(pelvis_name), skel_names.index(neck)
    )
    return PositionalMotion2D(
        positions=positions, confidence=confidence, fps=float(doc["fps"])
    )


def write_keypoints2d(
    path: str | Path, motion: PositionalMotion2D, joint_names
) -> None:
    """Inverse of load_keypoints2d's file format (positions stored as-is)."""
    frames = np.concatenate([motion.positions, motion.confidence[..., None]], axis=-1)
    doc = {"fps": motion.fps, "joints": list(joint_names), "frames": frames.tolist()}
    Path(path).write_text(json.dumps(doc))


# ---------------------------------------------------------------------------
# in-memory training dataset

_SHOULDER_PATTERNS = (
    re.compile(r"^(left|l)[_\s]?(shoulder|arm|collar|uparm)", re.IGNORECASE),
    re.compile(r"^(right|r)[_\s]?(shoulder|arm|collar|uparm)", re.IGNORECASE),
)
_HIP_PATTERNS = (
    re.compile(r"^(left|l)[_\s]?(hip|upleg|thigh)", re.IGNORECASE),
    re.compile(r"^(right|r)[_\s]?(hip|upleg|thigh)", re.IGNORECASE),
)


def guess_landmarks(names) -> BodyLandmarks:
    """Find shoulder/hip landmark joints by common naming; hips stand in for
    missing shoulders and vice versa."""
    found = {}
    for key, pattern in (
        ("ls", _SHOULDER_PATTERNS[0]),
        ("rs", _SHOULDER_PATTERNS[1]),
        ("lh", _HIP_PATTERNS[0]),
        ("rh", _HIP_PATTERNS[1]),
    ):
        for i, name in enumerate(names):
            if pattern.match(name):
                found[key] = i
                break
    if "lh" not in found or "rh" not in found:
        found.setdefault("lh", found.get("ls"))
        found.setdefault("rh", found.get("rs"))
    if "ls" not in found or "rs" not in found:
        found.setdefault("ls", found.get("lh"))
        found.setdefault("rs", found.get("rh"))
    if None in found.values() or len(found) != 4:
        raise ValueError("could not identify shoulder/hip landmark joints by name")
    return BodyLandmarks(
        left_shoulder=found["ls"],
        right_shoulder=found["rs"],
        left_hip=found["lh"],
        right_hip=found["rh"],
    )


@dataclass(frozen=True)
class MotionDataset:
    """Windowed, root-normalized training data.

    quats: (N, T, J, 4) root-normalized rotations
    positions: (N, T, J, 3) root-free FK positions of those rotations
    labels: (N,) indices into label_names
    """

    skeleton: SkeletonTopology
    landmarks: BodyLandmarks
    quats: np.ndarray
    positions: np.ndarray
    labels: np.ndarray
    label_names: tuple[str, ...]
    fps: float
    windows: tuple[ClipWindow, ...]

    @property
    def num_windows(self) -> int:
        return self.quats.shape[0]

    def label_counts(self) -> dict[str, int]:
        return {
            name: int((self.labels == i).sum()) for i, name in enumerate(self.label_names)
        }


def assemble_dataset(
    manifest: DatasetManifest,
    windows: list[ClipWindow] | None = None,
    window: int = DEFAULT_WINDOW,
    overlap: int | None = None,
    landmarks: BodyLandmarks | None = None,
) -> MotionDataset:
    """Load manifest files, window them, root-normalize each window and
    precompute root-free FK positions."""
    loaded = [load_entry(e) for e in manifest.entries]
    skel = loaded[0][0]
    for other_skel, _ in loaded[1:]:
        if other_skel.num_joints != skel.num_joints:
            raise ValueError("all manifest entries must share one skeleton")
    if windows is None:
        windows = window_clips([m.num_frames for _, m in loaded], window, overlap)
    if not windows:
        raise ValueError("manifest produced no training windows")
    if landmarks is None:
        landmarks = guess_landmarks(skel.names)

    label_names = manifest.style_labels
    label_index = {name: i for i, name in enumerate(label_names)}
    quats, positions, labels = [], [], []
    fps = loaded[0][1].fps
    for w in windows:
        _, motion = loaded[w.entry]
        clip = motion.slice(w.start, w.length)
        normalized, _ = root_normalize(clip)
        pos = kinematics.forward_kinematics(skel, normalized, include_root_translation=False)
        quats.append(normalized.rotations)
        positions.append(pos.positions)
        labels.append(label_index[manifest.entries[w.entry].style])
    return MotionDataset(
        skeleton=skel,
        landmarks=landmarks,
        quats=np.stack(quats),
        positions=np.stack(positions),
        labels=np.asarray(labels, dtype=np.int64),
        label_names=label_names,
        fps=fps,
        windows=tuple(windows),
    )
