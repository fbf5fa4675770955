"""Latent-space export and disentanglement metrics.

Codes are exported per window to CSV for external embedding tools; the
internal 2D view is PCA (deterministic, assertable), and clustering quality
is measured by silhouette plus a held-out linear probe.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import silhouette_score

from . import nets
from .dataio import MotionDataset
from .motion import PositionalMotion3D, RotationalMotion
from .nets import ModelParams

CODE_KINDS = ("content", "style", "adain")


@dataclass(frozen=True)
class CodeTable:
    ids: tuple[str, ...]
    labels: tuple[str, ...]
    kind: str
    vectors: np.ndarray  # (N, D)

    def __post_init__(self):
        vec = np.asarray(self.vectors, dtype=np.float64)
        object.__setattr__(self, "vectors", vec)
        if vec.ndim != 2 or vec.shape[0] != len(self.ids) or len(self.labels) != len(self.ids):
            raise ValueError("ids, labels and vector rows must align")


def export_codes(params: ModelParams, dataset: MotionDataset, kind: str) -> CodeTable:
    """One row per dataset window.

    kind "content": flattened content code; "style": 3D style code;
    "adain": all AdaIN (gain, bias) pairs flattened.
    """
    if kind not in CODE_KINDS:
        raise ValueError(f"kind must be one of {CODE_KINDS}")
    if params.hyper.num_joints != dataset.skeleton.num_joints:
        raise ValueError("checkpoint and dataset disagree on joint count")
    rows = []
    ids = []
    labels = []
    for i in range(dataset.num_windows):
        w = dataset.windows[i]
        ids.append(f"{w.entry}:{w.start}")
        labels.append(dataset.label_names[dataset.labels[i]])
        if kind == "content":
            motion = RotationalMotion(
                rotations=dataset.quats[i],
                root_translation=np.zeros((dataset.quats.shape[1], 3)),
                fps=dataset.fps,
            )
            rows.append(nets.encode_content(params, motion).ravel())
        else:
            pos = PositionalMotion3D(positions=dataset.positions[i], fps=dataset.fps)
            z_s = nets.encode_style_3d(params, pos)
            if kind == "style":
                rows.append(z_s)
            else:
                rows.append(nets.style_to_adain(params, z_s).flatten())
    return CodeTable(
        ids=tuple(ids), labels=tuple(labels), kind=kind, vectors=np.stack(rows)
    )


def write_code_table(table: CodeTable, path: str | Path):
    """CSV with header id,label,kind,v0..vK."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        dim = table.vectors.shape[1]
        writer.writerow(["id", "label", "kind"] + [f"v{i}" for i in range(dim)])
        for i in range(len(table.ids)):
            writer.writerow(
                [table.ids[i], table.labels[i], table.kind]
                + [f"{v:.8g}" for v in table.vectors[i]]
            )


def _as_vectors(table) -> np.ndarray:
    return table.vectors if isinstance(table, CodeTable) else np.asarray(table, dtype=np.float64)


def pca2(table) -> tuple[np.ndarray, np.ndarray]:
    """Top-2 principal components of mean-centered vectors.

    Returns (coordinates (N, 2), explained-variance fractions (2,)). Signs
    follow the convention that each component's largest-magnitude loading is
    positive. Fewer than 3 rows or rank < 2 is an error.
    """
    x = _as_vectors(table)
    if x.shape[0] < 3:
        raise ValueError("pca2 needs at least 3 rows")
    centered = x - x.mean(axis=0)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    if len(s) < 2 or s[1] <= 1e-12 * max(s[0], 1e-300):
        raise ValueError("degenerate data: rank < 2")
    comps = vt[:2]
    for i in range(2):
        peak = np.argmax(np.abs(comps[i]))
        if comps[i, peak] < 0:
            comps[i] = -comps[i]
    coords = centered @ comps.T
    total = float(np.sum(s ** 2))
    explained = (s[:2] ** 2) / total
    return coords, explained


def linear_probe_accuracy(
    vectors: np.ndarray, labels, train_fraction: float = 0.8, seed: int = 0
) -> float:
    """Held-out accuracy of a multinomial linear classifier; the split is a
    deterministic per-label shuffle."""
    vectors = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        idx = idx[rng.permutation(len(idx))]
        cut = max(1, int(round(train_fraction * len(idx))))
        cut = min(cut, len(idx) - 1) if len(idx) > 1 else cut
        train_idx.extend(idx[:cut])
        test_idx.extend(idx[cut:])
    if not test_idx:
        raise ValueError("probe split produced an empty test set")
    clf = LogisticRegression(max_iter=2000)
    clf.fit(vectors[train_idx], labels[train_idx])
    return float(clf.score(vectors[test_idx], labels[test_idx]))


def cluster_metrics(table, labels=None, probe_seed: int = 0) -> dict:
    """Silhouette (Euclidean, raw vectors) by label plus linear-probe
    accuracy. Degenerate identical vectors define silhouette 0."""
    if isinstance(table, CodeTable):
        vectors, labels = table.vectors, np.asarray(table.labels)
    else:
        if labels is None:
            raise ValueError("labels are required when passing raw vectors")
        vectors, labels = np.asarray(table, dtype=np.float64), np.asarray(labels)
    uniq, counts = np.unique(labels, return_counts=True)
    if len(uniq) < 2:
        raise ValueError("need at least 2 distinct labels")
    if np.any(counts < 2):
        thin = [str(u) for u, c in zip(uniq, counts) if c < 2]
        raise ValueError(f"labels with a single row: {thin}")
    if np.allclose(vectors, vectors[0]):
        sil = 0.0
    else:
        sil = float(silhouette_score(vectors, labels, metric="euclidean"))
    probe = linear_probe_accuracy(vectors, labels, seed=probe_seed)
    return {"silhouette": sil, "probe_accuracy": probe}
