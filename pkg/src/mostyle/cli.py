"""Command-line interface.

Settings resolve as: command-line flags > config file (--config or the
MSK_CONFIG environment variable, JSON object keyed by flag name) >
defaults. All randomness flows from --seed. Commands exit 0 on success and
print a one-line diagnostic to stderr on failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, bvh, dataio, inference, nets, spectral, toydata, training
from .losses import LossWeights
from .motion import RotationalMotion


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--seed", type=int, help="master random seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mostyle", description="Unpaired motion style transfer toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset-prepare", help="window a manifest and write a split index")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output window index JSON")
    p.add_argument("--window", type=int)
    p.add_argument("--overlap", type=int)
    p.add_argument("--test-fraction", type=float)
    _add_common(p)

    p = sub.add_parser("train", help="train a translator on a labeled manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--windows", help="window index JSON from dataset-prepare (uses its train split)")
    p.add_argument("--out", required=True, help="output directory (checkpoints + metrics.csv)")
    p.add_argument("--iterations", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float, help="learning rate for both G and D")
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--no-adv", action="store_true", help="drop the adversarial loss (ablation)")
    p.add_argument("--no-reg", action="store_true", help="drop feature matching (ablation)")
    p.add_argument("--no-joint", action="store_true", help="drop the joint 2D-3D embedding loss")
    p.add_argument("--no-trip", action="store_true", help="drop the style triplet loss")
    p.add_argument("--log-every", type=int)
    _add_common(p)

    p = sub.add_parser("transfer", help="apply a style example to a content clip")
    p.add_argument("--content", required=True, help="content BVH file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--style", help="style BVH file")
    group.add_argument("--style-2d", help="style 2D keypoints JSON")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="output BVH path")
    p.add_argument("--no-warp", action="store_true")
    p.add_argument("--no-ik", action="store_true")
    p.add_argument("--style2d-scale", type=float, help="length-unit scale for 2D keypoints")
    _add_common(p)

    p = sub.add_parser("interpolate", help="transfer with interpolated style codes")
    p.add_argument("--content", required=True)
    p.add_argument("--style-a", required=True)
    p.add_argument("--style-b", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="output path; weight is appended for --steps")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--weight", type=float)
    group.add_argument("--steps", type=int)
    p.add_argument("--no-warp", action="store_true")
    p.add_argument("--no-ik", action="store_true")
    _add_common(p)

    p = sub.add_parser("embed", help="export latent codes of dataset windows to CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--windows", help="window index JSON; exports its test split")
    p.add_argument("--kind", choices=analysis.CODE_KINDS, default="style")
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("eval-cluster", help="silhouette + linear-probe metrics of latent codes")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--windows")
    p.add_argument("--kind", choices=analysis.CODE_KINDS, default="style")
    p.add_argument("--out", help="optional JSON output path")
    _add_common(p)

    p = sub.add_parser("baseline-spectral", help="frequency-domain style transfer baseline")
    p.add_argument("--content", required=True, help="content BVH")
    p.add_argument("--style-source", required=True, help="BVH with the content's style")
    p.add_argument("--style-target", required=True, help="BVH with the target style")
    p.add_argument("--out", required=True, help="output BVH")
    _add_common(p)

    p = sub.add_parser("toy-dataset", help="generate the synthetic gait corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--clips-per-style", type=int)
    p.add_argument("--frames", type=int)
    _add_common(p)

    return parser


def _merge_config(args: argparse.Namespace, parser_defaults: dict) -> dict:
    """flags > config file > defaults; None marks an unset flag."""
    merged = dict(parser_defaults)
    config_path = args.config or os.environ.get("MSK_CONFIG")
    if config_path:
        merged.update(json.loads(Path(config_path).read_text()))
    for key, value in vars(args).items():
        if value is not None and key != "config":
            merged[key] = value
    return merged


_DEFAULTS = {
    "seed": 0,
    "window": dataio.DEFAULT_WINDOW,
    "overlap": None,
    "test_fraction": 0.10,
    "iterations": 1000,
    "batch_size": 8,
    "lr": 1e-4,
    "checkpoint_every": 0,
    "log_every": 100,
    "style2d_scale": 1.0,
    "clips_per_style": 4,
    "frames": 80,
}


def _load_windows_file(path: str, manifest: dataio.DatasetManifest, which: str):
    doc = json.loads(Path(path).read_text())
    out = [
        dataio.ClipWindow(entry=w["entry"], start=w["start"], length=w["length"])
        for w in doc[which]
    ]
    if not out:
        raise ValueError(f"window index {path} has an empty {which!r} split")
    for w in out:
        if w.entry >= len(manifest.entries):
            raise ValueError(f"window index {path} references entry {w.entry} beyond the manifest")
    return out


def cmd_dataset_prepare(cfg: dict) -> int:
    manifest = dataio.load_manifest(cfg["manifest"])
    windows = dataio.window_clips(manifest, window=cfg["window"], overlap=cfg["overlap"])
    train, test = dataio.split(windows, test_fraction=cfg["test_fraction"], seed=cfg["seed"])
    doc = {
        "manifest": str(Path(cfg["manifest"]).resolve()),
        "window": cfg["window"],
        "overlap": cfg["overlap"] if cfg["overlap"] is not None else cfg["window"] // 4,
        "seed": cfg["seed"],
        "train": [w.__dict__ for w in train],
        "test": [w.__dict__ for w in test],
    }
    Path(cfg["out"]).write_text(json.dumps(doc, indent=2, sort_keys=True))
    print(f"windows: {len(windows)} total, {len(train)} train, {len(test)} test -> {cfg['out']}")
    return 0


def cmd_train(cfg: dict) -> int:
    manifest = dataio.load_manifest(cfg["manifest"])
    windows = None
    if cfg.get("windows"):
        windows = _load_windows_file(cfg["windows"], manifest, "train")
    dataset = dataio.assemble_dataset(manifest, windows=windows, window=cfg["window"])
    weights = LossWeights(
        adv=0.0 if cfg.get("no_adv") else 1.0,
        reg=0.0 if cfg.get("no_reg") else 0.5,
        joint=0.0 if cfg.get("no_joint") else 0.3,
        trip=0.0 if cfg.get("no_trip") else 0.3,
    )
    config = training.TrainConfig(
        iterations=cfg["iterations"],
        batch_size=cfg["batch_size"],
        lr_g=cfg["lr"],
        lr_d=cfg["lr"],
        weights=weights,
        seed=cfg["seed"],
        checkpoint_every=cfg["checkpoint_every"],
    )
    params, rows = training.fit(dataset, config, out_dir=cfg["out"], log_every=cfg["log_every"])
    print(f"trained {config.iterations} iterations -> {cfg['out']}/checkpoint_final")
    return 0


def _transfer_options(cfg: dict) -> inference.TransferOptions:
    return inference.TransferOptions(
        enable_warp=not cfg.get("no_warp", False),
        enable_ik=not cfg.get("no_ik", False),
        style2d_scale=cfg.get("style2d_scale", 1.0),
    )


def _load_style(cfg: dict, params: nets.ModelParams, path_3d: str | None, path_2d: str | None):
    if path_3d:
        _, style = bvh.parse_bvh(Path(path_3d).read_text())
        return style
    return dataio.load_keypoints2d(path_2d, params.skeleton.names)


def cmd_transfer(cfg: dict) -> int:
    params = nets.ModelParams.load(cfg["checkpoint"])
    skel, content = bvh.parse_bvh(Path(cfg["content"]).read_text())
    style = _load_style(cfg, params, cfg.get("style"), cfg.get("style_2d"))
    info: dict = {}
    out = inference.transfer(params, content, style, _transfer_options(cfg), info)
    Path(cfg["out"]).write_text(bvh.write_bvh(skel, out))
    print(
        f"V_con={info['v_con']:.4f} V_sty={info['v_sty']:.4f} warp={info['warp_factor']:.4f} "
        f"contacts L/R={info['contact_frames'][0]}/{info['contact_frames'][1]} -> {cfg['out']}"
    )
    return 0


def cmd_interpolate(cfg: dict) -> int:
    params = nets.ModelParams.load(cfg["checkpoint"])
    skel, content = bvh.parse_bvh(Path(cfg["content"]).read_text())
    _, style_a = bvh.parse_bvh(Path(cfg["style_a"]).read_text())
    _, style_b = bvh.parse_bvh(Path(cfg["style_b"]).read_text())
    options = _transfer_options(cfg)
    if cfg.get("weight") is not None:
        weights = [cfg["weight"]]
    else:
        steps = cfg["steps"]
        if steps < 2:
            raise ValueError("--steps must be at least 2")
        weights = list(np.linspace(0.0, 1.0, steps))
    base = Path(cfg["out"])
    for w in weights:
        out = inference.interpolate_styles(params, content, style_a, style_b, float(w), options)
        if len(weights) == 1:
            path = base
        else:
            path = base.with_name(f"{base.stem}_w{w:.3f}{base.suffix or '.bvh'}")
        path.write_text(bvh.write_bvh(skel, out))
        print(f"w={w:.3f} -> {path}")
    return 0


def _dataset_for_codes(cfg: dict) -> dataio.MotionDataset:
    manifest = dataio.load_manifest(cfg["manifest"])
    windows = None
    if cfg.get("windows"):
        windows = _load_windows_file(cfg["windows"], manifest, "test")
    return dataio.assemble_dataset(manifest, windows=windows, window=cfg["window"])


def cmd_embed(cfg: dict) -> int:
    params = nets.ModelParams.load(cfg["checkpoint"])
    dataset = _dataset_for_codes(cfg)
    table = analysis.export_codes(params, dataset, cfg["kind"])
    analysis.write_code_table(table, cfg["out"])
    print(f"exported {len(table.ids)} {cfg['kind']} codes -> {cfg['out']}")
    return 0


def cmd_eval_cluster(cfg: dict) -> int:
    params = nets.ModelParams.load(cfg["checkpoint"])
    dataset = _dataset_for_codes(cfg)
    table = analysis.export_codes(params, dataset, cfg["kind"])
    metrics = analysis.cluster_metrics(table, probe_seed=cfg["seed"])
    line = json.dumps({"kind": cfg["kind"], **metrics})
    print(line)
    if cfg.get("out"):
        Path(cfg["out"]).write_text(line + "\n")
    return 0


def cmd_baseline_spectral(cfg: dict) -> int:
    skel, content = bvh.parse_bvh(Path(cfg["content"]).read_text())
    _, pair_source = bvh.parse_bvh(Path(cfg["style_source"]).read_text())
    _, pair_target = bvh.parse_bvh(Path(cfg["style_target"]).read_text())
    t = min(content.num_frames, pair_source.num_frames, pair_target.num_frames)
    out = spectral.spectral_transfer_rotations(
        content.slice(0, t), pair_source.slice(0, t), pair_target.slice(0, t)
    )
    Path(cfg["out"]).write_text(bvh.write_bvh(skel, out))
    print(f"spectral baseline ({t} frames) -> {cfg['out']}")
    return 0


def cmd_toy_dataset(cfg: dict) -> int:
    manifest = toydata.write_toy_corpus(
        cfg["out"],
        clips_per_style=cfg["clips_per_style"],
        frames_per_clip=cfg["frames"],
        seed=cfg["seed"],
    )
    print(f"toy corpus -> {manifest}")
    return 0


_COMMANDS = {
    "dataset-prepare": cmd_dataset_prepare,
    "train": cmd_train,
    "transfer": cmd_transfer,
    "interpolate": cmd_interpolate,
    "embed": cmd_embed,
    "eval-cluster": cmd_eval_cluster,
    "baseline-spectral": cmd_baseline_spectral,
    "toy-dataset": cmd_toy_dataset,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _merge_config(args, _DEFAULTS)
    try:
        return _COMMANDS[args.command](cfg)
    except Exception as exc:  # noqa: BLE001 - single-line diagnostics by contract
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
