#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the hot kernels (temporal convolution forward/backward, FK
forward/backward) at training-realistic shapes, plus one full train_step.
Select the backend at runtime with MSK_BACKEND=numba|numpy; this script
measures both regardless.

Usage: python benchmarks/bench_backends.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mostyle import backend, nets, toydata, training


def _time(fn, repeats: int) -> float:
    fn()  # warmup / JIT
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats * 1e6  # microseconds


def bench_kernels(repeats: int):
    rng = np.random.default_rng(0)
    conv_shapes = [
        ("conv 32->64 T32 k4 s2", (8, 32, 32), (64, 32, 4), 2),
        ("conv 48->48 T8 k3 s1", (16, 48, 8), (48, 48, 3), 1),
        ("conv 16->32 T32 k4 s2", (40, 16, 32), (32, 16, 4), 2),
    ]
    parents = np.array([-1, 0, 0, 2, 3, 0, 5, 6], dtype=np.int64)
    offsets = rng.standard_normal((8, 3))
    rot = rng.standard_normal((8, 32, 8, 4)).astype(np.float32)
    rot /= np.linalg.norm(rot, axis=-1, keepdims=True)

    rows = []
    for name in backend.available_backends():
        if name == "auto":
            continue  # auto borrows kernels from the other two
        k = backend.use(name)
        for label, xs, ws, stride in conv_shapes:
            x = rng.standard_normal(xs).astype(np.float32)
            w = rng.standard_normal(ws).astype(np.float32)
            b = rng.standard_normal(ws[0]).astype(np.float32)
            fwd = _time(lambda: k.conv1d_forward(x, w, b, stride, 1), repeats)
            g = np.ones(k.conv1d_forward(x, w, b, stride, 1).shape, dtype=np.float32)
            bwd = _time(lambda: k.conv1d_backward(x, w, stride, 1, g), repeats)
            rows.append((name, label, fwd, bwd))
        pos, glob = k.fk_forward(rot, offsets, parents)
        fwd = _time(lambda: k.fk_forward(rot, offsets, parents), repeats)
        g = np.ones_like(pos)
        bwd = _time(lambda: k.fk_backward(rot, offsets, parents, glob, g), repeats)
        rows.append((name, "fk B8 T32 J8", fwd, bwd))
    return rows


def bench_train_step(repeats: int):
    dataset = toydata.generate_toy_dataset(windows_per_style=8, seed=0)
    hyper = nets.Hyperparams(
        num_joints=8,
        style_labels=dataset.label_names,
        content_widths=(32, 48),
        style_widths=(48, 96, 144),
        decoder_up_width=32,
        disc_widths=(32, 48, 72),
        mlp_hidden=96,
    )
    rows = []
    for name in backend.available_backends():
        backend.use(name)
        config = training.TrainConfig(iterations=1, batch_size=8, seed=0)
        params = nets.ModelParams.init(hyper, dataset.skeleton, seed=0)
        state = training.TrainerState(params, config)
        batch = training.sample_batch(dataset, state.rng, config)
        us = _time(lambda: training.train_step(state, batch, dataset), max(1, repeats // 10))
        rows.append((name, "train_step B8", us, float("nan")))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    print(f"backends available: {', '.join(backend.available_backends())}")
    rows = bench_kernels(args.repeats) + bench_train_step(args.repeats)
    print(f"\n{'backend':8s} {'kernel':24s} {'forward us':>12s} {'backward us':>12s}")
    for name, label, fwd, bwd in rows:
        bwd_s = f"{bwd:12.1f}" if np.isfinite(bwd) else " " * 12
        print(f"{name:8s} {label:24s} {fwd:12.1f} {bwd_s}")
    print("\n(select at runtime with MSK_BACKEND=auto|numba|numpy; default auto)")


if __name__ == "__main__":
    main()
