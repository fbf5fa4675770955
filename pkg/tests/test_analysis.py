import csv

import numpy as np
import pytest

from mostyle import analysis, nets, toydata
from mostyle.analysis import CodeTable, cluster_metrics, export_codes, pca2, write_code_table


def _table(vectors, labels, kind="style"):
    return CodeTable(
        ids=tuple(str(i) for i in range(len(labels))),
        labels=tuple(labels),
        kind=kind,
        vectors=np.asarray(vectors, dtype=float),
    )


# ---------------------------------------------------------------------------
# PCA

def test_pca2_planar_data_full_variance(rng):
    basis = np.linalg.qr(rng.standard_normal((10, 2)))[0]
    coords = rng.standard_normal((40, 2)) * [3.0, 1.0]
    x = coords @ basis.T
    out, explained = pca2(x)
    assert out.shape == (40, 2)
    assert abs(explained.sum() - 1.0) < 1e-9


def test_pca2_isotropic_gaussian_fractions(rng):
    d = 20
    x = rng.standard_normal((4000, d))
    _, explained = pca2(x)
    # each PC of an isotropic Gaussian captures about 1/D of the variance
    assert explained.sum() < 2.5 * (2.0 / d)
    assert explained.sum() > 0.5 * (2.0 / d)


def test_pca2_matches_svd_oracle_up_to_sign(rng):
    x = rng.standard_normal((30, 7)) * np.arange(1, 8)
    coords, _ = pca2(x)
    centered = x - x.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    oracle = centered @ vt[:2].T
    for i in range(2):
        match = min(
            np.abs(coords[:, i] - oracle[:, i]).max(),
            np.abs(coords[:, i] + oracle[:, i]).max(),
        )
        assert match < 1e-9


def test_pca2_rotation_invariance(rng):
    x = rng.standard_normal((25, 6)) * np.arange(1, 7)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    a, ea = pca2(x)
    b, eb = pca2(x @ q.T)
    assert np.allclose(ea, eb, atol=1e-9)
    for i in range(2):
        assert min(np.abs(a[:, i] - b[:, i]).max(), np.abs(a[:, i] + b[:, i]).max()) < 1e-7


def test_pca2_degenerate_errors(rng):
    with pytest.raises(ValueError):
        pca2(rng.standard_normal((2, 5)))  # too few rows
    line = np.outer(np.arange(10.0), np.ones(4))
    with pytest.raises(ValueError):
        pca2(line)  # rank 1


# ---------------------------------------------------------------------------
# cluster metrics

def test_cluster_metrics_separated_clouds(rng):
    a = rng.standard_normal((30, 4)) * 0.1
    b = rng.standard_normal((30, 4)) * 0.1 + 10.0
    table = _table(np.concatenate([a, b]), ["a"] * 30 + ["b"] * 30)
    metrics = cluster_metrics(table)
    assert metrics["silhouette"] > 0.9
    assert metrics["probe_accuracy"] == 1.0


def test_cluster_metrics_shuffled_labels_chance(rng):
    x = rng.standard_normal((200, 6))
    labels = list("abcd") * 50
    rng.shuffle(labels)
    metrics = cluster_metrics(_table(x, labels))
    assert metrics["probe_accuracy"] < 0.5  # near chance (0.25) on random labels


def test_cluster_metrics_identical_vectors_zero():
    table = _table(np.ones((10, 3)), ["a"] * 5 + ["b"] * 5)
    assert cluster_metrics(table)["silhouette"] == 0.0


def test_cluster_metrics_single_row_label(rng):
    table = _table(rng.standard_normal((4, 3)), ["a", "a", "a", "b"])
    with pytest.raises(ValueError):
        cluster_metrics(table)


def test_cluster_metrics_needs_two_labels(rng):
    table = _table(rng.standard_normal((4, 3)), ["a"] * 4)
    with pytest.raises(ValueError):
        cluster_metrics(table)


# ---------------------------------------------------------------------------
# export

@pytest.fixture(scope="module")
def small_setup():
    ds = toydata.generate_toy_dataset(windows_per_style=3, seed=2)
    hyper = nets.Hyperparams(
        num_joints=8,
        style_labels=ds.label_names,
        content_widths=(8, 12),
        style_widths=(8, 12, 16),
        decoder_up_width=8,
        disc_widths=(8, 12, 16),
        mlp_hidden=16,
    )
    params = nets.ModelParams.init(hyper, ds.skeleton, seed=3)
    return ds, params


@pytest.mark.parametrize("kind", analysis.CODE_KINDS)
def test_export_row_counts_and_determinism(small_setup, kind):
    ds, params = small_setup
    table = export_codes(params, ds, kind)
    assert len(table.ids) == ds.num_windows
    assert table.kind == kind
    again = export_codes(params, ds, kind)
    assert np.array_equal(table.vectors, again.vectors)


def test_export_adain_row_length(small_setup):
    ds, params = small_setup
    table = export_codes(params, ds, "adain")
    expected = sum(2 * c for c in params.hyper.adain_channels)
    assert table.vectors.shape == (ds.num_windows, expected)


def test_export_content_row_length(small_setup):
    ds, params = small_setup
    table = export_codes(params, ds, "content")
    expected = params.hyper.content_dim * (32 // params.hyper.content_stride)
    assert table.vectors.shape == (ds.num_windows, expected)


def test_export_unknown_kind(small_setup):
    ds, params = small_setup
    with pytest.raises(ValueError):
        export_codes(params, ds, "bogus")


def test_csv_format(tmp_path, small_setup):
    ds, params = small_setup
    table = export_codes(params, ds, "style")
    path = tmp_path / "codes.csv"
    write_code_table(table, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    dim = table.vectors.shape[1]
    assert rows[0] == ["id", "label", "kind"] + [f"v{i}" for i in range(dim)]
    assert len(rows) == 1 + ds.num_windows
    assert rows[1][2] == "style"
    back = np.array([[float(v) for v in row[3:]] for row in rows[1:]])
    assert np.abs(back - table.vectors).max() < 1e-5
