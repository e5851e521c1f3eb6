import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from threestage.data import (
    DataFormatError,
    SyntheticSpec,
    generate_synthetic,
    load_labels,
    load_matrix,
    normalize_columns,
    pca_project,
    read_idx,
    write_idx,
)


def test_synthetic_shape_and_unit_columns():
    X, labels = generate_synthetic(SyntheticSpec(5, 8, 12, 50, 0.0, seed=7))
    assert X.shape == (12, 250)
    assert_array_equal(np.bincount(labels), [50] * 5)
    assert_allclose(np.linalg.norm(X, axis=0), 1.0, atol=1e-12)


def test_synthetic_single_line_is_collinear():
    X, _ = generate_synthetic(SyntheticSpec(1, 1, 3, 4, 0.0, seed=3))
    u = X[:, 0]
    for j in range(4):
        assert_allclose(abs(u @ X[:, j]), 1.0, atol=1e-12)


def test_synthetic_rank_equals_subspace_dim():
    X, _ = generate_synthetic(SyntheticSpec(1, 3, 10, 20, 0.0, seed=11))
    s = np.linalg.svd(X, compute_uv=False)
    assert (s > 1e-10).sum() == 3


@given(st.integers(0, 2**63 - 1))
def test_synthetic_bit_reproducible(seed):
    spec = SyntheticSpec(2, 2, 4, 3, 0.05, seed)
    X1, y1 = generate_synthetic(spec)
    X2, y2 = generate_synthetic(spec)
    assert X1.tobytes() == X2.tobytes()
    assert_array_equal(y1, y2)


def test_noiseless_points_lie_in_their_subspace():
    spec = SyntheticSpec(3, 4, 9, 15, 0.0, seed=5)
    X, labels = generate_synthetic(spec)
    # regenerate the bases with the same stream
    rng = np.random.default_rng(spec.seed)
    for c in range(3):
        basis, _ = np.linalg.qr(rng.standard_normal((9, 4)))
        rng.standard_normal((4, 15))
        pts = X[:, labels == c]
        resid = pts - basis @ (basis.T @ pts)
        assert np.abs(resid).max() <= 1e-10


@pytest.mark.parametrize("kwargs", [
    dict(sub_dim=5, ambient_dim=4),
    dict(n_subspaces=0),
    dict(noise_sigma=-1.0),
    dict(n_subspaces=1, points_per_subspace=1),
])
def test_synthetic_rejects_bad_spec(kwargs):
    with pytest.raises(ValueError):
        SyntheticSpec(**kwargs)


def test_normalize_columns():
    X = np.array([[3.0, 1.0, 0.0], [4.0, 0.0, 0.0]])
    Xn, zero = normalize_columns(X)
    assert_allclose(Xn[:, 0], [0.6, 0.8])
    assert_array_equal(Xn[:, 2], [0.0, 0.0])
    assert_array_equal(zero, [False, False, True])
    again, _ = normalize_columns(Xn)
    assert_allclose(again, Xn, atol=1e-12)


def test_pca_full_dim_preserves_distances(rng):
    X = rng.standard_normal((6, 30))
    Y = pca_project(X, 6)
    dx = np.linalg.norm(X[:, :, None] - X[:, None, :], axis=0)
    dy = np.linalg.norm(Y[:, :, None] - Y[:, None, :], axis=0)
    assert_allclose(dy, dx, atol=1e-8)


def test_pca_exact_on_rank_two(rng):
    X = rng.standard_normal((8, 2)) @ rng.standard_normal((2, 40)) + rng.standard_normal((8, 1))
    Y = pca_project(X, 2)
    Xc = X - X.mean(1, keepdims=True)
    # Gram matrix of centered data is preserved, i.e. zero reconstruction error
    assert_allclose(Y.T @ Y, Xc.T @ Xc, atol=1e-8)


def test_pca_captured_variance_matches_covariance_eigenvalues(rng):
    X = rng.standard_normal((10, 50))
    Y = pca_project(X, 3)
    Xc = X - X.mean(1, keepdims=True)
    cov = Xc @ Xc.T / 50
    top3 = np.sort(np.linalg.eigvalsh(cov))[::-1][:3]
    assert_allclose((Y**2).sum() / 50, top3.sum(), rtol=1e-10)


def test_pca_sign_convention(rng):
    X = rng.standard_normal((5, 20))
    Y1 = pca_project(X, 3)
    Y2 = pca_project(X.copy(), 3)
    assert_array_equal(Y1, Y2)


@pytest.mark.parametrize("dim", [0, 6])
def test_pca_rejects_bad_dim(rng, dim):
    with pytest.raises(ValueError):
        pca_project(rng.standard_normal((5, 20)), dim)


def test_load_csv(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("1,2\n3,4\n", encoding="utf-8")
    X = load_matrix(p)
    assert_array_equal(X, [[1, 2], [3, 4]])
    assert_array_equal(X[:, 0], [1, 3])


@pytest.mark.parametrize("text", ["1,2\n3\n", "1,a\n3,4\n", ""])
def test_load_csv_malformed(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text, encoding="utf-8")
    with pytest.raises(DataFormatError):
        load_matrix(p, "csv")


def test_idx_images_flatten_to_columns(tmp_path):
    imgs = np.arange(10 * 28 * 28, dtype=np.int64).reshape(10, 28, 28) % 256
    p = tmp_path / "images.idx3-ubyte"
    write_idx(p, imgs.astype(np.uint8))
    X = load_matrix(p, "idx")
    assert X.shape == (784, 10)
    assert_allclose(X[:, 3], imgs[3].ravel() / 255.0)
    assert X.min() >= 0 and X.max() <= 1


def test_idx_roundtrip_and_labels(tmp_path):
    labels = np.array([3, 1, 4, 1, 5], dtype=np.uint8)
    p = tmp_path / "labels.idx1-ubyte"
    write_idx(p, labels)
    assert_array_equal(read_idx(p), labels)
    assert_array_equal(load_labels(p), labels)


def test_idx_truncated(tmp_path):
    p = tmp_path / "t.idx"
    write_idx(p, np.zeros((3, 2, 2), dtype=np.uint8))
    p.write_bytes(p.read_bytes()[:-1])
    with pytest.raises(DataFormatError):
        load_matrix(p, "idx")
    p.write_bytes(b"\x01\x00\x08\x01")
    with pytest.raises(DataFormatError):
        read_idx(p)
