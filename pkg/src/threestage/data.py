"""Data matrices: synthetic union-of-subspaces generator, file loaders, preprocessing.

A data matrix is a float array of shape (D, N): one column per point.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataFormatError(ValueError):
    """Raised when an input file cannot be parsed into a data matrix."""


@dataclass(frozen=True)
class SyntheticSpec:
    """Union of ``n_subspaces`` random linear subspaces of dimension ``sub_dim`` in R^ambient_dim."""

    n_subspaces: int = 5
    sub_dim: int = 8
    ambient_dim: int = 12
    points_per_subspace: int = 50
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_subspaces < 1 or self.sub_dim < 1 or self.ambient_dim < 1:
            raise ValueError("n_subspaces, sub_dim and ambient_dim must be positive")
        if self.sub_dim > self.ambient_dim:
            raise ValueError(f"sub_dim={self.sub_dim} exceeds ambient_dim={self.ambient_dim}")
        if self.points_per_subspace < 1:
            raise ValueError("points_per_subspace must be positive")
        if self.n_subspaces * self.points_per_subspace < 2:
            raise ValueError("need at least two points in total")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")


def check_data_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"data matrix must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 2:
        raise ValueError(f"data matrix needs D >= 1 and N >= 2, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data matrix has non-finite entries")
    return X


def check_labels(labels, n: int | None = None) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError("labels must be a 1-D vector")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.round(labels)):
            raise ValueError("labels must be integers")
    labels = labels.astype(np.int64)
    if labels.size and labels.min() < 0:
        raise ValueError("labels must be nonnegative")
    if n is not None and labels.size != n:
        raise ValueError(f"expected {n} labels, got {labels.size}")
    return labels


def generate_synthetic(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sample points from a union of random subspaces.

    Each subspace gets an orthonormal basis from the QR factor of a Gaussian
    matrix. Points are the basis times a unit-norm Gaussian coefficient
    vector, plus isotropic Gaussian noise, and are finally scaled to unit
    norm.

    Returns
    -------
    X : ndarray, shape (ambient_dim, n_subspaces * points_per_subspace)
    labels : ndarray of int, subspace index of each column
    """
    rng = np.random.default_rng(spec.seed)
    D, d, m = spec.ambient_dim, spec.sub_dim, spec.points_per_subspace
    blocks = []
    for _ in range(spec.n_subspaces):
        basis, _ = np.linalg.qr(rng.standard_normal((D, d)))
        coef = rng.standard_normal((d, m))
        coef /= np.linalg.norm(coef, axis=0, keepdims=True)
        pts = basis @ coef
        if spec.noise_sigma > 0:
            pts = pts + spec.noise_sigma * rng.standard_normal((D, m))
        blocks.append(pts)
    X, _ = normalize_columns(np.hstack(blocks))
    labels = np.repeat(np.arange(spec.n_subspaces), m)
    return X, labels


def normalize_columns(X) -> tuple[np.ndarray, np.ndarray]:
    """Scale every nonzero column to unit l2 norm.

    Returns the normalized copy and a boolean mask of the columns that were
    exactly zero (left untouched).
    """
    X = np.array(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=0)
    zero = norms == 0
    X[:, ~zero] /= norms[~zero]
    return X, zero


def pca_project(X, target_dim: int) -> np.ndarray:
    """Project mean-centered columns onto the top ``target_dim`` principal directions."""
    X = check_data_matrix(X)
    D, N = X.shape
    if not 1 <= target_dim <= min(D, N):
        raise ValueError(f"target_dim must lie in [1, {min(D, N)}], got {target_dim}")
    Xc = X - X.mean(axis=1, keepdims=True)
    U, _, _ = np.linalg.svd(Xc, full_matrices=False)
    U = U[:, :target_dim]
    # deterministic sign: largest-magnitude entry of each direction is positive
    idx = np.argmax(np.abs(U), axis=0)
    U = U * np.sign(U[idx, np.arange(target_dim)])
    return U.T @ Xc


def _load_csv(path: Path) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: non-numeric entry ({exc})") from None
            if len(rows[-1]) != len(rows[0]):
                raise DataFormatError(
                    f"{path}:{lineno}: expected {len(rows[0])} columns, got {len(rows[-1])}"
                )
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    return np.array(rows, dtype=np.float64)


_IDX_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def read_idx(path) -> np.ndarray:
    """Read an IDX file into an array with its stored shape (e.g. (n, rows, cols))."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise DataFormatError(f"{path}: bad IDX magic number")
    code, ndim = raw[2], raw[3]
    if code not in _IDX_DTYPES:
        raise DataFormatError(f"{path}: unknown IDX type code 0x{code:02x}")
    if ndim < 1 or len(raw) < 4 + 4 * ndim:
        raise DataFormatError(f"{path}: truncated IDX header")
    shape = struct.unpack(f">{ndim}I", raw[4 : 4 + 4 * ndim])
    dtype = _IDX_DTYPES[code]
    expected = int(np.prod(shape)) * dtype.itemsize
    body = raw[4 + 4 * ndim :]
    if len(body) != expected:
        raise DataFormatError(
            f"{path}: IDX payload has {len(body)} bytes, header implies {expected}"
        )
    return np.frombuffer(body, dtype=dtype).reshape(shape)


def write_idx(path, array: np.ndarray) -> None:
    """Write an array as IDX; uint8 arrays get type code 0x08."""
    array = np.asarray(array)
    codes = {v.newbyteorder("="): k for k, v in _IDX_DTYPES.items()}
    code = codes.get(array.dtype.newbyteorder("="))
    if code is None:
        raise ValueError(f"dtype {array.dtype} not representable in IDX")
    header = bytes([0, 0, code, array.ndim]) + struct.pack(f">{array.ndim}I", *array.shape)
    Path(path).write_bytes(header + array.astype(_IDX_DTYPES[code]).tobytes())


def load_matrix(path, format: str | None = None) -> np.ndarray:
    """Load a data matrix with one column per point.

    ``format`` is ``"csv"`` (rows are features, columns are points) or
    ``"idx"`` (first axis indexes images; each image is flattened in
    row-major order into one column; unsigned-byte pixels are scaled to
    [0, 1]). When omitted it is inferred from the file suffix.
    """
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() in (".csv", ".txt") else "idx"
    format = format.lower()
    if format == "csv":
        X = _load_csv(path)
    elif format == "idx":
        arr = read_idx(path)
        if arr.ndim < 2:
            raise DataFormatError(f"{path}: IDX file holds a vector, not images")
        scale = 255.0 if arr.dtype == np.uint8 else 1.0
        X = arr.reshape(arr.shape[0], -1).astype(np.float64).T / scale
    else:
        raise ValueError(f"unknown format {format!r}")
    if X.shape[1] < 2:
        raise DataFormatError(f"{path}: need at least two points, got {X.shape[1]}")
    return check_data_matrix(X)


def load_labels(path, format: str | None = None) -> np.ndarray:
    """Load ground-truth labels from an IDX vector or a one-value-per-line text/CSV file."""
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() in (".csv", ".txt") else "idx"
    if format == "idx":
        arr = read_idx(path)
        if arr.ndim != 1:
            raise DataFormatError(f"{path}: label file must be 1-D")
    else:
        arr = _load_csv(path).ravel()
    return check_labels(arr)
