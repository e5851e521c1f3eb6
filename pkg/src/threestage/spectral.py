"""Stage three: spectral clustering with the symmetric normalized Laplacian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from threestage.data import check_labels

EIG_TOL = 1e-8
_ROW_ZERO = 1e-12


class EigenSolverError(RuntimeError):
    """The dense eigensolver failed or returned pairs outside tolerance."""


class DegenerateGraphError(ValueError):
    """The affinity carries no edges to cluster on."""


def _check_affinity(W) -> np.ndarray:
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"affinity must be square, got {W.shape}")
    if not np.all(np.isfinite(W)) or (W < 0).any():
        raise ValueError("affinity entries must be finite and nonnegative")
    return W


def normalized_laplacian(W) -> np.ndarray:
    """``I - D^{-1/2} W D^{-1/2}`` with ``D = diag(W 1)``.

    Isolated vertices (degree 0) get an identity row and column.
    """
    W = _check_affinity(W)
    deg = W.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    L = np.eye(W.shape[0]) - inv_sqrt[:, None] * W * inv_sqrt[None, :]
    return 0.5 * (L + L.T)


def smallest_eigenpairs(L, k: int, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` smallest eigenpairs of a dense symmetric matrix, ascending.

    Eigenvector signs are fixed so the largest-magnitude entry is positive.
    With ``check`` every pair is verified against ``||Lv - lv|| <= 1e-8`` and
    mutual orthogonality.
    """
    L = np.asarray(L, dtype=np.float64)
    n = L.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    try:
        if k == n:
            vals, vecs = linalg.eigh(L, driver="evd")
        else:
            vals, vecs = linalg.eigh(L, driver="evr", subset_by_index=(0, k - 1))
    except linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    idx = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.where(vecs[idx, np.arange(k)] < 0, -1.0, 1.0)
    if check:
        resid = np.linalg.norm(L @ vecs - vecs * vals, axis=0)
        if resid.max(initial=0.0) > EIG_TOL:
            raise EigenSolverError(f"eigenpair residual {resid.max():.3e} exceeds tolerance")
        gram = vecs.T @ vecs - np.eye(k)
        if np.abs(gram).max(initial=0.0) > EIG_TOL:
            raise EigenSolverError("eigenvectors lost orthogonality")
    return vals, vecs


def spectral_embed(W, k: int) -> np.ndarray:
    """Rows of the bottom-``k`` Laplacian eigenvectors, scaled to unit norm.

    Rows that are numerically zero (isolated vertices) are returned as exact
    zeros.
    """
    W = _check_affinity(W)
    n = W.shape[0]
    if not 2 <= k <= n:
        raise ValueError(f"k must lie in [2, {n}], got {k}")
    _, vecs = smallest_eigenpairs(normalized_laplacian(W), k)
    norms = np.linalg.norm(vecs, axis=1)
    E = np.zeros_like(vecs)
    live = norms > _ROW_ZERO
    E[live] = vecs[live] / norms[live, None]
    return E


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    n_iter: int
    repaired: bool = False


def _sq_dists(X, centers):
    d = (X * X).sum(1)[:, None] - 2.0 * X @ centers.T + (centers * centers).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = ((X - centers[0]) ** 2).sum(1)
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            j = rng.choice(n, p=closest / total)
        else:
            j = rng.integers(n)
        centers[c] = X[j]
        closest = np.minimum(closest, ((X - centers[c]) ** 2).sum(1))
    return centers


def _lloyd(X, centers, max_iter, tol):
    repaired = False
    k = centers.shape[0]
    for it in range(1, max_iter + 1):
        d = _sq_dists(X, centers)
        labels = d.argmin(1)
        new = centers.copy()
        for c in range(k):
            members = labels == c
            if members.any():
                new[c] = X[members].mean(0)
            else:
                # empty cluster: re-seed at the point worst served by its centroid
                far = int(d[np.arange(len(X)), labels].argmax())
                new[c] = X[far]
                labels[far] = c
                d[far] = 0.0
                repaired = True
        shift = ((new - centers) ** 2).sum()
        centers = new
        if shift <= tol:
            break
    d = _sq_dists(X, centers)
    labels = d.argmin(1)
    inertia = float(d[np.arange(len(X)), labels].sum())
    return labels, centers, inertia, it, repaired


def kmeans(E, k: int, seed: int = 0, restarts: int = 10, max_iter: int = 300, tol: float = 1e-9) -> KMeansResult:
    """Lloyd's k-means with k-means++ seeding, best of ``restarts`` by inertia.

    Deterministic for a given seed. When ``k`` exceeds the number of distinct
    rows, empty clusters are re-seeded at the farthest point and ``repaired``
    is set on the result.
    """
    X = np.asarray(E, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("embedding must be 2-D")
    n = X.shape[0]
    if k < 1 or restarts < 1:
        raise ValueError("k and restarts must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds number of points {n}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, centers, inertia, n_iter, repaired = _lloyd(X, _kmeanspp(X, k, rng), max_iter, tol)
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels, centers, inertia, n_iter, repaired)
    best.repaired = best.repaired or len(np.unique(X, axis=0)) < k
    return best


def spectral_clustering(W, k: int, seed: int = 0, restarts: int = 10) -> np.ndarray:
    """Cluster the vertices of ``W`` into ``k`` groups; returns labels in ``[0, k)``."""
    W = _check_affinity(W)
    if not (W > 0).any():
        raise DegenerateGraphError("affinity is all zero; nothing to cluster")
    E = spectral_embed(W, k)
    live = np.linalg.norm(E, axis=1) > 0
    n_live = int(live.sum())
    result = kmeans(E[live], min(k, n_live), seed=seed, restarts=restarts)
    labels = np.empty(W.shape[0], dtype=np.int64)
    labels[live] = result.labels
    if not live.all():
        labels[~live] = _sq_dists(E[~live], result.centers).argmin(1)
    return check_labels(labels)
