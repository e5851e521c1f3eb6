"""Stage one: self-expressive coefficients and the affinity built from them.

Every solver maps a (D, N) data matrix to an (N, N) coefficient matrix C with
zero diagonal, column i holding the weights that express point i through the
other points. New representation methods plug into ``SOLVERS``.
"""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np
from scipy import linalg

from threestage.data import check_data_matrix

# correlations at or below this are treated as "nothing left to explain"
_CORR_FLOOR = 1e-12


def _check_unit_columns(X: np.ndarray, atol: float = 1e-6) -> None:
    norms = np.linalg.norm(X, axis=0)
    bad = (np.abs(norms - 1.0) > atol) & (norms > 0)
    if bad.any():
        raise ValueError(
            f"columns must be unit-normalized; {int(bad.sum())} column(s) are not "
            "(use normalize_columns first)"
        )


def _omp_column(X: np.ndarray, i: int, k_max: int, residual_tol: float) -> tuple[np.ndarray, np.ndarray]:
    x = X[:, i]
    support: list[int] = []
    coef = np.zeros(0)
    residual = x.copy()
    while len(support) < k_max and np.linalg.norm(residual) > residual_tol:
        corr = np.abs(X.T @ residual)
        corr[i] = -1.0
        corr[support] = -1.0
        j = int(np.argmax(corr))  # first maximum: lowest index wins ties
        if corr[j] <= _CORR_FLOOR:
            break
        support.append(j)
        A = X[:, support]
        coef = np.linalg.lstsq(A, x, rcond=None)[0]
        residual = x - A @ coef
    return np.asarray(support, dtype=np.int64), coef


def omp_coefficients(X, k_max: int, residual_tol: float = 1e-6) -> np.ndarray:
    """Sparse self-expression by orthogonal matching pursuit.

    For each point, atoms (all other columns) are added greedily by largest
    absolute correlation with the residual, with a least-squares refit on the
    support after each addition, until ``k_max`` atoms are chosen or the
    residual norm drops to ``residual_tol``.

    Parameters
    ----------
    X : array, shape (D, N)
        Data with unit-norm columns.
    k_max : int
        Sparsity budget, ``1 <= k_max < N``.
    residual_tol : float
        Stopping threshold on the residual norm.

    Returns
    -------
    C : ndarray, shape (N, N), zero diagonal.
    """
    X = check_data_matrix(X)
    N = X.shape[1]
    if not 1 <= k_max < N:
        raise ValueError(f"k_max must lie in [1, {N - 1}], got {k_max}")
    if residual_tol < 0:
        raise ValueError("residual_tol must be >= 0")
    _check_unit_columns(X)
    C = np.zeros((N, N))
    for i in range(N):
        support, coef = _omp_column(X, i, k_max, residual_tol)
        C[support, i] = coef
    return C


def lsr_coefficients(X, lam: float) -> np.ndarray:
    """Ridge self-expression with the diagonal pinned to zero.

    Column i minimises ``||x_i - X c||^2 + lam ||c||^2`` subject to
    ``c_i = 0``. With ``G = (X^T X + lam I)^{-1}`` the minimiser is
    ``c = e_i - G e_i / G_ii``, so one Cholesky factorization serves every
    column; the off-diagonal part equals the solution of the normal equations
    on X with column i removed.
    """
    X = check_data_matrix(X)
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    N = X.shape[1]
    A = X.T @ X
    A[np.diag_indices(N)] += lam
    G = linalg.cho_solve(linalg.cho_factor(A, lower=True), np.eye(N))
    G = 0.5 * (G + G.T)
    C = -G / np.diag(G)[None, :]
    np.fill_diagonal(C, 0.0)
    return C


SOLVERS: dict[str, Callable[..., np.ndarray]] = {
    "omp": omp_coefficients,
    "lsr": lsr_coefficients,
}


def build_affinity(C, mode: str = "sum") -> np.ndarray:
    """Symmetric affinity from coefficient magnitudes, rescaled so the largest entry is 1.

    ``mode="sum"`` gives ``|C| + |C^T|``; ``mode="half"`` halves it (the
    rescale makes the two identical up to the warning-free all-zero case).
    An all-zero C yields an all-zero W and a ``RuntimeWarning``.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"coefficient matrix must be square, got {C.shape}")
    if not np.all(np.isfinite(C)):
        raise ValueError("coefficient matrix has non-finite entries")
    if mode not in ("sum", "half"):
        raise ValueError(f"mode must be 'sum' or 'half', got {mode!r}")
    absC = np.abs(C)
    W = absC + absC.T
    if mode == "half":
        W *= 0.5
    np.fill_diagonal(W, 0.0)
    top = W.max()
    if top == 0:
        warnings.warn("coefficient matrix is all zero; affinity has no edges", RuntimeWarning)
        return W
    return W / top
