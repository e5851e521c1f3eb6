"""Stage two: graph-based transformation and optimization of an affinity matrix.

Weights are turned into simulated distances (WDT), distances are shortened
through intermediate points with Floyd-Warshall, and the result is mapped back
to weights (DWT). Missing edges are encoded as ``inf`` distances throughout;
``inf + finite == inf`` keeps the min-plus update exact.

Hard mode closes every entry; soft mode only shortens entries that were
finite on input, so the zero pattern of the affinity is preserved.
"""

from __future__ import annotations

import warnings
from enum import Enum

import numpy as np
from numba import njit, prange

ZERO_FLOOR = 1e-15
DEFAULT_BLOCK = 64
_RANGE_TOL = 1e-9

# numba falls back to OpenMP when the installed TBB is too old; the notice is noise
warnings.filterwarnings("ignore", message="The TBB threading layer requires TBB")


class Transform(str, Enum):
    RECIPROCAL = "reciprocal"  # d = 1/w
    LOG = "log"  # d = 1 - ln w


class Mode(str, Enum):
    HARD = "hard"
    SOFT = "soft"


def wdt(W, transform: str | Transform = Transform.RECIPROCAL, zero_floor: float = ZERO_FLOOR) -> np.ndarray:
    """Weight-to-distance transform. Zero weights (below ``zero_floor``) become ``inf``; diagonal is 0."""
    transform = Transform(transform)
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"affinity must be square, got {W.shape}")
    if np.isnan(W).any() or W.min(initial=0.0) < -_RANGE_TOL or W.max(initial=0.0) > 1 + _RANGE_TOL:
        raise ValueError("affinity entries must lie in [0, 1]")
    W = np.clip(W, 0.0, 1.0)
    edge = W > zero_floor
    D = np.full(W.shape, np.inf)
    if transform is Transform.RECIPROCAL:
        D[edge] = 1.0 / W[edge]
    else:
        D[edge] = 1.0 - np.log(W[edge])
    np.fill_diagonal(D, 0.0)
    return D


def dwt(D, transform: str | Transform = Transform.RECIPROCAL) -> np.ndarray:
    """Distance-to-weight transform, inverse of :func:`wdt`. ``inf`` maps to 0; diagonal is 0."""
    transform = Transform(transform)
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got {D.shape}")
    off = ~np.eye(D.shape[0], dtype=bool)
    finite = np.isfinite(D) & off
    if np.isnan(D).any() or (D[finite] <= 0).any():
        raise ValueError("off-diagonal distances must be positive or inf")
    W = np.zeros_like(D)
    if transform is Transform.RECIPROCAL:
        W[finite] = 1.0 / D[finite]
    else:
        W[finite] = np.exp(1.0 - D[finite])
    return W


# ---------------------------------------------------------------- kernels
# All kernels update ``d`` in place.


@njit(cache=True)
def fw_reference(d, frozen):
    """Plain triple-loop Floyd-Warshall; entries with ``frozen[i, j]`` are never written."""
    n = d.shape[0]
    for k in range(n):
        for i in range(n):
            dik = d[i, k]
            for j in range(n):
                s = dik + d[k, j]
                if s < d[i, j] and not frozen[i, j]:
                    d[i, j] = s


@njit(cache=True, parallel=True)
def fw_rows(d, frozen):
    """Floyd-Warshall with the rows of each k-step processed in parallel.

    Row k and column k are fixed points of step k, so rows are independent
    and the result is bitwise equal to :func:`fw_reference`.
    """
    n = d.shape[0]
    for k in range(n):
        rowk = d[k].copy()
        for i in prange(n):
            dik = d[i, k]
            for j in range(n):
                s = dik + rowk[j]
                if s < d[i, j] and not frozen[i, j]:
                    d[i, j] = s


@njit(cache=True)
def _fw_tile(d, i0, i1, j0, j1, k0, k1):
    for k in range(k0, k1):
        for i in range(i0, i1):
            dik = d[i, k]
            for j in range(j0, j1):
                s = dik + d[k, j]
                if s < d[i, j]:
                    d[i, j] = s


@njit(cache=True)
def _minplus_into(c, a, b):
    # c = min(c, a (min,+) b) on contiguous buffers
    m, p = a.shape
    q = b.shape[1]
    for i in range(m):
        ci = c[i]
        for k in range(p):
            aik = a[i, k]
            bk = b[k]
            for j in range(q):
                s = aik + bk[j]
                if s < ci[j]:
                    ci[j] = s


@njit(cache=True, parallel=True)
def fw_blocked(d, block):
    """Tiled three-phase Floyd-Warshall (hard mode only).

    Per diagonal tile: close the tile, then its row and column of tiles,
    then every remaining tile as a min-plus product on contiguous copies.
    """
    n = d.shape[0]
    nb = (n + block - 1) // block
    for kb in range(nb):
        k0 = kb * block
        k1 = min(n, k0 + block)
        _fw_tile(d, k0, k1, k0, k1, k0, k1)
        for t in prange(2 * nb):
            jb = t // 2
            if jb == kb:
                continue
            j0 = jb * block
            j1 = min(n, j0 + block)
            if t % 2 == 0:
                _fw_tile(d, k0, k1, j0, j1, k0, k1)
            else:
                _fw_tile(d, j0, j1, k0, k1, k0, k1)
        rowk = np.ascontiguousarray(d[k0:k1, :])
        for t in prange(nb * nb):
            ib = t // nb
            jb = t % nb
            if ib == kb or jb == kb:
                continue
            i0 = ib * block
            i1 = min(n, i0 + block)
            j0 = jb * block
            j1 = min(n, j0 + block)
            a = np.ascontiguousarray(d[i0:i1, k0:k1])
            b = np.ascontiguousarray(rowk[:, j0:j1])
            c = np.ascontiguousarray(d[i0:i1, j0:j1])
            _minplus_into(c, a, b)
            d[i0:i1, j0:j1] = c


KERNELS = ("reference", "rows", "blocked")


def shortest_paths(D, mode: str | Mode = Mode.HARD, kernel: str = "auto", block: int = DEFAULT_BLOCK) -> np.ndarray:
    """All-pairs shortest simulated distances.

    Parameters
    ----------
    D : array, shape (N, N)
        Nonnegative distances, ``inf`` for missing edges, zero diagonal.
    mode : {"hard", "soft"}
        Soft mode freezes every entry that is ``inf`` on input.
    kernel : {"auto", "reference", "rows", "blocked"}
        ``auto`` picks ``blocked`` for hard mode and ``rows`` for soft mode.
        ``blocked`` does not support soft mode: reordering k-steps inside a
        tile changes which frozen-target paths are visible.
    """
    mode = Mode(mode)
    D = np.array(D, dtype=np.float64, order="C")
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got {D.shape}")
    if np.isnan(D).any() or (D < 0).any():
        raise ValueError("distances must be nonnegative (inf allowed)")
    if kernel == "auto":
        kernel = "blocked" if mode is Mode.HARD else "rows"
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    if mode is Mode.SOFT:
        frozen = np.isinf(D)
    else:
        frozen = np.zeros(D.shape, dtype=np.bool_)
    if kernel == "blocked":
        if mode is Mode.SOFT:
            raise ValueError("blocked kernel supports hard mode only")
        fw_blocked(D, int(block))
    elif kernel == "rows":
        fw_rows(D, frozen)
    else:
        fw_reference(D, frozen)
    return D


def gbto(
    W,
    mode: str | Mode = Mode.HARD,
    transform: str | Transform = Transform.RECIPROCAL,
    zero_floor: float = ZERO_FLOOR,
    kernel: str = "auto",
) -> np.ndarray:
    """Optimized affinity ``dwt(shortest_paths(wdt(W)))``.

    Entries never decrease, and soft mode keeps the zero pattern of ``W``.
    """
    D = wdt(W, transform, zero_floor)
    W_opt = dwt(shortest_paths(D, mode, kernel=kernel), transform)
    # distances only shrink, so w* = max(w, via-path weight); the max also
    # absorbs round-trip rounding of the log transform
    W_in = np.where(np.isfinite(D), np.clip(np.asarray(W, dtype=np.float64), 0.0, 1.0), 0.0)
    np.fill_diagonal(W_in, 0.0)
    return np.maximum(W_opt, W_in)
