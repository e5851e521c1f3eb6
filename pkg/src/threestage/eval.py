"""Clustering metrics and graph diagnostics: accuracy, NMI, connectivity, Ncut, sparsity."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from threestage.data import check_labels
from threestage.gbto import ZERO_FLOOR
from threestage.spectral import normalized_laplacian, smallest_eigenpairs


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = check_labels(pred)
    truth = check_labels(truth)
    if pred.size != truth.size:
        raise ValueError(f"label lengths differ: {pred.size} vs {truth.size}")
    if pred.size == 0:
        raise ValueError("empty labelings")
    return pred, truth


def contingency(pred, truth) -> np.ndarray:
    """Counts ``M[a, b]`` of points with predicted label ``a`` and true label ``b`` (compacted labels)."""
    pred, truth = _pair(pred, truth)
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    M = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(M, (p, t), 1)
    return M


def clustering_accuracy(pred, truth) -> float:
    """Fraction of points correctly labeled under the best one-to-one relabeling of ``pred``."""
    M = contingency(pred, truth)
    rows, cols = linear_sum_assignment(M, maximize=True)
    return float(M[rows, cols].sum()) / M.sum()


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth, average: str = "geometric") -> float:
    """Normalized mutual information in nats.

    ``average`` selects the normalizer: ``"geometric"`` uses sqrt(H(pred) H(truth)),
    ``"arithmetic"`` uses their mean. Two constant labelings score 1, exactly one
    constant labeling scores 0.
    """
    if average not in ("geometric", "arithmetic"):
        raise ValueError(f"unknown average {average!r}")
    M = contingency(pred, truth).astype(np.float64)
    h_pred = _entropy(M.sum(1))
    h_true = _entropy(M.sum(0))
    if h_pred == 0 and h_true == 0:
        return 1.0
    if h_pred == 0 or h_true == 0:
        return 0.0
    n = M.sum()
    P = M / n
    outer = np.outer(P.sum(1), P.sum(0))
    nz = P > 0
    mi = float((P[nz] * np.log(P[nz] / outer[nz])).sum())
    denom = np.sqrt(h_pred * h_true) if average == "geometric" else 0.5 * (h_pred + h_true)
    return float(np.clip(mi / denom, 0.0, 1.0))


def algebraic_connectivity(W) -> float:
    """Second-smallest eigenvalue of the normalized Laplacian of ``W``.

    A graph with an isolated vertex is disconnected and scores 0, even though
    the identity row the Laplacian assigns such a vertex has eigenvalue 1.
    A single vertex scores 1.
    """
    W = np.asarray(W, dtype=np.float64)
    n = W.shape[0]
    if n == 1:
        return 1.0
    if (W.sum(axis=1) <= 0).any():
        return 0.0
    vals, _ = smallest_eigenpairs(normalized_laplacian(W), 2)
    return float(max(vals[1], 0.0))


def connectivity(W, truth, scope: str = "cluster") -> float:
    """Graph connectivity with respect to the ground-truth partition.

    ``scope="cluster"`` returns the minimum over true clusters of the
    algebraic connectivity of the induced subgraph; ``scope="graph"``
    returns that of the whole graph.
    """
    W = np.asarray(W, dtype=np.float64)
    truth = check_labels(truth, W.shape[0])
    if scope == "graph":
        return algebraic_connectivity(W)
    if scope != "cluster":
        raise ValueError(f"unknown scope {scope!r}")
    values = []
    for c in np.unique(truth):
        idx = np.flatnonzero(truth == c)
        values.append(algebraic_connectivity(W[np.ix_(idx, idx)]))
    return float(min(values))


def ncut_value(W, labels) -> float:
    """Normalized cut ``sum_i cut(A_i, rest) / vol(A_i)`` of the partition given by ``labels``.

    A cluster with zero volume and zero cut contributes 0.
    """
    W = np.asarray(W, dtype=np.float64)
    labels = check_labels(labels, W.shape[0])
    deg = W.sum(axis=1)
    total = 0.0
    for c in np.unique(labels):
        inside = labels == c
        vol = deg[inside].sum()
        cut = W[np.ix_(inside, ~inside)].sum()
        if vol == 0:
            if cut != 0:
                raise ValueError(f"cluster {c} has zero volume but nonzero cut")
            continue
        total += cut / vol
    return float(total)


def sparsity(M, zero_floor: float = ZERO_FLOOR) -> float:
    """Fraction of off-diagonal entries with magnitude at most ``zero_floor``."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got {M.shape}")
    n = M.shape[0]
    if n < 2:
        return 1.0
    off = ~np.eye(n, dtype=bool)
    return float((np.abs(M[off]) <= zero_floor).mean())
