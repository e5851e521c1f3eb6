"""Three-stage subspace clustering.

Self-expressive representation, graph-based transformation and optimization
of the affinity (GBTO), then spectral clustering.
"""

from threestage.data import (
    SyntheticSpec,
    generate_synthetic,
    load_matrix,
    normalize_columns,
    pca_project,
)
from threestage.eval import (
    clustering_accuracy,
    connectivity,
    ncut_value,
    nmi,
    sparsity,
)
from threestage.gbto import Transform, dwt, gbto, shortest_paths, wdt
from threestage.selfexpress import build_affinity, lsr_coefficients, omp_coefficients
from threestage.spectral import (
    kmeans,
    normalized_laplacian,
    spectral_clustering,
    spectral_embed,
)

__all__ = [
    "SyntheticSpec",
    "Transform",
    "build_affinity",
    "clustering_accuracy",
    "connectivity",
    "dwt",
    "gbto",
    "generate_synthetic",
    "kmeans",
    "load_matrix",
    "lsr_coefficients",
    "ncut_value",
    "nmi",
    "normalize_columns",
    "normalized_laplacian",
    "omp_coefficients",
    "pca_project",
    "shortest_paths",
    "sparsity",
    "spectral_clustering",
    "spectral_embed",
    "wdt",
]
