"""Fuzzy k-neighbor graph embedding.

Builds a calibrated fuzzy neighbor graph from sample data, initializes
coordinates from the graph's normalized Laplacian, optimizes the layout by
sampled cross-entropy gradient descent, and measures embedding stability
under subsampling.
"""

__version__ = "0.1.0"

from .data import DataMatrix, Metric, RngState, compute_distance
from .evaluate import (
    ProcrustesResult,
    neighbor_preservation,
    normalized_procrustes,
    procrustes_align,
    subsample_stability,
)
from .fuzzy import FuzzyGraph, build_fuzzy_graph, smooth_knn_dist, symmetrize
from .knn import NeighborGraph, exact_knn, nn_descent
from .layout import (
    CurveParams,
    OptimizerConfig,
    attractive_gradient,
    cross_entropy,
    fit_phi,
    optimize_embedding,
    phi,
    repulsive_gradient,
)
from .pipeline import EmbedConfig, EmbedResult, embed
from .spectral import normalized_laplacian, spectral_embedding

__all__ = [
    "DataMatrix",
    "Metric",
    "RngState",
    "compute_distance",
    "NeighborGraph",
    "exact_knn",
    "nn_descent",
    "FuzzyGraph",
    "smooth_knn_dist",
    "symmetrize",
    "build_fuzzy_graph",
    "normalized_laplacian",
    "spectral_embedding",
    "CurveParams",
    "OptimizerConfig",
    "fit_phi",
    "phi",
    "attractive_gradient",
    "repulsive_gradient",
    "cross_entropy",
    "optimize_embedding",
    "ProcrustesResult",
    "procrustes_align",
    "normalized_procrustes",
    "subsample_stability",
    "neighbor_preservation",
    "EmbedConfig",
    "EmbedResult",
    "embed",
]
