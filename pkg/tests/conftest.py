import numpy as np
import pytest


def gaussian_mixture(n, dim, n_clusters, seed, center_scale=10.0, noise=1.0):
    """Well separated isotropic Gaussian blobs with cluster labels."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, center_scale, (n_clusters, dim))
    labels = rng.integers(0, n_clusters, n)
    X = centers[labels] + rng.normal(0.0, noise, (n, dim))
    return X, labels


def anisotropic_mixture(n, dim, n_clusters, seed, center_scale=8.0):
    """Well separated Gaussian clusters with low intrinsic dimension.

    Each cluster's covariance has a few dominant directions (randomly
    oriented), so local neighborhoods are recoverable from a 2-D view;
    isotropic high-dimensional blobs cap neighbor preservation near
    k/cluster_size for any embedding.
    """
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, center_scale, (n_clusters, dim))
    scales = np.concatenate([[3.0, 2.0, 1.0], np.full(dim - 3, 0.15)])
    labels = rng.integers(0, n_clusters, n)
    X = np.empty((n, dim))
    for c in range(n_clusters):
        members = np.flatnonzero(labels == c)
        basis = np.linalg.qr(rng.normal(0, 1, (dim, dim)))[0]
        X[members] = centers[c] + (rng.normal(0, 1, (members.size, dim)) * scales) @ basis.T
    return X, labels


@pytest.fixture
def small_blobs():
    return gaussian_mixture(200, 5, 4, seed=11)
