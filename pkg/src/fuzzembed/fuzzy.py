"""Fuzzy neighbor graph: per-point calibration and symmetrization.

Each point i gets a shift ``rho[i]`` (distance to its nearest
positive-distance neighbor) and a bandwidth ``sigma[i]`` solving

    sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k)

by bisection.  Directed membership weights ``exp(-max(0, d - rho) / sigma)``
are then merged into an undirected graph with the probabilistic t-conorm
``B = A + A^T - A o A^T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .data import Metric, RngState, as_data_array
from .knn import NeighborGraph, knn_graph

SIGMA_TOL = 1e-5
SIGMA_BISECTIONS = 64
SIGMA_MIN_FACTOR = 1e-3  # lower clamp relative to mean positive neighbor distance
PRUNE_BELOW = 1e-8  # symmetrized weights below this never get sampled

_BRACKET_CAP = 2.0**64


@dataclass(frozen=True)
class SmoothKnnParams:
    """Per-point calibration: shifts, bandwidths, and clamp diagnostics."""

    rho: np.ndarray
    sigma: np.ndarray
    clamped: np.ndarray  # bool per point: sigma hit a search bound

    @property
    def n_clamped(self) -> int:
        return int(self.clamped.sum())


@dataclass(frozen=True)
class FuzzyGraph:
    """Symmetric weighted graph stored as upper-triangle COO (i < j)."""

    n_vertices: int
    rows: np.ndarray  # int64, rows[m] < cols[m]
    cols: np.ndarray
    weights: np.ndarray  # float64 in (0, 1]

    @property
    def n_edges(self) -> int:
        return self.rows.size

    def to_csr(self) -> sp.csr_matrix:
        """Full symmetric adjacency."""
        n = self.n_vertices
        m = sp.coo_matrix(
            (np.concatenate([self.weights, self.weights]),
             (np.concatenate([self.rows, self.cols]),
              np.concatenate([self.cols, self.rows]))),
            shape=(n, n),
        )
        return m.tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()


def _smooth_all(dists: np.ndarray, rho: np.ndarray, target: float,
                sigma_floor: np.ndarray):
    """Vectorized bisection for sigma over every row at once."""
    n = dists.shape[0]
    shifted = np.maximum(dists - rho[:, None], 0.0)

    def total(sig):
        return np.exp(-shifted / sig[:, None]).sum(axis=1)

    lo = np.zeros(n)
    hi = np.ones(n)
    # grow the upper bound until the sum clears the target
    need = total(hi) < target
    while need.any() and hi.max() < _BRACKET_CAP:
        lo[need] = hi[need]
        hi[need] *= 2.0
        need = total(hi) < target
    sigma = hi.copy()
    done = np.zeros(n, dtype=bool)
    for _ in range(SIGMA_BISECTIONS):
        mid = 0.5 * (lo + hi)
        s = total(np.where(mid > 0, mid, 1.0))
        hit = (np.abs(s - target) <= SIGMA_TOL) & ~done
        sigma[hit] = mid[hit]
        done |= hit
        over = s >= target
        shrink = over & ~done
        grow = ~over & ~done
        hi[shrink] = mid[shrink]
        lo[grow] = mid[grow]
        if done.all():
            break
    sigma[~done] = hi[~done]

    clamped = sigma < sigma_floor
    sigma = np.maximum(sigma, sigma_floor)
    clamped |= sigma >= _BRACKET_CAP
    # rows with no positive distance at all: any sigma gives weight 1
    dead = ~(dists > 0).any(axis=1)
    sigma = np.where(dead, 1.0, sigma)
    clamped |= dead
    return sigma, clamped


def smooth_knn_calibrate(neighbor_dists: np.ndarray, k: int | None = None) -> SmoothKnnParams:
    """Calibrate rho and sigma for every row of a (N, k) distance matrix."""
    dists = np.asarray(neighbor_dists, dtype=np.float64)
    if dists.ndim != 2 or dists.shape[1] < 2:
        raise ValueError("need a (N, k) matrix of neighbor distances with k >= 2")
    k = dists.shape[1] if k is None else k
    pos_mask = dists > 0.0
    rho = np.where(pos_mask, dists, np.inf).min(axis=1)
    rho[~np.isfinite(rho)] = 0.0

    n_pos = pos_mask.sum(axis=1)
    mean_pos = np.where(
        n_pos > 0, (dists * pos_mask).sum(axis=1) / np.maximum(n_pos, 1), 0.0
    )
    sigma_floor = SIGMA_MIN_FACTOR * mean_pos

    sigma, clamped = _smooth_all(dists, rho, np.log2(k), sigma_floor)
    return SmoothKnnParams(rho=rho, sigma=sigma, clamped=clamped)


def smooth_knn_dist(neighbor_dists, k: int, rho: float) -> float:
    """Bandwidth for one ascending row of neighbor distances.

    Solves the log2(k) sum equation by bisection; degenerate rows return a
    clamped value instead of failing.
    """
    dists = np.asarray(neighbor_dists, dtype=np.float64)
    if k < 2:
        raise ValueError("k must be >= 2")
    if (dists < 0).any() or (np.diff(dists) < 0).any():
        raise ValueError("neighbor distances must be non-negative and ascending")
    pos = dists[dists > 0]
    floor = SIGMA_MIN_FACTOR * (pos.mean() if pos.size else 0.0)
    sigma, _ = _smooth_all(dists[None, :], np.array([rho], dtype=np.float64),
                           np.log2(k), np.array([floor]))
    return float(sigma[0])


def membership_weights(graph: NeighborGraph, params: SmoothKnnParams) -> np.ndarray:
    """Directed edge weights exp(-max(0, d - rho) / sigma), shape (N, k)."""
    shifted = np.maximum(graph.distances - params.rho[:, None], 0.0)
    return np.exp(-shifted / params.sigma[:, None])


def local_fuzzy_simplicial_set(knn_row, k: int):
    """Directed weights for one point's neighbor row.

    Returns (indices, weights); the nearest positive-distance neighbor gets
    weight exactly 1.
    """
    indices, distances = knn_row
    distances = np.asarray(distances, dtype=np.float64)
    pos = distances[distances > 0]
    rho = float(pos.min()) if pos.size else 0.0
    sigma = smooth_knn_dist(distances, k, rho)
    weights = np.exp(-np.maximum(distances - rho, 0.0) / sigma)
    return np.asarray(indices, dtype=np.int64), weights


def _directed_csr(graph: NeighborGraph, weights: np.ndarray) -> sp.csr_matrix:
    n = graph.n_samples
    rows = np.repeat(np.arange(n, dtype=np.int64), graph.k)
    return sp.coo_matrix(
        (weights.ravel(), (rows, graph.indices.ravel())), shape=(n, n)
    ).tocsr()


def symmetrize(directed: sp.spmatrix | np.ndarray, prune: float = PRUNE_BELOW) -> FuzzyGraph:
    """Probabilistic t-conorm union of a directed weight matrix.

    ``B = A + A^T - A o A^T`` elementwise; entries below ``prune`` are
    dropped from sparse storage.
    """
    A = sp.csr_matrix(directed)
    n = A.shape[0]
    B = (A + A.T - A.multiply(A.T)).tocoo()
    r, c, w = B.row, B.col, B.data
    upper = r < c
    r, c, w = r[upper], c[upper], w[upper]
    keep = w >= prune
    r, c, w = r[keep], c[keep], w[keep]
    order = np.lexsort((c, r))
    return FuzzyGraph(
        n_vertices=n,
        rows=r[order].astype(np.int64),
        cols=c[order].astype(np.int64),
        weights=np.minimum(w[order], 1.0),
    )


def fuzzy_graph_from_knn(graph: NeighborGraph):
    """Calibrate a neighbor graph and symmetrize it.

    Returns (FuzzyGraph, SmoothKnnParams).
    """
    params = smooth_knn_calibrate(graph.distances, graph.k)
    weights = membership_weights(graph, params)
    return symmetrize(_directed_csr(graph, weights)), params


def build_fuzzy_graph(
    X,
    metric: Metric,
    k: int,
    rng: RngState,
    exact_threshold: int = 4096,
):
    """Full pipeline front half: kNN search, calibration, symmetrization."""
    if k < 2:
        raise ValueError("k must be >= 2")
    X = as_data_array(X)
    neighbor_graph = knn_graph(X, metric, k, rng, exact_threshold=exact_threshold)
    fuzzy, params = fuzzy_graph_from_knn(neighbor_graph)
    return fuzzy, params, neighbor_graph
