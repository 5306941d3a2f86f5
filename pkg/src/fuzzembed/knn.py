"""Exact and approximate k-nearest-neighbor graph construction.

The approximate path is nearest-neighbor descent: start each point with k
random candidates, then repeatedly propose neighbors-of-neighbors (forward
plus reverse-sampled) as better candidates until the number of accepted
list updates falls below ``delta * N * k`` or ``max_iters`` passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Metric, RngState, as_data_array

DEFAULT_MAX_ITERS = 16
DEFAULT_DELTA = 0.001

_ROW_BLOCK = 256  # bounds the pairwise-distance working set


@dataclass(frozen=True)
class NeighborGraph:
    """Directed k-nearest-neighbor lists: per-point ids and distances.

    ``distances[i]`` is sorted ascending and ``indices[i]`` never contains
    duplicates or ``i`` itself; ties are broken by ascending point id.
    """

    indices: np.ndarray  # (N, k) int64
    distances: np.ndarray  # (N, k) float64

    @property
    def n_samples(self) -> int:
        return self.indices.shape[0]

    @property
    def k(self) -> int:
        return self.indices.shape[1]

    def validate(self) -> None:
        idx, dst = self.indices, self.distances
        n, k = idx.shape
        if dst.shape != (n, k):
            raise ValueError("indices/distances shape mismatch")
        if (idx == np.arange(n)[:, None]).any():
            raise ValueError("self-edge in neighbor lists")
        srt = np.sort(idx, axis=1)
        if (srt[:, 1:] == srt[:, :-1]).any():
            raise ValueError("duplicate neighbor in a list")
        if (np.diff(dst, axis=1) < 0).any():
            raise ValueError("distances not sorted ascending")
        if (dst < 0).any() or not np.isfinite(dst).all():
            raise ValueError("invalid distance values")


def _check_k(n: int, k: int) -> None:
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must satisfy 1 <= k <= N-1, got k={k}, N={n}")


def exact_knn(X, metric: Metric, k: int) -> NeighborGraph:
    """True k nearest neighbors by a full pairwise scan.

    Ties in distance are broken by ascending point id.  Selection runs on
    the blocked pairwise kernels; stored distances are recomputed with the
    direct per-pair formulas so they agree with ``compute_distance``.
    """
    X = as_data_array(X)
    n = X.shape[0]
    _check_k(n, k)
    indices = np.empty((n, k), dtype=np.int64)
    for s in range(0, n, _ROW_BLOCK):
        e = min(n, s + _ROW_BLOCK)
        block = metric.pairwise(X[s:e], X)
        block[np.arange(s, e) - s, np.arange(s, e)] = np.inf
        indices[s:e] = np.argsort(block, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    distances = _pair_distances(X, metric, rows, indices.ravel()).reshape(n, k)
    indices, distances = _sort_lists(indices, distances)
    return NeighborGraph(indices, distances)


def _pair_cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    u = a / np.where(na > 0.0, na, 1.0)[:, None]
    v = b / np.where(nb > 0.0, nb, 1.0)[:, None]
    d = u - v
    out = 0.5 * np.einsum("ij,ij->i", d, d)
    azero, bzero = na == 0.0, nb == 0.0
    out[azero | bzero] = 1.0
    out[azero & bzero] = 0.0
    return np.clip(out, 0.0, 2.0)


def _pair_distances(X, metric: Metric, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # distances for an explicit pair list, chunked to bound memory
    out = np.empty(u.size)
    step = 1 << 18
    for s in range(0, u.size, step):
        e = min(u.size, s + step)
        a, b = X[u[s:e]], X[v[s:e]]
        if metric.kind == "euclidean":
            d = a - b
            out[s:e] = np.sqrt(np.einsum("ij,ij->i", d, d))
        elif metric.kind == "squared-euclidean":
            d = a - b
            out[s:e] = np.einsum("ij,ij->i", d, d)
        elif metric.kind == "manhattan":
            out[s:e] = np.abs(a - b).sum(axis=1)
        elif metric.kind == "cosine":
            out[s:e] = _pair_cosine(a, b)
        else:
            out[s:e] = np.array(
                [metric.pairwise(x[None], y[None])[0, 0] for x, y in zip(a, b)]
            )
    return out


def _random_init(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    idx = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        c = rng.choice(n - 1, size=k, replace=False)
        c[c >= i] += 1
        idx[i] = np.sort(c)
    return idx


def _group_starts(sorted_ids: np.ndarray, n: int) -> np.ndarray:
    return np.searchsorted(sorted_ids, np.arange(n))


def nn_descent(
    X,
    metric: Metric,
    k: int,
    rng: RngState | np.random.Generator,
    max_iters: int = DEFAULT_MAX_ITERS,
    delta: float = DEFAULT_DELTA,
) -> NeighborGraph:
    """Approximate kNN graph by nearest-neighbor descent.

    Deterministic for a fixed seed.  Quality is probabilistic; the recall
    guarantee lives in the acceptance suite rather than a postcondition.
    """
    X = as_data_array(X)
    n = X.shape[0]
    _check_k(n, k)
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    gen = rng.stream("knn-descent") if isinstance(rng, RngState) else rng

    idx = _random_init(n, k, gen)
    flat_rows = np.repeat(np.arange(n, dtype=np.int64), k)
    dst = _pair_distances(X, metric, flat_rows, idx.ravel()).reshape(n, k)
    idx, dst = _sort_lists(idx, dst)

    for _ in range(max_iters):
        # reverse edges, capped at k per target via random subsampling
        tgt = idx.ravel()
        keys = gen.random(tgt.size)
        o = np.lexsort((keys, tgt))
        tgt_s, src_s = tgt[o], flat_rows[o]
        starts = _group_starts(tgt_s, n)
        rank = np.arange(tgt_s.size) - starts[tgt_s]
        keep = rank < k
        rev_t, rev_s, rev_rank = tgt_s[keep], src_s[keep], rank[keep]

        # fixed-width candidate table: forward neighbors then reverse sample
        width = k + int(np.bincount(rev_t, minlength=n).max()) if rev_t.size else k
        cand = np.full((n, width), -1, dtype=np.int64)
        cand[:, :k] = idx
        if rev_t.size:
            cand[rev_t, k + rev_rank] = rev_s

        # local join: all unordered pairs within each candidate row
        iu, ju = np.triu_indices(width, 1)
        u = cand[:, iu].ravel()
        v = cand[:, ju].ravel()
        ok = (u >= 0) & (v >= 0) & (u != v)
        u, v = u[ok], v[ok]
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        pair_key = np.unique(lo * n + hi)
        lo = pair_key // n
        hi = pair_key % n
        d = _pair_distances(X, metric, lo, hi)

        # merge proposals (both directions) with current lists
        rows = np.concatenate([flat_rows, lo, hi])
        ids = np.concatenate([idx.ravel(), hi, lo])
        ds = np.concatenate([dst.ravel(), d, d])
        entry = rows * n + ids
        o = np.lexsort((ds, entry))
        entry_s = entry[o]
        first = np.ones(entry_s.size, dtype=bool)
        first[1:] = entry_s[1:] != entry_s[:-1]
        rows, ids, ds = rows[o][first], ids[o][first], ds[o][first]
        o2 = np.lexsort((ids, ds, rows))
        rows, ids, ds = rows[o2], ids[o2], ds[o2]
        starts = _group_starts(rows, n)
        within = np.arange(rows.size) - starts[rows]
        keep = within < k
        new_idx = ids[keep].reshape(n, k)
        new_dst = ds[keep].reshape(n, k)

        old_keys = flat_rows * n + idx.ravel()
        new_keys = flat_rows * n + new_idx.ravel()
        accepted = int(np.count_nonzero(~np.isin(new_keys, old_keys)))
        idx, dst = new_idx, new_dst
        if accepted < delta * n * k:
            break

    return NeighborGraph(idx, dst)


def _sort_lists(idx: np.ndarray, dst: np.ndarray):
    order = np.lexsort((idx, dst), axis=1)
    return np.take_along_axis(idx, order, axis=1), np.take_along_axis(dst, order, axis=1)


def knn_graph(
    X,
    metric: Metric,
    k: int,
    rng: RngState,
    exact_threshold: int = 4096,
    max_iters: int = DEFAULT_MAX_ITERS,
    delta: float = DEFAULT_DELTA,
) -> NeighborGraph:
    """Exact graph for small inputs, descent for large ones.

    Approximations are unreliable on small data, so anything with
    ``N <= exact_threshold`` takes the exhaustive path.
    """
    X = as_data_array(X)
    if X.shape[0] <= exact_threshold:
        return exact_knn(X, metric, k)
    return nn_descent(X, metric, k, rng, max_iters=max_iters, delta=delta)


def recall(approx: NeighborGraph, exact: NeighborGraph) -> float:
    """Mean fraction of true neighbors recovered per point."""
    n, k = exact.indices.shape
    hits = 0
    for i in range(n):
        hits += np.intersect1d(approx.indices[i], exact.indices[i]).size
    return hits / (n * k)
