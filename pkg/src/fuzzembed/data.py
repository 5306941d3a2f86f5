"""Input matrices, dissimilarity measures, and seeded random streams."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class DataError(ValueError):
    """Invalid input data (non-finite values, shape problems, parse failures)."""


def _as_float_matrix(values) -> np.ndarray:
    if sp.issparse(values):
        values = values.toarray()
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"expected a 2-D sample matrix, got ndim={arr.ndim}")
    if arr.shape[0] == 0:
        raise DataError("no rows")
    bad = ~np.isfinite(arr)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DataError(f"non-finite value at row {r}, column {c}")
    return arr


@dataclass(frozen=True)
class DataMatrix:
    """N x D sample matrix with finite float64 entries.

    Immutable after construction; safe to share across threads. Sparse
    inputs (scipy) are densified on construction.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = _as_float_matrix(self.values)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


def as_data_array(X) -> np.ndarray:
    """Coerce a DataMatrix or array-like to a validated float64 matrix."""
    if isinstance(X, DataMatrix):
        return X.values
    return _as_float_matrix(X)


# ---------------------------------------------------------------------------
# dissimilarity measures
#
# Each entry maps a metric name to a pairwise kernel d(X, Y) -> (n, m) matrix
# of non-negative dissimilarities.  Single-pair distances reuse the same
# kernels so stored and recomputed values agree bitwise.
# ---------------------------------------------------------------------------


def _pairwise_euclidean_sq(X, Y):
    sx = np.einsum("ij,ij->i", X, X)
    sy = np.einsum("ij,ij->i", Y, Y)
    d2 = sx[:, None] + sy[None, :] - 2.0 * (X @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _pairwise_euclidean(X, Y):
    return np.sqrt(_pairwise_euclidean_sq(X, Y))


def _pairwise_manhattan(X, Y):
    # chunk over rows of X to bound the (n, m, d) temporary
    n = X.shape[0]
    out = np.empty((n, Y.shape[0]))
    step = max(1, int(2**22 / max(1, Y.shape[0] * Y.shape[1])))
    for s in range(0, n, step):
        e = min(n, s + step)
        out[s:e] = np.abs(X[s:e, None, :] - Y[None, :, :]).sum(axis=2)
    return out


def _unit_rows(X):
    norms = np.linalg.norm(X, axis=1)
    safe = np.where(norms > 0.0, norms, 1.0)
    return X / safe[:, None], norms == 0.0


def _pairwise_cosine(X, Y):
    # 1 - cos(x, y) computed as half squared distance of unit vectors, which
    # is exactly 0 for identical inputs; zero-norm rows get distance 1
    # (0 against another zero row).
    U, xzero = _unit_rows(X)
    V, yzero = _unit_rows(Y)
    d = 0.5 * _pairwise_euclidean_sq(U, V)
    np.clip(d, 0.0, 2.0, out=d)
    if xzero.any() or yzero.any():
        d[xzero, :] = 1.0
        d[:, yzero] = 1.0
        d[np.ix_(xzero, yzero)] = 0.0
    return d


_PAIRWISE = {
    "euclidean": _pairwise_euclidean,
    "squared-euclidean": _pairwise_euclidean_sq,
    "manhattan": _pairwise_manhattan,
    "cosine": _pairwise_cosine,
}

METRIC_NAMES = tuple(_PAIRWISE)


@dataclass(frozen=True)
class Metric:
    """A named symmetric non-negative dissimilarity with d(x, x) = 0.

    Custom measures can be registered by passing an explicit ``pairwise``
    kernel; the built-in kinds are euclidean, squared-euclidean, manhattan
    and cosine.
    """

    kind: str
    pairwise_fn: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.pairwise_fn is None:
            if self.kind not in _PAIRWISE:
                raise ValueError(
                    f"unknown metric {self.kind!r}; choose one of {METRIC_NAMES}"
                )
            object.__setattr__(self, "pairwise_fn", _PAIRWISE[self.kind])

    def pairwise(self, X, Y=None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if X.shape[1] != Y.shape[1]:
            raise DataError(
                f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]} features"
            )
        return self.pairwise_fn(X, Y)

    def __call__(self, x, y) -> float:
        return compute_distance(self, x, y)


def compute_distance(metric: Metric, x, y) -> float:
    """Distance between two feature vectors under the metric.

    Uses direct per-pair formulas (not the blocked pairwise kernels) so the
    metric axioms hold exactly: d(x, x) == 0 and d(x, y) == d(y, x).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DataError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]} features")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DataError("non-finite value in input vector")
    if metric.kind == "euclidean":
        return float(np.sqrt(np.sum((x - y) ** 2)))
    if metric.kind == "squared-euclidean":
        return float(np.sum((x - y) ** 2))
    if metric.kind == "manhattan":
        return float(np.sum(np.abs(x - y)))
    if metric.kind == "cosine":
        nx, ny = np.linalg.norm(x), np.linalg.norm(y)
        if nx == 0.0 or ny == 0.0:
            return 0.0 if nx == ny else 1.0
        u, v = x / nx, y / ny
        return float(min(0.5 * np.sum((u - v) ** 2), 2.0))
    return float(metric.pairwise(x[None, :], y[None, :])[0, 0])


# ---------------------------------------------------------------------------
# deterministic randomness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RngState:
    """Seeded source of independent named random streams.

    Streams are numpy PCG64 generators keyed by (seed, crc32(name)), so the
    stream consumed by one stage (say, kNN initialization) is unaffected by
    how much randomness another stage draws.  Identical seeds reproduce
    identical streams across runs and platforms.
    """

    seed: int

    def _seq(self, name: str) -> np.random.SeedSequence:
        return np.random.SeedSequence([int(self.seed) & 0xFFFFFFFFFFFFFFFF,
                                       zlib.crc32(name.encode("utf-8"))])

    def stream(self, name: str) -> np.random.Generator:
        """Independent generator for the given purpose name."""
        return np.random.Generator(np.random.PCG64(self._seq(name)))

    def kernel_seed(self, name: str) -> np.uint64:
        """64-bit seed for hand-rolled in-kernel generators."""
        return np.uint64(self._seq(name).generate_state(1, np.uint64)[0])
