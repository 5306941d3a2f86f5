"""Embedding quality and stability measurement.

Stability follows the subsample protocol: embed the full dataset, embed a
uniform subsample with the same seed, restrict the full embedding to the
subsampled points, and report the normalized Procrustes distance per point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Metric, RngState, as_data_array
from .knn import exact_knn


@dataclass(frozen=True)
class ProcrustesResult:
    distance: float
    rotation: np.ndarray  # (d, d) orthogonal
    scale: float
    translation: np.ndarray  # (d,)

    def transform(self, Y: np.ndarray) -> np.ndarray:
        """Apply the fitted map to point rows of Y."""
        return self.scale * (Y @ self.rotation.T) + self.translation


def _centered(X: np.ndarray):
    mean = X.mean(axis=0)
    return X - mean, mean


def _degenerate(centered: np.ndarray, mean: np.ndarray) -> bool:
    return bool(
        np.linalg.norm(centered) <= 1e-12 * (1.0 + np.linalg.norm(mean))
    )


def procrustes_align(X, Y, allow_reflection: bool = True) -> ProcrustesResult:
    """Optimal translation + uniform scale + orthogonal map of Y onto X.

    Minimizes the summed squared error; the orthogonal factor may include
    reflections unless ``allow_reflection`` is False.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Y.shape}")
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two points")
    Xc, x_mean = _centered(X)
    Yc, y_mean = _centered(Y)
    if _degenerate(Xc, x_mean):
        raise ValueError("degenerate reference: all points coincide")
    if _degenerate(Yc, y_mean):
        raise ValueError("degenerate input: all points coincide")
    if np.array_equal(X, Y):
        # identical inputs: the minimizer is the identity, exactly
        d = X.shape[1]
        return ProcrustesResult(0.0, np.eye(d), 1.0, np.zeros(d))

    # maximize trace(R @ Yc^T @ Xc) over orthogonal R
    M = Yc.T @ Xc
    U, S, Vt = np.linalg.svd(M)
    d = X.shape[1]
    flip = np.ones(d)
    if not allow_reflection and np.linalg.det(U @ Vt) < 0:
        flip[-1] = -1.0
    R = (Vt.T * flip) @ U.T
    trace = float(S @ flip)
    y_norm_sq = float(np.einsum("ij,ij->", Yc, Yc))
    scale = max(trace / y_norm_sq, 0.0)
    # residual computed directly: the closed form cancels catastrophically
    # when the true distance is ~0
    resid = Xc - scale * (Yc @ R.T)
    translation = x_mean - scale * (R @ y_mean)
    return ProcrustesResult(
        distance=float(np.linalg.norm(resid)),
        rotation=R,
        scale=float(scale),
        translation=translation,
    )


def _norm_coords(X: np.ndarray) -> np.ndarray:
    """Center and divide by the root-mean-square point norm.

    The RMS convention fixes the Frobenius norm of both normalized sets,
    which makes the aligned distance exactly symmetric in its arguments;
    plain mean-norm scaling leaves an O(1%) asymmetry.
    """
    Xc, mean = _centered(np.asarray(X, dtype=np.float64))
    if _degenerate(Xc, mean):
        raise ValueError("degenerate embedding: all points coincide")
    return Xc / np.sqrt(np.mean(np.einsum("ij,ij->i", Xc, Xc)))


def normalized_procrustes(X, Y, allow_reflection: bool = True) -> float:
    """Scale-free per-point Procrustes distance.

    Each embedding is centered and divided by its own average (RMS) point
    norm before alignment; the aligned distance is divided by N so values
    compare across subsample sizes.
    """
    X = np.asarray(X, dtype=np.float64)
    res = procrustes_align(_norm_coords(X), _norm_coords(Y),
                           allow_reflection=allow_reflection)
    return res.distance / X.shape[0]


@dataclass(frozen=True)
class StabilityRow:
    fraction: float
    mean: float
    std: float
    distances: tuple  # per-trial values


def subsample_indices(n: int, fraction: float, gen: np.random.Generator) -> np.ndarray:
    """Uniform subsample of round(fraction * n) points, original order kept."""
    m = int(round(fraction * n))
    m = max(1, min(n, m))
    return np.sort(gen.choice(n, size=m, replace=False))


def subsample_stability(
    X,
    fractions,
    embed_fn,
    trials: int,
    rng: RngState,
    min_subsample: int = 2,
    allow_reflection: bool = True,
) -> list[StabilityRow]:
    """Stability table over subsample fractions.

    ``embed_fn(X_subset)`` must run the full deterministic pipeline (the
    seed lives inside it, so a fraction-1.0 subsample reproduces the full
    embedding exactly).  Trials differ only in which points are subsampled.
    """
    X = as_data_array(X)
    fractions = [float(f) for f in fractions]
    if any(not 0.0 < f <= 1.0 for f in fractions):
        raise ValueError("fractions must lie in (0, 1]")
    if sorted(fractions) != fractions:
        raise ValueError("fractions must be sorted ascending")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = X.shape[0]
    for f in fractions:
        if int(round(f * n)) < min_subsample:
            raise ValueError(
                f"fraction {f} keeps {int(round(f * n))} points, "
                f"below the minimum {min_subsample}"
            )

    full = embed_fn(X)
    rows = []
    for f in fractions:
        dists = []
        for t in range(trials):
            gen = rng.stream(f"subsample-{f!r}-{t}")
            keep = subsample_indices(n, f, gen)
            sub = embed_fn(X[keep])
            dists.append(normalized_procrustes(full[keep], sub,
                                               allow_reflection=allow_reflection))
        arr = np.array(dists)
        rows.append(StabilityRow(
            fraction=f,
            mean=float(arr.mean()),
            std=float(arr.std()),
            distances=tuple(dists),
        ))
    return rows


def neighbor_preservation(X, Y, metric: Metric, k: int) -> float:
    """Mean overlap of k-neighbor sets between input and embedding spaces."""
    X = as_data_array(X)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.shape[0] != X.shape[0]:
        raise ValueError("X and Y must have the same number of rows")
    if not 1 <= k < X.shape[0]:
        raise ValueError("need 1 <= k < N")
    source = exact_knn(X, metric, k)
    target = exact_knn(Y, Metric("euclidean"), k)
    n = X.shape[0]
    hits = 0
    for i in range(n):
        hits += np.intersect1d(source.indices[i], target.indices[i]).size
    return hits / (n * k)
