"""Initial coordinates from the symmetric normalized graph Laplacian.

The embedding uses the eigenvectors of the d smallest nonzero eigenvalues
of ``L = I - D^{-1/2} A D^{-1/2}``, computed per connected component, then
rescaled so the largest absolute coordinate is exactly INIT_SCALE.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from .data import RngState
from .fuzzy import FuzzyGraph

INIT_SCALE = 10.0  # max |coordinate| after rescaling
COMPONENT_SPACING = 20.0  # grid pitch for disconnected components
DENSE_CUTOFF = 512  # dense eigensolver at or below this size
ISOLATED_DEGREE = 1e-12
EIG_TOL = 1e-8


@dataclass(frozen=True)
class SpectralResult:
    coords: np.ndarray
    used_fallback: bool  # any component fell back to random placement


def normalized_laplacian(graph: FuzzyGraph) -> sp.csr_matrix:
    """Symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2}.

    Isolated vertices get a tiny positive degree so the normalization stays
    finite; eigenvalues lie in [0, 2] with smallest exactly 0.
    """
    if graph.n_vertices < 1:
        raise ValueError("graph must have at least one vertex")
    A = graph.to_csr()
    return _laplacian_from_adjacency(A)


def _laplacian_from_adjacency(A: sp.csr_matrix) -> sp.csr_matrix:
    n = A.shape[0]
    deg = np.asarray(A.sum(axis=1)).ravel()
    deg = np.maximum(deg, ISOLATED_DEGREE)
    dinv = 1.0 / np.sqrt(deg)
    norm = sp.diags(dinv) @ A @ sp.diags(dinv)
    L = sp.identity(n, format="csr") - norm
    # enforce exact symmetry against sparse round-off
    return ((L + L.T) * 0.5).tocsr()


def _component_eigvecs(A: sp.csr_matrix, d: int, gen: np.random.Generator):
    """Eigenvectors for the d smallest nonzero eigenvalues of one component."""
    n = A.shape[0]
    L = _laplacian_from_adjacency(A)
    if n <= DENSE_CUTOFF or d + 2 >= n:
        vals, vecs = np.linalg.eigh(L.toarray())
        take = min(d, n - 1)
        return vecs[:, 1:1 + take]
    v0 = gen.uniform(-1.0, 1.0, n)
    vals, vecs = eigsh(
        L, k=d + 1, sigma=-1e-6, which="LM", v0=v0,
        tol=EIG_TOL, maxiter=5 * n,
    )
    order = np.argsort(vals)
    return vecs[:, order[1:]]


def _sign_fix(vecs: np.ndarray) -> np.ndarray:
    # deterministic column signs: largest-magnitude entry made positive
    for c in range(vecs.shape[1]):
        col = vecs[:, c]
        lead = np.argmax(np.abs(col))
        if col[lead] < 0:
            vecs[:, c] = -col
    return vecs


def _grid_offsets(n_cells: int, d: int) -> np.ndarray:
    """Coarse grid centers for component placement, spacing COMPONENT_SPACING."""
    offsets = np.zeros((n_cells, d))
    if d == 1:
        offsets[:, 0] = np.arange(n_cells) * COMPONENT_SPACING
    else:
        side = int(np.ceil(np.sqrt(n_cells)))
        cells = np.arange(n_cells)
        offsets[:, 0] = (cells % side) * COMPONENT_SPACING
        offsets[:, 1] = (cells // side) * COMPONENT_SPACING
    return offsets


def spectral_embedding(graph: FuzzyGraph, d: int, rng: RngState) -> np.ndarray:
    """Seeded spectral initialization; see SpectralResult via spectral_embedding_full."""
    return spectral_embedding_full(graph, d, rng).coords


def spectral_embedding_full(graph: FuzzyGraph, d: int, rng: RngState) -> SpectralResult:
    n = graph.n_vertices
    if d < 1:
        raise ValueError("embedding dimension must be >= 1")
    if d + 1 > n:
        raise ValueError(f"need at least d+1={d + 1} vertices, have {n}")
    gen = rng.stream("spectral-init")
    A = graph.to_csr()
    n_comp, labels = connected_components(A, directed=False)

    coords = np.zeros((n, d))
    used_fallback = False
    # biggest component first so its layout claims the origin cell
    comp_ids = sorted(range(n_comp),
                      key=lambda c: (-(labels == c).sum(), int(np.argmax(labels == c))))
    offsets = _grid_offsets(n_comp, d)
    for cell, c in enumerate(comp_ids):
        members = np.flatnonzero(labels == c)
        size = members.size
        block = None
        if size >= max(2 * d, 2):
            try:
                sub = A[np.ix_(members, members)].tocsr()
                block = _sign_fix(_component_eigvecs(sub, d, gen))
                if block.shape[1] < d:  # solver came up short: pad columns
                    pad = gen.uniform(-1.0, 1.0, (size, d - block.shape[1]))
                    block = np.hstack([block, pad])
            except (ArpackError, ArpackNoConvergence, np.linalg.LinAlgError):
                used_fallback = True
        if block is None:
            # tiny components by design, larger ones only on solver failure
            block = gen.uniform(-1.0, 1.0, (size, d))
        peak = np.abs(block).max()
        if peak > 0:
            block = block * (INIT_SCALE / peak)
        coords[members] = block + offsets[cell]

    peak = np.abs(coords).max()
    if peak == 0.0:
        coords = gen.uniform(-1.0, 1.0, (n, d))
        peak = np.abs(coords).max()
    coords *= INIT_SCALE / peak
    return SpectralResult(coords=coords, used_fallback=used_fallback)


def random_init(n: int, d: int, rng: RngState) -> np.ndarray:
    """Seeded uniform coordinates in [-INIT_SCALE, INIT_SCALE]^d."""
    gen = rng.stream("random-init")
    return gen.uniform(-INIT_SCALE, INIT_SCALE, (n, d))
