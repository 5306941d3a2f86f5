"""Membership curve fitting and stochastic cross-entropy layout.

The low-dimensional membership of a pair at squared distance t is
``phi(t) = 1 / (1 + a * t**b)``.  The (a, b) pair is fitted so that the
curve's decay beyond the min-dist plateau matches the target

    psi(x) = 1                                   if x <= min_dist
             exp(-(x - min_dist) / spread)       otherwise

by damped least squares.  Coordinates are then optimized by sampled
stochastic gradient descent: each edge fires an attractive update with
probability equal to its weight, followed by repulsive updates against
uniformly sampled vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .data import RngState
from .fuzzy import FuzzyGraph

FIT_GRID_POINTS = 300
FIT_GRID_SPAN = 3.0  # in units of spread
FIT_MAX_ITERS = 200

DEFAULT_MIN_DIST = 0.1
DEFAULT_SPREAD = 1.0
DEFAULT_N_NEG_SAMPLES = 5
DEFAULT_ALPHA = 1.0
DEFAULT_REPULSION_EPS = 0.001
DEFAULT_GRAD_CLIP = 4.0

_CE_CLAMP = 1e-12


@dataclass(frozen=True)
class CurveParams:
    """Parameters of the membership curve (1 + a * t**b)^-1 on squared distance."""

    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f"curve parameters must be positive, got {self}")


@dataclass(frozen=True)
class OptimizerConfig:
    min_dist: float = DEFAULT_MIN_DIST
    spread: float = DEFAULT_SPREAD
    n_epochs: int = 500
    n_neg_samples: int = DEFAULT_N_NEG_SAMPLES
    initial_alpha: float = DEFAULT_ALPHA
    repulsion_eps: float = DEFAULT_REPULSION_EPS
    grad_clip: float = DEFAULT_GRAD_CLIP
    move_both: bool = True  # apply the opposite attractive update to the far endpoint

    def __post_init__(self):
        if self.min_dist < 0 or self.spread <= 0:
            raise ValueError("need min_dist >= 0 and spread > 0")
        if self.min_dist >= 10.0 * self.spread:
            raise ValueError("min_dist must be below 10 * spread")
        if self.n_epochs < 1 or self.n_neg_samples < 1:
            raise ValueError("need n_epochs >= 1 and n_neg_samples >= 1")
        if self.initial_alpha <= 0 or self.repulsion_eps <= 0 or self.grad_clip <= 0:
            raise ValueError("rates, eps and clip must be positive")


# ---------------------------------------------------------------------------
# curve fitting
# ---------------------------------------------------------------------------


def membership_target(x: np.ndarray, min_dist: float, spread: float) -> np.ndarray:
    """Piecewise target: flat at 1 out to min_dist, exponential decay beyond."""
    y = np.ones_like(x)
    tail = x > min_dist
    y[tail] = np.exp(-(x[tail] - min_dist) / spread)
    return y


def _fit_residuals(params, x, y, min_dist):
    a, b = params
    t = np.maximum(x - min_dist, 0.0)
    tb = t ** (2.0 * b)
    model = 1.0 / (1.0 + a * tb)
    resid = model - y
    denom = (1.0 + a * tb) ** 2
    with np.errstate(divide="ignore"):
        logt = np.where(t > 0.0, np.log(np.maximum(t, 1e-300)), 0.0)
    ja = -tb / denom
    jb = -2.0 * a * tb * logt / denom
    return resid, np.column_stack([ja, jb])


def fit_phi(min_dist: float = DEFAULT_MIN_DIST, spread: float = DEFAULT_SPREAD) -> CurveParams:
    """Fit the membership curve to the min-dist target.

    Levenberg-Marquardt style damped least squares from (a, b) = (1, 1)
    with gain-ratio adapted damping, over 300 evenly spaced distances in
    [0, 3 * spread].  The curve argument is the distance beyond the
    min-dist plateau, which keeps the fitted decay profile aligned with
    the target's.
    """
    if spread <= 0 or min_dist < 0:
        raise ValueError("need spread > 0 and min_dist >= 0")
    x = np.linspace(0.0, FIT_GRID_SPAN * spread, FIT_GRID_POINTS)
    y = membership_target(x, min_dist, spread)

    p = np.array([1.0, 1.0])
    resid, J = _fit_residuals(p, x, y, min_dist)
    cost = float(resid @ resid)
    mu = 1e-3 * np.diag(J.T @ J).max()
    nu = 2.0
    for _ in range(FIT_MAX_ITERS):
        JT = J.T
        g = JT @ resid
        if np.max(np.abs(g)) < 1e-12 or mu > 1e15:
            break
        H = JT @ J + mu * np.eye(2)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            raise RuntimeError(
                f"curve fit diverged at (a, b) = {tuple(p)}; damping singular"
            ) from None
        p_new = p + step
        if p_new[0] <= 0 or p_new[1] <= 0:
            mu *= nu
            nu *= 2.0
            continue
        resid_new, J_new = _fit_residuals(p_new, x, y, min_dist)
        cost_new = float(resid_new @ resid_new)
        predicted = float(step @ (mu * step - g))
        gain = (cost - cost_new) / predicted if predicted > 0 else -1.0
        if gain > 0:
            improvement = cost - cost_new
            p, resid, J, cost = p_new, resid_new, J_new, cost_new
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0) ** 3)
            nu = 2.0
            if improvement < 1e-15 and np.max(np.abs(step)) < 1e-10:
                break
        else:
            mu *= nu
            nu *= 2.0
    rms = float(np.sqrt(cost / x.size))
    if not np.isfinite(cost) or rms > 0.05:
        raise RuntimeError(
            f"curve fit failed: rms residual {rms:.4g} at (a, b) = {tuple(p)}"
        )
    return CurveParams(a=float(p[0]), b=float(p[1]))


def fit_rms_residual(params: CurveParams, min_dist: float, spread: float) -> float:
    """RMS residual of the fitted decay against the target on the fit grid."""
    x = np.linspace(0.0, FIT_GRID_SPAN * spread, FIT_GRID_POINTS)
    y = membership_target(x, min_dist, spread)
    t = np.maximum(x - min_dist, 0.0)
    model = 1.0 / (1.0 + params.a * t ** (2.0 * params.b))
    return float(np.sqrt(np.mean((model - y) ** 2)))


# ---------------------------------------------------------------------------
# membership curve and its gradients
# ---------------------------------------------------------------------------


def phi(params: CurveParams, sq_dist) -> np.ndarray | float:
    """Membership in (0, 1] for one or many squared distances."""
    t = np.asarray(sq_dist, dtype=np.float64)
    if (t < 0).any():
        raise ValueError("squared distances must be non-negative")
    out = 1.0 / (1.0 + params.a * t ** params.b)
    return float(out) if out.ndim == 0 else out


def attractive_gradient(params: CurveParams, y_i, y_j, grad_clip: float | None = None):
    """Gradient of log phi with respect to y_i; zero for coincident points."""
    diff = np.asarray(y_i, dtype=np.float64) - np.asarray(y_j, dtype=np.float64)
    t = float(diff @ diff)
    if t == 0.0:
        return np.zeros_like(diff)
    coeff = -2.0 * params.a * params.b * t ** (params.b - 1.0) / (1.0 + params.a * t ** params.b)
    g = coeff * diff
    if grad_clip is not None:
        np.clip(g, -grad_clip, grad_clip, out=g)
    return g


def repulsive_gradient(params: CurveParams, y_i, y_c, eps: float = DEFAULT_REPULSION_EPS,
                       grad_clip: float | None = None):
    """Gradient of log(1 - phi) with respect to y_i, eps-regularized.

    The regularizer replaces the leading 1/t factor by 1/(eps + t), keeping
    the update finite for near-coincident pairs.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    diff = np.asarray(y_i, dtype=np.float64) - np.asarray(y_c, dtype=np.float64)
    t = float(diff @ diff)
    coeff = 2.0 * params.b / ((eps + t) * (1.0 + params.a * t ** params.b))
    g = coeff * diff
    if grad_clip is not None:
        np.clip(g, -grad_clip, grad_clip, out=g)
    return g


# ---------------------------------------------------------------------------
# cross entropy
# ---------------------------------------------------------------------------


def _bernoulli_kl(mu: np.ndarray, nu: np.ndarray) -> np.ndarray:
    nu = np.clip(nu, _CE_CLAMP, 1.0 - _CE_CLAMP)
    mu = np.clip(mu, 0.0, 1.0)
    out = np.zeros_like(nu)
    pos = mu > 0.0
    out[pos] += mu[pos] * np.log(mu[pos] / nu[pos])
    neg = mu < 1.0
    out[neg] += (1.0 - mu[neg]) * np.log((1.0 - mu[neg]) / (1.0 - nu[neg]))
    return out


def cross_entropy(
    graph: FuzzyGraph,
    Y: np.ndarray,
    params: CurveParams,
    n_pair_samples: int | None = None,
    rng: RngState | None = None,
) -> float:
    """Fuzzy cross entropy between graph weights and embedding memberships.

    Off-graph pairs carry membership 0.  With ``n_pair_samples`` unset every
    pair is visited; otherwise the off-edge term is estimated from that many
    uniformly sampled pairs (edges are always evaluated exactly).
    """
    n = graph.n_vertices
    Y = np.asarray(Y, dtype=np.float64)
    if Y.shape[0] != n:
        raise ValueError(f"embedding has {Y.shape[0]} rows, graph has {n} vertices")

    d_edge = Y[graph.rows] - Y[graph.cols]
    t_edge = np.einsum("ij,ij->i", d_edge, d_edge)
    nu_edge = np.clip(phi(params, t_edge), _CE_CLAMP, 1.0 - _CE_CLAMP)
    edge_term = float(_bernoulli_kl(graph.weights, nu_edge).sum())
    # edges are also covered by the all-pairs background sweep; remove that
    edge_background = float(-np.log1p(-nu_edge).sum())

    if n_pair_samples is None:
        background = 0.0
        block = max(1, int(2**22 / max(n, 1)))
        for s in range(0, n, block):
            e = min(n, s + block)
            d2 = _sq_dists_block(Y, s, e)
            nu = np.clip(phi(params, d2), _CE_CLAMP, 1.0 - _CE_CLAMP)
            mask = np.arange(s, e)[:, None] < np.arange(n)[None, :]
            background += float(-(np.log1p(-nu) * mask).sum())
        return edge_term + background - edge_background

    if rng is None:
        raise ValueError("sampled evaluation needs an rng")
    gen = rng.stream("cross-entropy") if isinstance(rng, RngState) else rng
    total_pairs = n * (n - 1) // 2
    m = min(n_pair_samples, total_pairs)
    i = gen.integers(0, n, size=2 * m)
    j = gen.integers(0, n, size=2 * m)
    keep = i != j
    i, j = i[keep][:m], j[keep][:m]
    d = Y[i] - Y[j]
    t = np.einsum("ij,ij->i", d, d)
    nu = np.clip(phi(params, t), _CE_CLAMP, 1.0 - _CE_CLAMP)
    background = float(-np.log1p(-nu).mean()) * total_pairs
    return edge_term + background - edge_background


def _sq_dists_block(Y: np.ndarray, s: int, e: int) -> np.ndarray:
    sq = np.einsum("ij,ij->i", Y, Y)
    d2 = sq[s:e, None] + sq[None, :] - 2.0 * (Y[s:e] @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


# ---------------------------------------------------------------------------
# stochastic gradient descent
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _next_u64(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _to_unit(z):
    return (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _sgd_kernel(Y, head, tail, weight, n_epochs, a, b, eps, n_neg,
                alpha0, clip, move_both, edge_seed, neg_seed):
    n, dim = Y.shape
    n_edges = head.size
    es = edge_seed
    ns = neg_seed
    for epoch in range(1, n_epochs + 1):
        alpha = alpha0 * (1.0 - epoch / n_epochs)
        for m in range(n_edges):
            es, z = _next_u64(es)
            if _to_unit(z) > weight[m]:
                continue
            i = head[m]
            j = tail[m]
            t = 0.0
            for c in range(dim):
                diff = Y[i, c] - Y[j, c]
                t += diff * diff
            if t > 0.0:
                coeff = (-2.0 * a * b * t ** (b - 1.0)) / (1.0 + a * t**b)
            else:
                coeff = 0.0
            for c in range(dim):
                g = coeff * (Y[i, c] - Y[j, c])
                if g > clip:
                    g = clip
                elif g < -clip:
                    g = -clip
                Y[i, c] += alpha * g
                if move_both:
                    Y[j, c] -= alpha * g
            for _ in range(n_neg):
                ns, z = _next_u64(ns)
                cand = int(_to_unit(z) * n)
                t = 0.0
                for c in range(dim):
                    diff = Y[i, c] - Y[cand, c]
                    t += diff * diff
                coeff = (2.0 * b) / ((eps + t) * (1.0 + a * t**b))
                for c in range(dim):
                    g = coeff * (Y[i, c] - Y[cand, c])
                    if g > clip:
                        g = clip
                    elif g < -clip:
                        g = -clip
                    Y[i, c] += alpha * g
            for c in range(dim):
                if not np.isfinite(Y[i, c]) or not np.isfinite(Y[j, c]):
                    return epoch, m
    return 0, -1


@njit(cache=True)
def _neg_sample_counts(seed, n, draws):
    """Histogram of the kernel's negative-sample vertex draws (test hook)."""
    counts = np.zeros(n, dtype=np.int64)
    state = seed
    for _ in range(draws):
        state, z = _next_u64(state)
        counts[int(_to_unit(z) * n)] += 1
    return counts


def optimize_embedding(
    graph: FuzzyGraph,
    Y0: np.ndarray,
    cfg: OptimizerConfig,
    params: CurveParams,
    rng: RngState,
) -> np.ndarray:
    """Run the sampled SGD layout; returns new coordinates.

    Epoch e uses learning rate ``initial_alpha * (1 - e / n_epochs)``.
    Deterministic for a fixed seed; single-threaded.
    """
    Y = np.array(Y0, dtype=np.float64, order="C", copy=True)
    if Y.ndim != 2 or Y.shape[0] != graph.n_vertices:
        raise ValueError("Y0 must be (n_vertices, d)")
    if not np.isfinite(Y).all():
        raise ValueError("initial coordinates contain non-finite values")
    if graph.n_edges == 0:
        return Y
    bad_epoch, bad_edge = _sgd_kernel(
        Y,
        graph.rows,
        graph.cols,
        graph.weights,
        cfg.n_epochs,
        params.a,
        params.b,
        cfg.repulsion_eps,
        cfg.n_neg_samples,
        cfg.initial_alpha,
        cfg.grad_clip,
        cfg.move_both,
        rng.kernel_seed("edge-sampling"),
        rng.kernel_seed("negative-sampling"),
    )
    if bad_epoch:
        raise FloatingPointError(
            f"non-finite coordinate during epoch {bad_epoch} at edge {bad_edge}"
        )
    return Y
