"""Top-level embedding pipeline and run reporting."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .data import METRIC_NAMES, Metric, RngState, as_data_array
from .fuzzy import build_fuzzy_graph
from .layout import (
    DEFAULT_ALPHA,
    DEFAULT_GRAD_CLIP,
    DEFAULT_MIN_DIST,
    DEFAULT_N_NEG_SAMPLES,
    DEFAULT_REPULSION_EPS,
    DEFAULT_SPREAD,
    CurveParams,
    OptimizerConfig,
    cross_entropy,
    fit_phi,
    optimize_embedding,
)
from .spectral import random_init, spectral_embedding_full

DEFAULT_N_NEIGHBORS = 15
DEFAULT_N_COMPONENTS = 2
DEFAULT_EXACT_THRESHOLD = 4096
AUTO_EPOCHS_SMALL = 500  # datasets up to AUTO_EPOCHS_CUTOFF points
AUTO_EPOCHS_LARGE = 200
AUTO_EPOCHS_CUTOFF = 10_000

CE_SAMPLE_PAIRS = 200_000


@dataclass(frozen=True)
class EmbedConfig:
    """Hyper-parameters for one embedding run (not including I/O)."""

    metric: str = "euclidean"
    n_neighbors: int = DEFAULT_N_NEIGHBORS
    n_components: int = DEFAULT_N_COMPONENTS
    min_dist: float = DEFAULT_MIN_DIST
    spread: float = DEFAULT_SPREAD
    n_epochs: int | None = None  # None: 500 up to 10k points, 200 beyond
    n_neg_samples: int = DEFAULT_N_NEG_SAMPLES
    initial_alpha: float = DEFAULT_ALPHA
    repulsion_eps: float = DEFAULT_REPULSION_EPS
    grad_clip: float = DEFAULT_GRAD_CLIP
    init: str = "spectral"
    exact_threshold: int = DEFAULT_EXACT_THRESHOLD
    one_sided_attraction: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.metric not in METRIC_NAMES:
            raise ValueError(f"metric must be one of {METRIC_NAMES}")
        if self.n_neighbors < 2:
            raise ValueError("n_neighbors must be >= 2")
        if self.n_components < 1:
            raise ValueError("n_components must be >= 1")
        if self.init not in ("spectral", "random"):
            raise ValueError("init must be 'spectral' or 'random'")
        if self.n_epochs is not None and self.n_epochs < 1:
            raise ValueError("n_epochs must be >= 1")

    def resolve_epochs(self, n_samples: int) -> int:
        if self.n_epochs is not None:
            return self.n_epochs
        return AUTO_EPOCHS_SMALL if n_samples <= AUTO_EPOCHS_CUTOFF else AUTO_EPOCHS_LARGE

    def optimizer_config(self, n_samples: int) -> OptimizerConfig:
        return OptimizerConfig(
            min_dist=self.min_dist,
            spread=self.spread,
            n_epochs=self.resolve_epochs(n_samples),
            n_neg_samples=self.n_neg_samples,
            initial_alpha=self.initial_alpha,
            repulsion_eps=self.repulsion_eps,
            grad_clip=self.grad_clip,
            move_both=not self.one_sided_attraction,
        )


@dataclass
class EmbedResult:
    coords: np.ndarray
    curve: CurveParams
    graph_edges: int
    sigma_clamped: int
    timings: dict = field(default_factory=dict)
    weight_histogram: list = field(default_factory=list)
    initial_cross_entropy: float = float("nan")
    final_cross_entropy: float = float("nan")
    spectral_fallback: bool = False


def embed(X, config: EmbedConfig = EmbedConfig(), compute_ce: bool = True) -> EmbedResult:
    """Run the full pipeline: kNN graph, calibration, init, layout."""
    X = as_data_array(X)
    n = X.shape[0]
    if config.n_neighbors > n - 1:
        raise ValueError(
            f"n_neighbors={config.n_neighbors} needs at least "
            f"{config.n_neighbors + 1} samples, have {n}"
        )
    metric = Metric(config.metric)
    rng = RngState(config.seed)
    timings = {}

    t0 = time.perf_counter()
    graph, knn_params, _ = build_fuzzy_graph(
        X, metric, config.n_neighbors, rng, exact_threshold=config.exact_threshold
    )
    timings["graph"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fallback = False
    if config.init == "spectral":
        init_result = spectral_embedding_full(graph, config.n_components, rng)
        Y0, fallback = init_result.coords, init_result.used_fallback
    else:
        Y0 = random_init(n, config.n_components, rng)
    timings["init"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    curve = fit_phi(config.min_dist, config.spread)
    opt_cfg = config.optimizer_config(n)
    ce_samples = None if n * (n - 1) // 2 <= CE_SAMPLE_PAIRS else CE_SAMPLE_PAIRS
    ce0 = (
        cross_entropy(graph, Y0, curve, n_pair_samples=ce_samples, rng=rng)
        if compute_ce else float("nan")
    )
    Y = optimize_embedding(graph, Y0, opt_cfg, curve, rng)
    ce1 = (
        cross_entropy(graph, Y, curve, n_pair_samples=ce_samples, rng=rng)
        if compute_ce else float("nan")
    )
    timings["layout"] = time.perf_counter() - t0

    hist, _ = np.histogram(graph.weights, bins=10, range=(0.0, 1.0))
    return EmbedResult(
        coords=Y,
        curve=curve,
        graph_edges=graph.n_edges,
        sigma_clamped=knn_params.n_clamped,
        timings=timings,
        weight_histogram=hist.tolist(),
        initial_cross_entropy=ce0,
        final_cross_entropy=ce1,
        spectral_fallback=fallback,
    )


def run_report(config: EmbedConfig, result: EmbedResult, n_samples: int,
               n_features: int, extra: dict | None = None) -> dict:
    """Machine-readable record that, with the input file, pins down the run."""
    import numba
    import scipy

    cfg = asdict(config)
    cfg["n_epochs"] = config.resolve_epochs(n_samples)
    report = {
        "schema_version": 1,
        "config": cfg,
        "seed": config.seed,
        "data": {"n_samples": n_samples, "n_features": n_features},
        "curve": {"a": result.curve.a, "b": result.curve.b},
        "graph": {
            "n_vertices": n_samples,
            "n_edges": result.graph_edges,
            "weight_histogram": result.weight_histogram,
            "sigma_clamped": result.sigma_clamped,
        },
        "cross_entropy": {
            "initial": result.initial_cross_entropy,
            "final": result.final_cross_entropy,
        },
        "spectral_fallback": result.spectral_fallback,
        "timings_sec": {k: round(v, 6) for k, v in result.timings.items()},
        "versions": {
            "fuzzembed": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
    }
    if extra:
        report.update(extra)
    return report
