"""Command line surface: embed, stability, plot, knn.

Flag values override config-file values, which override defaults.  The
``--threads 1`` mode (also the default via the FUZZEMBED_THREADS variable)
is the deterministic configuration; higher counts only widen BLAS
threading inside the linear algebra stages.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .data import METRIC_NAMES, DataError, Metric, RngState
from .evaluate import neighbor_preservation, subsample_stability
from .io import (
    atomic_write,
    load_labels,
    load_matrix,
    resolve_format,
    write_graph,
    write_matrix,
)
from .knn import knn_graph
from .pipeline import EmbedConfig, embed, run_report
from .plot import write_scatter

_CONFIG_KEYS = (
    "metric", "n_neighbors", "n_components", "min_dist", "spread",
    "n_epochs", "n_neg_samples", "initial_alpha", "repulsion_eps",
    "grad_clip", "init", "exact_threshold", "one_sided_attraction", "seed",
)


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("FUZZEMBED_THREADS", "1")))
    except ValueError:
        return 1


def _apply_threads(n: int) -> None:
    # stage internals are single-threaded by construction; this only
    # bounds BLAS pools, and silently does nothing if threadpoolctl is absent
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=n)
    except Exception:
        pass


def _add_embed_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="sample matrix (text or .bin)")
    p.add_argument("--format", default="auto",
                   choices=["auto", "text", "binary", "binary32"],
                   help="input format; binary32 is promoted to float64 "
                        "(default: %(default)s, by extension)")
    p.add_argument("--metric", default=None, choices=list(METRIC_NAMES),
                   help="dissimilarity measure (default: euclidean)")
    p.add_argument("--n-neighbors", type=int, default=None,
                   help="neighborhood size k (default: 15)")
    p.add_argument("--n-components", type=int, default=None,
                   help="embedding dimension d (default: 2)")
    p.add_argument("--min-dist", type=float, default=None,
                   help="desired separation between close points (default: 0.1)")
    p.add_argument("--spread", type=float, default=None,
                   help="decay scale of the membership target (default: 1.0)")
    p.add_argument("--n-epochs", type=int, default=None,
                   help="optimization epochs (default: 500 up to 10k points, 200 beyond)")
    p.add_argument("--n-neg-samples", type=int, default=None,
                   help="negative samples per attractive update (default: 5)")
    p.add_argument("--learning-rate", type=float, default=None, dest="initial_alpha",
                   help="initial SGD step size (default: 1.0)")
    p.add_argument("--repulsion-eps", type=float, default=None,
                   help="repulsive gradient regularizer (default: 0.001)")
    p.add_argument("--grad-clip", type=float, default=None,
                   help="per-component gradient clip (default: 4.0)")
    p.add_argument("--init", default=None, choices=["spectral", "random"],
                   help="initial coordinates (default: spectral)")
    p.add_argument("--exact-knn-threshold", type=int, default=None,
                   dest="exact_threshold",
                   help="use exhaustive kNN at or below this size (default: 4096)")
    p.add_argument("--one-sided-attraction", action="store_true", default=None,
                   help="update only the first endpoint of each sampled edge "
                        "(default: both endpoints move)")
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (default: 0)")
    p.add_argument("--config", default=None,
                   help="JSON config file; flags take precedence over it")
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="BLAS thread bound; 1 is the deterministic mode "
                        "(default: FUZZEMBED_THREADS or 1)")


def _build_config(args) -> EmbedConfig:
    values = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        unknown = set(raw) - set(_CONFIG_KEYS)
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return EmbedConfig(**values)


def _write_report(path: str, report: dict) -> None:
    atomic_write(path, lambda p: _dump_json(p, report))


def _dump_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_embed(args) -> int:
    _apply_threads(args.threads)
    config = _build_config(args)
    X = load_matrix(args.input, args.format)
    result = embed(X, config)
    report = run_report(config, result, X.n_samples, X.n_features)

    # resolve the format against the final path: atomic_write stages the
    # output under a .tmp name that would defeat extension sniffing
    out_fmt = resolve_format(args.output, args.output_format)
    atomic_write(args.output,
                 lambda p: write_matrix(p, result.coords, out_fmt))
    if args.graph_out:
        # re-derive the fuzzy graph for serialization (cheap next to layout)
        from .fuzzy import build_fuzzy_graph

        g, _, _ = build_fuzzy_graph(
            X, Metric(config.metric), config.n_neighbors,
            RngState(config.seed), exact_threshold=config.exact_threshold,
        )
        g_fmt = resolve_format(args.graph_out, "auto")
        atomic_write(args.graph_out, lambda p: write_graph(
            p, g.n_vertices, g.rows, g.cols, g.weights, g_fmt))
    report_path = args.report or args.output + ".report.json"
    _write_report(report_path, report)
    if args.plot:
        labels = load_labels(args.labels) if args.labels else None
        atomic_write(args.plot, lambda p: write_scatter(p, result.coords, labels))
    return 0


def cmd_stability(args) -> int:
    _apply_threads(args.threads)
    config = _build_config(args)
    X = load_matrix(args.input, args.format)
    try:
        fractions = [float(f) for f in args.fractions.split(",") if f]
    except ValueError:
        raise DataError(f"unparseable fractions list {args.fractions!r}") from None
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise DataError(f"fraction {f} outside (0, 1]")
    fractions.sort()

    def embed_fn(subset):
        return embed(subset, config, compute_ce=False).coords

    rows = subsample_stability(
        X, fractions, embed_fn, trials=args.trials,
        rng=RngState(config.seed),
        min_subsample=config.n_neighbors + 1,
        allow_reflection=not args.no_reflections,
    )

    def write_table(path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("fraction mean stddev\n")
            for row in rows:
                fh.write(f"{row.fraction:g} {row.mean:.10g} {row.std:.10g}\n")

    atomic_write(args.output, write_table)
    report = {
        "schema_version": 1,
        "config": {k: getattr(config, k) for k in _CONFIG_KEYS},
        "fractions": fractions,
        "trials": args.trials,
        "rows": [
            {"fraction": r.fraction, "mean": r.mean, "std": r.std,
             "distances": list(r.distances)}
            for r in rows
        ],
    }
    _write_report(args.report or args.output + ".report.json", report)
    return 0


def cmd_plot(args) -> int:
    coords = load_matrix(args.embedding, args.format).values
    labels = load_labels(args.labels) if args.labels else None
    atomic_write(args.output, lambda p: write_scatter(p, coords, labels))
    return 0


def cmd_knn(args) -> int:
    _apply_threads(args.threads)
    config = _build_config(args)
    X = load_matrix(args.input, args.format)
    graph = knn_graph(
        X, Metric(config.metric), config.n_neighbors,
        RngState(config.seed), exact_threshold=config.exact_threshold,
    )
    n, k = graph.indices.shape
    rows = np.repeat(np.arange(n), k)
    fmt = resolve_format(args.output, "auto")
    atomic_write(args.output, lambda p: write_graph(
        p, n, rows, graph.indices.ravel(), graph.distances.ravel(), fmt))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzembed",
        description="Fuzzy-graph dimension reduction and stability evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed a sample matrix")
    _add_embed_flags(p)
    p.add_argument("--output", "-o", required=True, help="embedding output path")
    p.add_argument("--output-format", default="auto",
                   choices=["auto", "text", "binary"],
                   help="embedding file format (default: %(default)s)")
    p.add_argument("--graph-out", default=None,
                   help="also write the fuzzy graph (COO)")
    p.add_argument("--report", default=None,
                   help="report path (default: <output>.report.json)")
    p.add_argument("--plot", default=None, help="also write an SVG scatter")
    p.add_argument("--labels", default=None,
                   help="label file for --plot, one label per line")
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("stability", help="subsample stability protocol")
    _add_embed_flags(p)
    p.add_argument("--fractions", required=True,
                   help="comma separated subsample fractions in (0, 1]")
    p.add_argument("--trials", type=int, default=5,
                   help="subsample draws per fraction (default: %(default)s)")
    p.add_argument("--no-reflections", action="store_true",
                   help="restrict alignment to proper rotations")
    p.add_argument("--output", "-o", required=True, help="stability table path")
    p.add_argument("--report", default=None,
                   help="report path (default: <output>.report.json)")
    p.set_defaults(fn=cmd_stability)

    p = sub.add_parser("plot", help="SVG scatter of a 2-D embedding")
    p.add_argument("embedding", help="embedding file (text or .bin)")
    p.add_argument("--format", default="auto",
                   choices=["auto", "text", "binary"])
    p.add_argument("--labels", default=None, help="one label per line")
    p.add_argument("--output", "-o", required=True, help="SVG output path")
    p.set_defaults(fn=cmd_plot)

    p = sub.add_parser("knn", help="dump the k-nearest-neighbor graph (COO)")
    _add_embed_flags(p)
    p.add_argument("--output", "-o", required=True, help="graph output path")
    p.set_defaults(fn=cmd_knn)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (DataError, ValueError, RuntimeError, FloatingPointError, OSError) as exc:
        print(f"fuzzembed: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
