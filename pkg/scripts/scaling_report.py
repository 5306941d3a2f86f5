#!/usr/bin/env python3
"""Runtime scaling report over doubling dataset sizes.

Runs the full pipeline (approximate kNN forced, fixed epoch count) on
synthetic mixtures and fits a log-log slope.  The slope is a sanity signal,
not a contract: anything at or above 1.5 prints a WARNING line but the
script still exits 0.
"""

import argparse
import time

import numpy as np

from fuzzembed import EmbedConfig, embed


def make_data(n, dim, clusters, seed):
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 10.0, (clusters, dim))
    labels = rng.integers(0, clusters, n)
    return centers[labels] + rng.normal(0.0, 1.0, (n, dim))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="2000,4000,8000,16000")
    ap.add_argument("--dim", type=int, default=10)
    ap.add_argument("--clusters", type=int, default=10)
    ap.add_argument("--n-epochs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    times = []
    for n in sizes:
        X = make_data(n, args.dim, args.clusters, seed=n)
        cfg = EmbedConfig(seed=args.seed, n_epochs=args.n_epochs,
                          exact_threshold=0)
        t0 = time.perf_counter()
        res = embed(X, cfg, compute_ce=False)
        dt = time.perf_counter() - t0
        times.append(dt)
        stage = ", ".join(f"{k} {v:.1f}s" for k, v in res.timings.items())
        print(f"N={n:>6}: total {dt:6.1f}s  ({stage})")

    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    print(f"log-log slope: {slope:.3f}")
    if slope >= 1.5:
        print(f"WARNING: slope {slope:.3f} >= 1.5")


if __name__ == "__main__":
    main()
