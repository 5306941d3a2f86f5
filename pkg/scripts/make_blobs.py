#!/usr/bin/env python3
"""Generate synthetic Gaussian-mixture data files for CLI experiments.

Writes a sample matrix (text or binary by extension) and an optional label
file usable with `fuzzembed plot --labels`.
"""

import argparse

import numpy as np

from fuzzembed.io import write_matrix


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("output", help="matrix path (.bin for binary)")
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--dim", type=int, default=20)
    ap.add_argument("--clusters", type=int, default=8)
    ap.add_argument("--center-scale", type=float, default=8.0)
    ap.add_argument("--intrinsic-dim", type=int, default=3,
                    help="strong covariance directions per cluster")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--labels", default=None, help="also write labels here")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    centers = rng.normal(0.0, args.center_scale, (args.clusters, args.dim))
    strong = min(args.intrinsic_dim, args.dim)
    scales = np.concatenate([
        np.linspace(3.0, 1.0, strong),
        np.full(args.dim - strong, 0.15),
    ])
    labels = rng.integers(0, args.clusters, args.n)
    X = np.empty((args.n, args.dim))
    for c in range(args.clusters):
        members = np.flatnonzero(labels == c)
        basis = np.linalg.qr(rng.normal(0, 1, (args.dim, args.dim)))[0]
        X[members] = centers[c] + (
            rng.normal(0, 1, (members.size, args.dim)) * scales
        ) @ basis.T

    write_matrix(args.output, X)
    print(f"wrote {args.n}x{args.dim} matrix to {args.output}")
    if args.labels:
        with open(args.labels, "w", encoding="utf-8") as fh:
            fh.writelines(f"{l}\n" for l in labels)
        print(f"wrote labels to {args.labels}")


if __name__ == "__main__":
    main()
