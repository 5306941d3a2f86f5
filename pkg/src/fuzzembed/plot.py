"""Static SVG scatter plots of 2-D embeddings."""

from __future__ import annotations

import numpy as np

# fixed categorical palette, reused cyclically past 12 classes
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
)

MARGIN_FRACTION = 0.05
CANVAS = 640
POINT_RADIUS = 2.5


def _scaling(coords: np.ndarray):
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    pad = MARGIN_FRACTION * span
    lo, hi = lo - pad, hi + pad
    scale = CANVAS / (hi - lo).max()
    return lo, scale


def scatter_svg(coords, labels=None) -> str:
    """One circle per point; categorical labels map to the fixed palette."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValueError(
            f"plotting needs 2-D coordinates, got {coords.shape[1] if coords.ndim == 2 else coords.ndim} columns"
        )
    n = coords.shape[0]
    if labels is not None:
        if len(labels) != n:
            raise ValueError(
                f"label count {len(labels)} does not match point count {n}"
            )
        classes = sorted(set(labels))
        color_of = {c: PALETTE[i % len(PALETTE)] for i, c in enumerate(classes)}
        fills = [color_of[l] for l in labels]
    else:
        fills = [PALETTE[0]] * n

    lo, scale = _scaling(coords)
    xy = (coords - lo) * scale
    # SVG y axis points down; flip so plots read conventionally
    y_max = xy[:, 1].max()
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" '
        f'height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">',
        f'<rect width="{CANVAS}" height="{CANVAS}" fill="white"/>',
    ]
    for (x, y), fill in zip(xy, fills):
        parts.append(
            f'<circle cx="{x:.2f}" cy="{y_max - y:.2f}" r="{POINT_RADIUS}" '
            f'fill="{fill}" fill-opacity="0.8"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def write_scatter(path: str, coords, labels=None) -> None:
    svg = scatter_svg(coords, labels)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
        fh.write("\n")
