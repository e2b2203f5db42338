"""Dependency-free SVG heatmap of cell densities with optional path overlay.

Pure rendering: reads values, never changes them.  Colors follow a fixed
8-stop viridis-like ramp between the annotated min and max.
"""

from __future__ import annotations

import numpy as np

from .grid import GridDomain
from .pathflow import PathFlow

_RAMP = (
    "#440154", "#46327e", "#365c8d", "#277f8e",
    "#1fa187", "#4ac16d", "#a0da39", "#fde725",
)

_CANVAS = 640.0
_MARGIN = 24.0


def render_heatmap(
    domain: GridDomain,
    cell_values: np.ndarray,
    out_path,
    flow: PathFlow | None = None,
    max_paths: int = 20,
) -> None:
    if domain.kind != "grid":
        raise ValueError("SVG heatmaps require a lattice domain")
    values = np.asarray(cell_values, dtype=np.float64)
    vmin = float(values.min())
    vmax = float(values.max())
    span = vmax - vmin

    x0, y0, x1, y1 = domain.bounds
    scale = (_CANVAS - 2 * _MARGIN) / max(x1 - x0, y1 - y0)
    width = (x1 - x0) * scale + 2 * _MARGIN
    height = (y1 - y0) * scale + 2 * _MARGIN + 20

    def to_px(x: float, y: float) -> tuple[float, float]:
        return (_MARGIN + (x - x0) * scale, _MARGIN + (y1 - y) * scale)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>',
    ]
    cell_px = domain.h * scale
    for node in range(domain.n_nodes):
        if span > 0:
            stop = int((values[node] - vmin) / span * (len(_RAMP) - 1) + 0.5)
        else:
            stop = 0
        cx = x0 + domain.cell_ix[node] * domain.h
        cy = y0 + (domain.cell_iy[node] + 1) * domain.h
        px, py = to_px(cx, cy)
        parts.append(
            f'<rect x="{px:.2f}" y="{py:.2f}" width="{cell_px:.2f}" '
            f'height="{cell_px:.2f}" fill="{_RAMP[stop]}"/>'
        )
    if flow is not None and len(flow) > 0:
        order = np.argsort(flow.masses)[::-1][:max_paths]
        top_mass = float(flow.masses[order[0]])
        for idx in order:
            pts = " ".join(
                "{:.2f},{:.2f}".format(*to_px(*domain.node_xy[n]))
                for n in flow.paths[idx].nodes
            )
            w = 0.6 + 2.4 * float(flow.masses[idx]) / max(top_mass, 1e-300)
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="#ffffff" '
                f'stroke-opacity="0.7" stroke-width="{w:.2f}"/>'
            )
    parts.append(
        f'<text x="{_MARGIN:.0f}" y="{height - 6:.0f}" font-family="monospace" '
        f'font-size="12">min={vmin!r} max={vmax!r}</text>'
    )
    parts.append("</svg>")
    with open(out_path, "w") as fp:
        fp.write("\n".join(parts))
