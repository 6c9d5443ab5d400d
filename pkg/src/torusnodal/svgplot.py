"""Deterministic SVG rendering of nodal sets with optional ball overlays.

The drawing lives in a unit-square viewBox with the y axis flipped to the
usual mathematical orientation.  All coordinates are printed with six
decimals, so identical inputs yield byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .nodal import NodalSet
from .torus import wrap_delta

CANVAS = 640
SEGMENT_STROKE = "#1a466b"
BALL_STROKE = "#c2452d"
FRAME_STROKE = "#777777"


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def render_svg(nodal: NodalSet | None = None,
               centers: np.ndarray | None = None,
               radius: float | None = None) -> str:
    """Render segments and circles to an SVG string.

    Segments crossing the torus seam are drawn in the chart of their first
    endpoint, so nothing smears across the square.
    """
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" '
        f'height="{CANVAS}" viewBox="-0.01 -0.01 1.02 1.02">',
        '<rect x="0" y="0" width="1" height="1" fill="white" '
        f'stroke="{FRAME_STROKE}" stroke-width="0.002"/>',
    ]
    if nodal is not None and nodal.count:
        a = nodal.a
        b = a + wrap_delta(nodal.b - nodal.a)
        moves = []
        for k in range(a.shape[0]):
            moves.append(f"M{_fmt(a[k, 0])} {_fmt(1.0 - a[k, 1])}"
                         f"L{_fmt(b[k, 0])} {_fmt(1.0 - b[k, 1])}")
        parts.append(f'<path d="{"".join(moves)}" fill="none" '
                     f'stroke="{SEGMENT_STROKE}" stroke-width="0.0025" '
                     'stroke-linecap="round"/>')
    if centers is not None and radius is not None:
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        for c in centers:
            parts.append(f'<circle cx="{_fmt(c[0])}" cy="{_fmt(1.0 - c[1])}" '
                         f'r="{_fmt(radius)}" fill="none" '
                         f'stroke="{BALL_STROKE}" stroke-width="0.0012"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def balls_from_csv(path: str) -> tuple[np.ndarray, float]:
    """Read centers and the common radius from a cover CSV."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.size == 0:
        return np.empty((0, 2)), 0.0
    if rows.shape[1] < 3:
        raise ValueError(f"ball file {path} needs columns center_x,center_y,radius")
    return rows[:, :2], float(rows[0, 2])
