"""SVG drawings of planar Laguerre tessellations.

Cells are filled by activation time with a linear colormap: h is mapped to
s = (h - h_min) / (h_max - h_min) over the realized range of the drawn
extreme seeds, and the fill is the RGB interpolation
(1 - s) * LOW_COLOR + s * HIGH_COLOR.  Nuclei of extreme seeds are marked
as dots; non-extreme seeds are omitted or drawn as gray dots.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .errors import PreconditionError
from .model import Box
from .serialize import atomic_write_text
from .tessellation import TessellationResult

LOW_COLOR = (255, 247, 188)  # earliest activation
HIGH_COLOR = (37, 52, 148)  # latest activation
FLAT_COLOR = (200, 215, 235)
NUCLEUS_COLOR = "#1f4fd1"
GRAY = "#9a9a9a"


def time_color(h: float, h_min: float, h_max: float) -> str:
    """Hex color of time ``h`` under the linear colormap on [h_min, h_max]."""
    if not np.isfinite(h_min) or not np.isfinite(h_max) or h_max <= h_min:
        s = 0.0
    else:
        s = float(np.clip((h - h_min) / (h_max - h_min), 0.0, 1.0))
    rgb = [round((1 - s) * a + s * b) for a, b in zip(LOW_COLOR, HIGH_COLOR)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def default_canvas(T: TessellationResult) -> Box:
    pos = T.seeds.positions
    lo, hi = pos.min(0), pos.max(0)
    margin = max(0.1 * float(np.max(hi - lo)), 1.0)
    return Box(tuple(lo - margin), tuple(hi + margin))


def render_svg(T: TessellationResult, canvas: Box | None = None, size: int = 800,
               color_by_time: bool = True, show_empty: bool = False) -> str:
    """SVG text: one polygon per extreme seed whose cell meets the canvas."""
    if T.seeds.d != 2:
        raise PreconditionError("SVG output needs d = 2")
    canvas = canvas or default_canvas(T)
    lo, hi = np.asarray(canvas.lo, float), np.asarray(canvas.hi, float)
    span = hi - lo
    scale = size / float(span.max())
    width, height = span * scale

    def xy(p):
        # flip y so that the picture has the usual orientation
        return (p[0] - lo[0]) * scale, (hi[1] - p[1]) * scale

    pos, h = T.seeds.positions, T.seeds.heights
    ext = np.flatnonzero(T.extreme)
    polys = {}
    for i in ext:
        poly = T.cell(int(i)).clip(canvas)
        if len(poly) >= 3 and _area(poly) > 0:
            polys[int(i)] = poly
    hs = h[list(polys)] if polys else np.empty(0)
    h_min, h_max = (float(hs.min()), float(hs.max())) if len(hs) else (0.0, 0.0)

    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "width": f"{width:.2f}", "height": f"{height:.2f}",
        "viewBox": f"0 0 {width:.2f} {height:.2f}",
    })
    ET.SubElement(svg, "desc").text = (
        f"Laguerre cells colored linearly by activation time on [{h_min:.6g}, {h_max:.6g}]"
    )
    cells = ET.SubElement(svg, "g", {"id": "cells", "stroke": "#333333", "stroke-width": "0.6"})
    for i, poly in polys.items():
        fill = time_color(h[i], h_min, h_max) if color_by_time else "#{:02x}{:02x}{:02x}".format(*FLAT_COLOR)
        pts = " ".join("{:.3f},{:.3f}".format(*xy(p)) for p in poly)
        ET.SubElement(cells, "polygon", {"points": pts, "fill": fill, "data-seed": str(i),
                                         "data-h": repr(float(h[i]))})
    nuclei = ET.SubElement(svg, "g", {"id": "nuclei"})
    inside = canvas.contains(pos)
    for i in ext:
        if inside[i]:
            x, y = xy(pos[i])
            ET.SubElement(nuclei, "circle", {"cx": f"{x:.3f}", "cy": f"{y:.3f}", "r": "2.5",
                                             "fill": NUCLEUS_COLOR, "class": "nucleus"})
    if show_empty:
        ghosts = ET.SubElement(svg, "g", {"id": "empty"})
        for i in np.flatnonzero(~T.extreme & inside):
            x, y = xy(pos[i])
            ET.SubElement(ghosts, "circle", {"cx": f"{x:.3f}", "cy": f"{y:.3f}", "r": "1.5",
                                             "fill": GRAY, "class": "empty"})
    return ET.tostring(svg, encoding="unicode") + "\n"


def _area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def write_svg(path, T: TessellationResult, **kw) -> Path:
    return atomic_write_text(path, render_svg(T, **kw))
