# -*- coding: utf-8 -*-
"""
SVG 输出 (deterministic vector renderings)

Element order follows edge / vertex ids; coordinates are rounded so reruns
produce identical bytes. The reproducibility header is written as an XML comment.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
import orjson
import svgwrite as svg

from providers.storage.local_io import write_text
from services.atlas.app.schemas.base import Header
from workers.packing.circle_packing import CirclePacking

# seaborn-like palette
COLORS = [
    "#7995c4",  # blue
    "#e6a37d",  # orange
    "#80be8e",  # green
    "#d37a7d",  # red
    "#a195c6",  # purple
    "#ae9a88",  # brown
    "#e3a8d2",  # pink
    "#d9cb97",  # yellow
    "#8bc8da",  # cyan
]

HEIGHT = 600  # px for the unit height of the cylinder
DISC = 600  # px for the unit disc diameter
LINE = 0.5


def _r(x: float) -> float:
    return round(float(x), 6)


def _finish(dwg: svg.Drawing, path: str | Path, header: Header | None) -> Path:
    body = dwg.tostring()
    head = '<?xml version="1.0" encoding="utf-8" ?>\n'
    if header is not None:
        meta = orjson.dumps(header.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS)
        head += "<!-- " + meta.decode("utf-8").replace("--", "- -") + " -->\n"
    return write_text(path, head + body + "\n")


def render_tiling_svg(
    eta: float, rects: Sequence, path: str | Path, header: Header | None = None
) -> Path:
    """
    Cylinder cut at the seam theta = 0, y = 0 at the bottom. ``rects`` are
    indexed by edge id (Rectangle or RectangleRecord); zero-width ones are omitted.
    """
    width = eta * HEIGHT
    dwg = svg.Drawing(profile="tiny", size=(_r(width), HEIGHT))
    dwg.viewbox(minx=0, miny=0, width=_r(width), height=HEIGHT)
    for k, rect in enumerate(rects):
        if rect.width <= 0:
            continue
        fill = COLORS[k % len(COLORS)]
        top = (1.0 - rect.y_hi) * HEIGHT
        h = (rect.y_hi - rect.y_lo) * HEIGHT
        start, end = rect.theta_start, rect.theta_start + rect.width
        pieces = [(start, min(end, eta))]
        if end > eta:
            pieces.append((0.0, end - eta))
        for a, b in pieces:
            dwg.add(
                svg.shapes.Rect(
                    insert=(_r(a * HEIGHT), _r(top)),
                    size=(_r((b - a) * HEIGHT), _r(h)),
                    fill=fill,
                    stroke="black",
                    stroke_width=LINE,
                )
            )
    return _finish(dwg, path, header)


def render_packing_svg(
    p: CirclePacking, path: str | Path, header: Header | None = None, edges: bool = False
) -> Path:
    half = DISC / 2
    dwg = svg.Drawing(profile="tiny", size=(DISC + 2, DISC + 2))
    dwg.viewbox(minx=-half - 1, miny=-half - 1, width=DISC + 2, height=DISC + 2)
    dwg.add(svg.shapes.Circle((0, 0), half, fill="none", stroke="red", stroke_width=LINE))
    centers = p.center * half
    centers[:, 1] *= -1  # y up
    if edges and p.edges is not None:
        for u, v in p.edges:
            dwg.add(
                svg.shapes.Line(
                    start=(_r(centers[u, 0]), _r(centers[u, 1])),
                    end=(_r(centers[v, 0]), _r(centers[v, 1])),
                    stroke="gray",
                    stroke_width=LINE / 2,
                )
            )
    for v in range(len(p.radius)):
        r = float(p.radius[v]) * half
        if not np.isfinite(r) or r <= 0:
            continue
        dwg.add(
            svg.shapes.Circle(
                (_r(centers[v, 0]), _r(centers[v, 1])),
                _r(r),
                fill="none",
                stroke="blue",
                stroke_width=LINE,
            )
        )
    return _finish(dwg, path, header)
