"""Standalone SVG pictures of periodic tessellations.

Cells are filled by their scaled energy E_i, generators drawn as circles and
centroids as crosses. Generators of epsilon-regular hexagons are red. The
picture shows one fundamental region of the torus: the square itself, or the
regular hexagon (the Voronoi cell of the torus lattice) for the hexagonal
torus. Output depends only on the inputs, so it can be snapshot-tested.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from ..geometry import TorusDomain, TorusKind
from ..metrics import RegularityReport

# perceptually ordered anchors, dark (low E_i) to light (high E_i)
_ANCHORS = np.array([
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=float)


def colormap(t: np.ndarray) -> list[str]:
    """Hex colors for values t in [0, 1] (clipped), piecewise linear between anchors."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0) * (len(_ANCHORS) - 1)
    k = np.minimum(t.astype(int), len(_ANCHORS) - 2)
    w = (t - k)[:, None]
    rgb = np.rint(_ANCHORS[k] * (1.0 - w) + _ANCHORS[k + 1] * w).astype(int)
    return ["#%02x%02x%02x" % tuple(c) for c in rgb]


def _clip(poly: np.ndarray, normal: np.ndarray, bound: float) -> np.ndarray:
    """Part of a convex polygon with p . normal <= bound."""
    out = []
    n = len(poly)
    for k in range(n):
        p, q = poly[k], poly[(k + 1) % n]
        sp, sq = p @ normal - bound, q @ normal - bound
        if sp <= 0.0:
            out.append(p)
        if sp * sq < 0.0:
            out.append(p + (q - p) * (sp / (sp - sq)))
    return np.array(out)


def fundamental_region(domain: TorusDomain) -> np.ndarray:
    """CCW polygon of the region drawn for ``domain``."""
    b = domain.basis
    if domain.kind is TorusKind.SQUARE:
        return np.array([[0.0, 0.0], b[0], b[0] + b[1], b[1]])
    center = 0.5 * (b[0] + b[1])
    r = 2.0 * float(np.abs(b).sum())
    poly = np.array([[-r, -r], [r, -r], [r, r], [-r, r]])
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            if i or j:
                v = i * b[0] + j * b[1]
                poly = _clip(poly, v, 0.5 * float(v @ v))
    return poly + center


def _num(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def svg_string(tess, energy_report, regularity: RegularityReport, e_range: tuple[float, float] | None = None,
               width: int = 600, show_centroids: bool = True) -> str:
    dom = tess.domain
    region = fundamental_region(dom)
    lo_xy, hi_xy = region.min(axis=0), region.max(axis=0)
    scale = width / float(hi_xy[0] - lo_xy[0])
    height = int(np.ceil((hi_xy[1] - lo_xy[1]) * scale))

    def tr(p):
        p = np.atleast_2d(p)
        return np.column_stack([(p[:, 0] - lo_xy[0]) * scale, (hi_xy[1] - p[:, 1]) * scale])

    e = np.asarray(energy_report.per_cell_E, dtype=float)
    lo, hi = (float(e.min()), float(e.max())) if e_range is None else map(float, e_range)
    span = hi - lo
    if span <= 1e-9 * max(1.0, abs(hi)):
        t = np.zeros_like(e)
    else:
        t = (e - lo) / span
    colors = colormap(t)
    regular = np.asarray(regularity.regular, dtype=bool)

    b = dom.basis
    shifts = [i * b[0] + j * b[1] for i in range(-2, 3) for j in range(-2, 3)]
    rad = max(1.5, 0.12 * scale * dom.spacing(tess.n))
    cells_svg, marks_svg = [], []
    cells = tess.cells
    cents = tess.centroids
    for i in range(tess.n):
        poly = cells[i]
        for s in shifts:
            q = poly + s
            if (q.max(axis=0) < lo_xy).any() or (q.min(axis=0) > hi_xy).any():
                continue
            pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in tr(q))
            cells_svg.append(f'<polygon points="{pts}" fill="{colors[i]}"/>')
            gx, gy = tr(tess.positions[i] + s)[0]
            stroke = "#ff0000" if regular[i] else "#000000"
            marks_svg.append(f'<circle cx="{_num(gx)}" cy="{_num(gy)}" r="{_num(rad)}" stroke="{stroke}"/>')
            if show_centroids:
                cx, cy = tr(cents[i] + s)[0]
                d = rad * 0.8
                marks_svg.append(
                    f'<path d="M{_num(cx - d)},{_num(cy - d)}L{_num(cx + d)},{_num(cy + d)}'
                    f'M{_num(cx - d)},{_num(cy + d)}L{_num(cx + d)},{_num(cy - d)}"/>'
                )
    clip = " ".join(f"{_num(x)},{_num(y)}" for x, y in tr(region))
    return "\n".join([
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<defs><clipPath id="torus"><polygon points="{clip}"/></clipPath></defs>',
        '<g clip-path="url(#torus)">',
        '<g stroke="#ffffff" stroke-width="0.5">',
        *cells_svg,
        '</g>',
        '<g fill="none" stroke="#000000" stroke-width="1">',
        *marks_svg,
        '</g>',
        '</g>',
        f'<polygon points="{clip}" fill="none" stroke="#000000" stroke-width="1"/>',
        '</svg>',
        "",
    ])


def render_svg(tess, energy_report, regularity: RegularityReport, path: str | os.PathLike,
               e_range: tuple[float, float] | None = None, width: int = 600,
               show_centroids: bool = True) -> Path:
    """Write the SVG of ``tess`` to ``path``; the color scale is linear in E_i over ``e_range``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg_string(tess, energy_report, regularity, e_range, width, show_centroids))
    return path
