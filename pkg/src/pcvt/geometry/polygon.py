"""Closed-form integrals over simple polygons (Green's theorem / triangle fans)."""

from __future__ import annotations

import numpy as np

from ..errors import DegeneratePolygon


def _vertices(poly) -> np.ndarray:
    p = np.asarray(poly, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or len(p) < 3:
        raise DegeneratePolygon("a polygon needs at least three 2D vertices")
    return p


def _signed_area(p: np.ndarray) -> float:
    q = np.roll(p, -1, axis=0)
    return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))


def polygon_area(poly) -> float:
    """Area of a simple polygon listed counter-clockwise."""
    p = _vertices(poly)
    a = _signed_area(p)
    if a == 0.0:
        raise DegeneratePolygon("zero-area polygon")
    return a


def polygon_centroid(poly) -> np.ndarray:
    p = _vertices(poly)
    # shift to the first vertex: keeps cancellation small for far-away polygons
    origin = p[0]
    r = p - origin
    q = np.roll(r, -1, axis=0)
    cross = r[:, 0] * q[:, 1] - q[:, 0] * r[:, 1]
    a = 0.5 * cross.sum()
    if a == 0.0:
        raise DegeneratePolygon("zero-area polygon")
    c = ((r + q) * cross[:, None]).sum(axis=0) / (6.0 * a)
    return origin + c


def polygon_perimeter(poly) -> float:
    p = _vertices(poly)
    d = np.roll(p, -1, axis=0) - p
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def polygon_second_moment(poly, point) -> float:
    """Exact integral of ||y - point||^2 over the polygon.

    Fans the polygon into signed triangles (point, v_k, v_{k+1}); each one
    integrates to area * (|P|^2 + |Q|^2 + P.Q) / 6 with P, Q taken relative to
    ``point``.
    """
    p = _vertices(poly)
    if _signed_area(p) == 0.0:
        raise DegeneratePolygon("zero-area polygon")
    r = p - np.asarray(point, dtype=float)
    q = np.roll(r, -1, axis=0)
    cross = r[:, 0] * q[:, 1] - q[:, 0] * r[:, 1]
    quad = (r * r).sum(axis=1) + (q * q).sum(axis=1) + (r * q).sum(axis=1)
    return float((cross * quad).sum() / 12.0)


def isoperimetric_ratio(poly) -> float:
    """perimeter^2 / area; 8*sqrt(3) for a regular hexagon, 4*pi for a disk."""
    return polygon_perimeter(poly) ** 2 / polygon_area(poly)
