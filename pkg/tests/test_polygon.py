import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcvt.errors import DegeneratePolygon
from pcvt.geometry import (
    isoperimetric_ratio,
    polygon_area,
    polygon_centroid,
    polygon_perimeter,
    polygon_second_moment,
)

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def regular_hexagon(area=1.0):
    side = math.sqrt(2.0 * area / (3.0 * math.sqrt(3.0)))
    t = np.arange(6) * math.pi / 3
    return side * np.column_stack([np.cos(t), np.sin(t)])


def random_convex(rng, k=9):
    t = np.sort(rng.uniform(0, 2 * math.pi, k))
    r = rng.uniform(0.5, 1.0)
    return np.column_stack([1.3 * r * np.cos(t) + 0.2, r * np.sin(t) - 0.1])


def inside_convex(poly, pts):
    ok = np.ones(len(pts), dtype=bool)
    for k in range(len(poly)):
        a, b = poly[k], poly[(k + 1) % len(poly)]
        ok &= (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0]) >= 0
    return ok


def test_unit_square():
    assert polygon_area(UNIT_SQUARE) == 1.0
    np.testing.assert_allclose(polygon_centroid(UNIT_SQUARE), [0.5, 0.5])
    assert polygon_perimeter(UNIT_SQUARE) == 4.0
    assert polygon_second_moment(UNIT_SQUARE, [0.5, 0.5]) == pytest.approx(1.0 / 6.0, rel=1e-15)


def test_regular_hexagon_ratio_and_moment():
    hexagon = regular_hexagon(1.0)
    assert isoperimetric_ratio(hexagon) == pytest.approx(8.0 * math.sqrt(3.0), rel=1e-14)
    a = 0.37
    h = regular_hexagon(a)
    assert polygon_second_moment(h, [0.0, 0.0]) == pytest.approx(5.0 / (18.0 * math.sqrt(3.0)) * a * a, rel=1e-14)


def test_clockwise_orientation_flips_sign():
    assert polygon_area(UNIT_SQUARE[::-1]) == pytest.approx(-1.0)
    np.testing.assert_allclose(polygon_centroid(UNIT_SQUARE[::-1]), [0.5, 0.5])


@pytest.mark.parametrize("poly", [np.zeros((2, 2)), np.array([[0, 0], [1, 1], [2, 2.0]])])
def test_degenerate_polygon(poly):
    with pytest.raises(DegeneratePolygon):
        polygon_area(poly)
    with pytest.raises(DegeneratePolygon):
        polygon_second_moment(poly, [0, 0])


def test_monte_carlo_area_centroid_moment():
    rng = np.random.default_rng(7)
    poly = random_convex(rng)
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    box = float(np.prod(hi - lo))
    p = np.array([0.1, 0.05])
    n_in, s1, s2 = 0, np.zeros(2), 0.0
    total = 10_000_000
    for _ in range(10):
        pts = lo + (hi - lo) * rng.random((total // 10, 2))
        pts = pts[inside_convex(poly, pts)]
        n_in += len(pts)
        s1 += pts.sum(axis=0)
        s2 += float(((pts - p) ** 2).sum())
    area = box * n_in / total
    assert polygon_area(poly) == pytest.approx(area, rel=1e-3)
    c = polygon_centroid(poly)
    np.testing.assert_allclose(c, s1 / n_in, atol=1e-3 * np.abs(poly).max())
    assert polygon_second_moment(poly, p) == pytest.approx(box * s2 / total, rel=1e-3)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(-2, 2), st.floats(-2, 2))
def test_parallel_axis(seed, px, py):
    poly = random_convex(np.random.default_rng(seed))
    c = polygon_centroid(poly)
    a = polygon_area(poly)
    p = np.array([px, py])
    expect = polygon_second_moment(poly, c) + a * float((p - c) @ (p - c))
    assert polygon_second_moment(poly, p) == pytest.approx(expect, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_isoperimetric_inequality(seed):
    poly = random_convex(np.random.default_rng(seed))
    assert isoperimetric_ratio(poly) >= 4.0 * math.pi * (1 - 1e-12)
