import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcvt.errors import DegenerateInput
from pcvt.geometry import (
    PeriodicDelaunay,
    TorusDomain,
    build_tessellation,
    honeycomb,
    polygon_area,
    polygon_centroid,
    polygon_perimeter,
    polygon_second_moment,
)

from conftest import image_shifts, random_gens


def nearest_site(domain, gens, pts):
    """Brute force: index and distance of the closest generator image."""
    shifts = image_shifts(domain, 1)
    best = np.full(len(pts), np.inf)
    second = np.full(len(pts), np.inf)
    idx = np.zeros(len(pts), dtype=int)
    for i, g in enumerate(gens):
        d = np.min(np.linalg.norm(pts[:, None, :] - (g + shifts)[None], axis=2), axis=1)
        closer = d < best
        second = np.where(closer, best, np.minimum(second, d))
        idx = np.where(closer, i, idx)
        best = np.where(closer, d, best)
    return idx, best, second


def test_single_generator_cell(square):
    t = build_tessellation(square, [[0.3, 0.7]])
    assert t.areas[0] == pytest.approx(1.0, rel=1e-14)
    np.testing.assert_allclose(t.centroid_offsets[0], 0.0, atol=1e-15)
    cell = t.cells[0]
    np.testing.assert_allclose(cell.min(axis=0), [-0.2, 0.2], atol=1e-14)
    np.testing.assert_allclose(cell.max(axis=0), [0.8, 1.2], atol=1e-14)
    assert t.second_moments[0] == pytest.approx(1 / 6, rel=1e-14)
    assert t.degree[0] == 4


def test_honeycomb_cells(hexa):
    t = build_tessellation(hexa, honeycomb(hexa, 5, 3))
    assert t.n == 49
    np.testing.assert_allclose(t.areas, hexa.area / 49, rtol=1e-12)
    assert np.all(t.degree == 6)
    assert all(len(s) == 6 for s in t.neighbor_sets)
    ratio = t.perimeters ** 2 / t.areas
    np.testing.assert_allclose(ratio, 8 * math.sqrt(3), rtol=1e-12)


def test_two_generator_offset_lattice(square):
    t = build_tessellation(square, [[0.0, 0.0], [0.5, 0.5]])
    np.testing.assert_allclose(t.areas, 0.5, rtol=1e-14)
    np.testing.assert_allclose(t.second_moments, 1 / 24, rtol=1e-13)
    assert list(t.degree) == [4, 4]
    assert t.neighbor_sets == [frozenset({1}), frozenset({0})]


def test_membership_oracle(square):
    gens = random_gens(square, 10, 3)
    t = build_tessellation(square, gens)
    rng = np.random.default_rng(11)
    shifts = image_shifts(square, 1)
    checked = 0
    for _ in range(10):
        pts = rng.random((100_000, 2))
        near, d1, d2 = nearest_site(square, t.positions, pts)
        keep = (d2 - d1) > 2e-9
        pts, near = pts[keep], near[keep]
        hits = np.zeros(len(pts), dtype=int)
        owner = np.full(len(pts), -1)
        for i, cell in enumerate(t.cells):
            for s in shifts:
                poly = cell + s
                inside = np.ones(len(pts), dtype=bool)
                for k in range(len(poly)):
                    a, b = poly[k], poly[(k + 1) % len(poly)]
                    inside &= (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0]) > 0
                hits += inside
                owner[inside] = i
        assert np.all(hits == 1)
        assert np.array_equal(owner, near)
        checked += len(pts)
    assert checked > 999_000


@pytest.mark.parametrize("n", [1, 2, 3, 7, 50, 400, 5000])
def test_partition_of_area(torus, n):
    t = build_tessellation(torus, random_gens(torus, n, n))
    assert float(np.sum(t.areas)) == pytest.approx(torus.area, rel=1e-12)
    assert np.all(t.areas > 0)


def test_cell_integrals_match_polygon_formulas(torus):
    t = build_tessellation(torus, random_gens(torus, 60, 5))
    for i, cell in enumerate(t.cells):
        assert polygon_area(cell) == pytest.approx(t.areas[i], rel=1e-10)
        np.testing.assert_allclose(polygon_centroid(cell) - t.positions[i], t.centroid_offsets[i], atol=1e-12)
        assert polygon_second_moment(cell, t.positions[i]) == pytest.approx(t.second_moments[i], rel=1e-10)
        assert polygon_perimeter(cell) == pytest.approx(t.perimeters[i], rel=1e-10)
        assert len(cell) == t.degree[i]


def test_adjacency_symmetric(torus):
    t = build_tessellation(torus, random_gens(torus, 200, 8))
    for i, s in enumerate(t.neighbor_sets):
        for j in s:
            assert i in t.neighbor_sets[j]


def test_closest_neighbor_is_brute_force_minimum(torus):
    gens = random_gens(torus, 300, 9)
    t = build_tessellation(torus, gens)
    pos = t.positions
    d = torus.distance(pos[:, None, :], pos[None, :, :])
    d[np.arange(len(pos)), np.arange(len(pos))] = np.inf
    np.testing.assert_array_equal(t.closest_neighbor, np.argmin(d, axis=1))
    np.testing.assert_allclose(np.hypot(*t.closest_vector.T), d.min(axis=1), rtol=1e-13)


def test_closest_neighbor_tie_goes_to_lowest_index(square):
    # generator 1 sits exactly between 0 and 2
    t = build_tessellation(square, [[0.25, 0.5], [0.5, 0.5], [0.75, 0.5], [0.5, 0.0]])
    assert t.closest_neighbor[1] == 0


def test_coincident_generators_rejected(torus):
    pts = random_gens(torus, 20, 1)
    pts[5] = pts[3] + torus.basis[0]
    with pytest.raises(DegenerateInput):
        build_tessellation(torus, pts)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(-2, 2), st.floats(-2, 2), st.sampled_from(["square", "hexagonal"]))
def test_translation_equivariance(seed, tx, ty, kind):
    dom = TorusDomain.from_kind(kind)
    gens = random_gens(dom, 40, seed)
    a = build_tessellation(dom, gens)
    b = build_tessellation(dom, gens + np.array([tx, ty]))
    np.testing.assert_allclose(b.areas, a.areas, rtol=1e-9, atol=1e-14)
    np.testing.assert_allclose(b.perimeters, a.perimeters, rtol=1e-9)
    np.testing.assert_allclose(b.centroid_offsets, a.centroid_offsets, atol=1e-11)
    assert b.neighbor_sets == a.neighbor_sets
    np.testing.assert_array_equal(b.closest_neighbor, a.closest_neighbor)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 300))
def test_kinetic_updates_match_fresh_build(seed, n):
    dom = TorusDomain.square()
    rng = np.random.default_rng(seed)
    pos = dom.random_points(n, rng)
    eng = PeriodicDelaunay(dom, pos)
    for _ in range(5):
        pos = pos + rng.normal(scale=0.1 * dom.spacing(n), size=pos.shape)
        eng.update(pos)
        k = eng.tessellation()
        f = build_tessellation(dom, pos)
        np.testing.assert_allclose(k.areas, f.areas, rtol=1e-10, atol=1e-15)
        np.testing.assert_allclose(k.second_moments, f.second_moments, rtol=1e-10, atol=1e-18)
        assert k.neighbor_sets == f.neighbor_sets
