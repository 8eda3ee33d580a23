import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcvt.geometry import TorusDomain, TorusKind, admissible_hex_pairs, honeycomb, torus_distance

from conftest import image_shifts

coord = st.floats(-3.0, 3.0, allow_nan=False)


def test_square_and_hexagonal_area():
    assert TorusDomain.square(2.0).area == pytest.approx(4.0)
    h = TorusDomain.hexagonal(3.0)
    assert h.area == pytest.approx(3.0)
    u, v = h.basis
    assert math.isclose(u @ v / (u @ u), 0.5)


def test_domain_rejects_wrong_lattice():
    with pytest.raises(ValueError):
        TorusDomain(np.array([1.0, 0.0]), np.array([0.5, 0.5]), TorusKind.SQUARE)
    with pytest.raises(ValueError):
        TorusDomain(np.array([1.0, 0.0]), np.array([2.0, 0.0]), TorusKind.SQUARE)


def test_wraparound_distance(square):
    assert torus_distance(square, (0.1, 0.5), (0.9, 0.5)) == pytest.approx(0.2)


def test_self_distance_zero(torus):
    assert torus_distance(torus, (0.3, 0.2), (0.3, 0.2)) == 0.0


def test_distance_matches_wide_image_grid(torus, rng):
    a = torus.random_points(200, rng) + rng.integers(-2, 3, (200, 1)) * torus.basis[0]
    b = torus.random_points(200, rng)
    shifts = image_shifts(torus, 4)
    brute = np.min(np.linalg.norm(b[:, None, :] + shifts[None] - a[:, None, :], axis=2), axis=1)
    np.testing.assert_allclose(torus.distance(a, b), brute, rtol=1e-13, atol=1e-15)


def test_reduce_lands_in_fundamental_domain(torus, rng):
    pts = rng.uniform(-5, 5, (1000, 2))
    lat = torus.to_lattice(torus.reduce(pts))
    assert np.all((lat >= 0) & (lat < 1))


def test_reduce_boundary_rounding(square):
    p = np.array([[-1e-18, 0.5], [1.0, 1.0 - 1e-17]])
    r = square.reduce(p)
    assert np.all((r >= 0) & (r < 1))


@settings(max_examples=60, deadline=None)
@given(coord, coord, coord, coord, st.sampled_from(["square", "hexagonal"]))
def test_minimal_image_is_shortest(x0, y0, x1, y1, kind):
    dom = TorusDomain.from_kind(kind)
    v = np.array([x1 - x0, y1 - y0])
    m = dom.minimal_image(v)
    # same residue class
    k = dom.to_lattice(m - v)
    np.testing.assert_allclose(k, np.rint(k), atol=1e-9)
    brute = np.min(np.linalg.norm(v + image_shifts(dom, 5), axis=1))
    assert np.hypot(*m) <= brute + 1e-12


@settings(max_examples=40, deadline=None)
@given(coord, coord, coord, coord)
def test_distance_symmetric_and_translation_invariant(x0, y0, x1, y1):
    dom = TorusDomain.hexagonal()
    a, b = np.array([x0, y0]), np.array([x1, y1])
    t = np.array([0.37, -1.3])
    d = torus_distance(dom, a, b)
    assert d == pytest.approx(torus_distance(dom, b, a), abs=1e-12)
    assert d == pytest.approx(torus_distance(dom, a + t, b + t), abs=1e-12)


def test_admissible_pairs_examples():
    assert (19, 17) in admissible_hex_pairs(973)
    assert (27, 25) in admissible_hex_pairs(2029)
    assert admissible_hex_pairs(2) == []
    assert admissible_hex_pairs(49) == [(5, 3), (7, 0)]


def test_admissible_pairs_exhaustive_small():
    for n in range(1, 200):
        brute = {(a, b) for a in range(15) for b in range(a + 1) if a * a + a * b + b * b == n}
        assert set(admissible_hex_pairs(n)) == brute


@pytest.mark.parametrize("a,b", [(2, 1), (5, 3), (7, 0), (4, 4)])
def test_honeycomb_spacing(hexa, a, b):
    g = honeycomb(hexa, a, b)
    n = a * a + a * b + b * b
    assert len(g) == n
    pos = g.positions
    d = hexa.distance(pos[:, None, :], pos[None, :, :])
    d[np.arange(n), np.arange(n)] = np.inf
    # nearest-neighbor distance of a triangular lattice with cell area |Omega|/N
    spacing = math.sqrt(2 * hexa.area / (n * math.sqrt(3)))
    np.testing.assert_allclose(d.min(axis=1), spacing, rtol=1e-12)


def test_honeycomb_needs_hexagonal(square):
    with pytest.raises(ValueError):
        honeycomb(square, 2, 1)
