import math

import numpy as np
import pytest
import scipy.sparse as sp

from pcvt.energy import energy, f_hex, gradient, graph_laplacian, hessian
from pcvt.errors import Unsupported
from pcvt.geometry import TorusDomain, build_tessellation, honeycomb
from pcvt.metrics import regularity
from pcvt.optimizers import lloyd

from conftest import random_gens

E_SQUARE = 3.0 * math.sqrt(3.0) / 5.0


def total_f(domain, x):
    return energy(domain, x.reshape(-1, 2)).F


def fd_gradient(domain, x, h):
    g = np.zeros_like(x)
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (total_f(domain, x + e) - total_f(domain, x - e)) / (2 * h)
    return g


def fd_hessian(domain, x, h):
    cols = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((gradient(domain, (x + e).reshape(-1, 2)) - gradient(domain, (x - e).reshape(-1, 2))) / (2 * h))
    return np.array(cols).T


def test_single_generator_energy(square):
    rep = energy(square, [[0.3, 0.7]])
    assert rep.F == pytest.approx(1 / 6, rel=1e-14)
    assert rep.E == pytest.approx(E_SQUARE, abs=1e-12)
    np.testing.assert_allclose(rep.gradient, 0.0, atol=1e-15)


def test_two_generator_offset_lattice_energy(square):
    rep = energy(square, [[0.0, 0.0], [0.5, 0.5]])
    assert rep.F == pytest.approx(1 / 12, rel=1e-14)
    assert rep.E == pytest.approx(E_SQUARE, rel=1e-14)


def test_honeycomb_energy_is_one(hexa):
    rep = energy(hexa, honeycomb(hexa, 5, 3))
    assert rep.E == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(rep.per_cell_E, 1.0, atol=1e-12)
    np.testing.assert_allclose(rep.gradient, 0.0, atol=1e-14)


def test_f_hex_formula(hexa):
    assert f_hex(hexa, 7) == pytest.approx(5 / (18 * math.sqrt(3)) / 49)


def test_report_consistency(torus):
    rep = energy(torus, random_gens(torus, 30, 2))
    assert rep.F == pytest.approx(rep.per_cell_F.sum(), rel=1e-14)
    assert rep.E == pytest.approx(rep.F / (30 * f_hex(torus, 30)), rel=1e-14)
    np.testing.assert_allclose(rep.per_cell_E, rep.per_cell_F / f_hex(torus, 30), rtol=1e-14)
    assert np.all(rep.per_cell_F >= 0)
    np.testing.assert_allclose(rep.scaled_gradient, rep.gradient / (30 * f_hex(torus, 30)), rtol=1e-13)


def test_gradient_sums_to_zero(torus):
    for n in (5, 50, 500):
        g = gradient(torus, random_gens(torus, n, n)).reshape(-1, 2)
        assert np.all(np.abs(g.sum(axis=0)) < 1e-12 * n * torus.area ** 1.5)


def test_gradient_finite_differences_n12(square):
    x = random_gens(square, 12, 4).ravel()
    g = gradient(square, x.reshape(-1, 2))
    fd = fd_gradient(square, x, 1e-6)
    assert np.linalg.norm(g - fd) / np.linalg.norm(g) < 1e-6


@pytest.mark.parametrize("n", [4, 8, 16])
def test_gradient_finite_differences(torus, n):
    x = random_gens(torus, n, 100 + n).ravel()
    g = gradient(torus, x.reshape(-1, 2))
    fd = fd_gradient(torus, x, 1e-6)
    assert np.linalg.norm(g - fd) / np.linalg.norm(g) < 1e-6


def test_hessian_finite_differences_n6(square):
    x = random_gens(square, 6, 6).ravel()
    H = hessian(square, x.reshape(-1, 2)).toarray()
    fd = fd_hessian(square, x, 1e-5)
    assert np.linalg.norm(H - fd) / np.linalg.norm(H) < 1e-5


@pytest.mark.parametrize("n", [4, 8, 16])
def test_hessian_structure(torus, n):
    x = random_gens(torus, n, 200 + n)
    t = build_tessellation(torus, x)
    H = hessian(torus, tess=t)
    assert sp.issparse(H)
    assert abs(H - H.T).max() < 1e-13 * abs(H).max()
    for axis in range(2):
        v = np.zeros(2 * n)
        v[axis::2] = 1.0
        assert np.abs(H @ v).max() < 1e-8
    # block (i, j) vanishes unless j = i or j is a neighbor of i
    coo = H.tocoo()
    for r, c in zip(coo.row // 2, coo.col // 2):
        assert r == c or c in t.neighbor_sets[r]


def test_hessian_psd_at_honeycomb(hexa):
    H = hessian(hexa, honeycomb(hexa, 5, 3)).toarray()
    assert np.linalg.eigvalsh(H).min() >= -1e-8


def test_hessian_refuses_single_generator(square):
    with pytest.raises(Unsupported):
        hessian(square, [[0.2, 0.2]])
    with pytest.raises(Unsupported):
        graph_laplacian(square, [[0.2, 0.2]])


def test_graph_laplacian_properties(torus):
    t = build_tessellation(torus, random_gens(torus, 50, 3))
    G = graph_laplacian(torus, tess=t)
    d = G.toarray()
    assert np.array_equal(d, d.T)
    assert np.abs(d.sum(axis=1)).max() < 1e-12
    off = d - np.diag(np.diag(d))
    assert off.max() <= 0.0
    np.testing.assert_allclose(np.diag(d), -off.sum(axis=1), rtol=1e-12)
    assert np.trace(d) == pytest.approx(2 * torus.area, rel=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_graph_laplacian_eigenvalue_floor(torus, seed):
    G = graph_laplacian(torus, random_gens(torus, 30, seed)).toarray()
    assert np.linalg.eigvalsh(G).min() >= -1e-10


def test_scale_invariance(torus):
    x = random_gens(torus, 40, 9)
    lam = 2.7
    big = torus.scaled(lam)
    a = energy(torus, x)
    b = energy(big, x * lam)
    assert b.E == pytest.approx(a.E, rel=1e-10)
    np.testing.assert_allclose(b.per_cell_E, a.per_cell_E, rtol=1e-10)
    assert b.F == pytest.approx(a.F * lam ** 4, rel=1e-10)
    ta, tb = build_tessellation(torus, x), build_tessellation(big, x * lam)
    assert regularity(ta) == regularity(tb)


def test_non_honeycomb_pcvt_exceeds_one(hexa):
    for seed in range(4):
        rep = lloyd(hexa, random_gens(hexa, 49, seed))
        assert rep.converged
        h, _ = regularity(rep.tessellation)
        if h < 1.0:
            assert rep.E > 1.0
