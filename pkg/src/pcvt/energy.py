"""Quantization energy, its derivatives and the periodic graph Laplacian."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import Unsupported
from .geometry import PeriodicTessellation, TorusDomain, build_tessellation


def f_hex(domain: TorusDomain, n: int) -> float:
    """Second moment of a regular hexagon of area |Omega| / N about its center."""
    return 5.0 / (18.0 * math.sqrt(3.0)) * (domain.area / n) ** 2


def _tess(domain, gens, tess) -> PeriodicTessellation:
    if tess is not None:
        return tess
    return build_tessellation(domain, gens)


@dataclass(frozen=True)
class EnergyReport:
    F: float
    per_cell_F: np.ndarray
    E: float
    per_cell_E: np.ndarray
    gradient: np.ndarray  # D F, interleaved (x1, y1, x2, y2, ...)

    @property
    def n(self) -> int:
        return len(self.per_cell_F)

    @property
    def scaled_gradient(self) -> np.ndarray:
        """D E = D F / (N F_hex)."""
        return self.gradient * (self.E / self.F) if self.F > 0 else self.gradient * 0.0


def energy(domain: TorusDomain, gens=None, tess: PeriodicTessellation | None = None) -> EnergyReport:
    t = _tess(domain, gens, tess)
    n = t.n
    fh = f_hex(domain, n)
    per_f = np.array(t.second_moments)
    total = float(per_f.sum())
    grad = (-2.0 * t.areas[:, None] * t.centroid_offsets).ravel()
    return EnergyReport(F=total, per_cell_F=per_f, E=total / (n * fh), per_cell_E=per_f / fh, gradient=grad)


def gradient(domain: TorusDomain, gens=None, tess: PeriodicTessellation | None = None) -> np.ndarray:
    """D_i F = 2 |V_i| (x_i - c_i), flattened as (x1, y1, x2, y2, ...)."""
    t = _tess(domain, gens, tess)
    return (-2.0 * t.areas[:, None] * t.centroid_offsets).ravel()


def _segment_moments(p: np.ndarray, q: np.ndarray):
    """Length and exact integrals of 1, r and r r^T along segments p -> q."""
    m = 0.5 * (p + q)
    length = np.hypot(*(q - p).T)
    w = length / 6.0
    first = length[:, None] * m
    second = w[:, None, None] * (np.einsum("ea,eb->eab", p, p) + 4.0 * np.einsum("ea,eb->eab", m, m)
                                 + np.einsum("ea,eb->eab", q, q))
    return length, first, second


def hessian(domain: TorusDomain, gens=None, tess: PeriodicTessellation | None = None) -> sp.csr_matrix:
    """Sparse 2N x 2N Hessian of F, interleaved coordinates.

    Diagonal blocks: 2|V_i| I - sum over edges of (2/|d|) int (x_i - y)(x_i - y)^T.
    Off-diagonal blocks: (2/|d|) int (x_i - y)(x_j - y)^T over the shared edge.
    Edge integrals of the quadratic integrands are evaluated exactly.
    """
    t = _tess(domain, gens, tess)
    n = t.n
    if n < 2:
        raise Unsupported("the Hessian needs at least two generators")
    i, j = t.edge_index[:, 0], t.edge_index[:, 1]
    d = t.edge_vector
    p, q = t.edge_segment[:, :2], t.edge_segment[:, 2:]
    length, r1, r2 = _segment_moments(p, q)
    c = 2.0 / np.hypot(d[:, 0], d[:, 1])
    dd = np.einsum("ea,eb->eab", d, d)
    # int r r^T, int (r - d)(r - d)^T and int (-r)(d - r)^T along each edge
    ii = -c[:, None, None] * r2
    jj = -c[:, None, None] * (r2 - np.einsum("ea,eb->eab", r1, d) - np.einsum("ea,eb->eab", d, r1)
                              + length[:, None, None] * dd)
    ij = c[:, None, None] * (r2 - np.einsum("ea,eb->eab", r1, d))
    blocks = np.concatenate([ii, jj, ij, np.transpose(ij, (0, 2, 1))])
    bi = np.concatenate([i, j, i, j])
    bj = np.concatenate([i, j, j, i])
    diag = np.zeros((n, 2, 2))
    diag[:, 0, 0] = diag[:, 1, 1] = 2.0 * t.areas
    blocks = np.concatenate([diag, blocks])
    bi = np.concatenate([np.arange(n), bi])
    bj = np.concatenate([np.arange(n), bj])
    a = np.arange(2)
    rows = np.broadcast_to(2 * bi[:, None, None] + a[None, :, None], blocks.shape)
    cols = np.broadcast_to(2 * bj[:, None, None] + a[None, None, :], blocks.shape)
    h = sp.coo_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(2 * n, 2 * n)).tocsr()
    h.sum_duplicates()
    return h


def graph_laplacian(domain: TorusDomain, gens=None, tess: PeriodicTessellation | None = None) -> sp.csr_matrix:
    """N x N Laplacian with g_ij = -(|tau_ij| + |tau_ji|) over shared Voronoi edges.

    tau_ij is the triangle spanned by x_i and the edge shared with x_j, so each
    edge contributes -L |d| / 2. Edges between a generator and its own image
    cancel in a Laplacian and are dropped.
    """
    t = _tess(domain, gens, tess)
    n = t.n
    if n < 2:
        raise Unsupported("the graph Laplacian needs at least two generators")
    i, j = t.edge_index[:, 0], t.edge_index[:, 1]
    keep = i != j
    i, j = i[keep], j[keep]
    seg = t.edge_segment[keep]
    d = t.edge_vector[keep]
    w = 0.5 * np.hypot(seg[:, 2] - seg[:, 0], seg[:, 3] - seg[:, 1]) * np.hypot(d[:, 0], d[:, 1])
    deg = np.bincount(i, w, minlength=n) + np.bincount(j, w, minlength=n)
    rows = np.concatenate([i, j, np.arange(n)])
    cols = np.concatenate([j, i, np.arange(n)])
    vals = np.concatenate([-w, -w, deg])
    g = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    g.sum_duplicates()
    return g


__all__ = ["EnergyReport", "energy", "f_hex", "gradient", "graph_laplacian", "hessian"]
