"""Periodic Voronoi tessellations via a periodic Delaunay triangulation.

The triangulation is built once from a planar Delaunay triangulation of
replicated images (scipy/qhull) and then carried along as generators move:
after each move the vertices keep their combinatorics and Lawson flips restore
the Delaunay property. A full rebuild is done whenever the move inverts a
triangle or the flip repair gives up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from ..errors import DegenerateInput, NumericalFailure
from . import _kernels as K
from .domain import GeneratorSet, TorusDomain

# relative tolerances, all scaled by the mean generator spacing
_INCIRCLE_EPS = 1e-12
_ZERO_EDGE = 1e-10
_TIE_EPS = 1e-12
_MIN_AREA = 1e-13
_DUPLICATE = 1e-12

# 5 x 5 images; only a margin > 1 (a handful of generators) reaches past the inner 3 x 3
_MAX_MARGIN = 2.0
_IMAGES = np.array([(a, b) for a in range(-2, 3) for b in range(-2, 3)], dtype=np.int64)


def coincident_pairs(domain: TorusDomain, pos: np.ndarray) -> np.ndarray:
    """Index pairs (i < j) of generators closer than 1e-12 sqrt(|Omega|/N) on the torus, sorted."""
    pos = np.asarray(pos, dtype=float)
    if len(pos) < 2:
        return np.empty((0, 2), dtype=np.int64)
    s = domain.to_lattice(pos) % 1.0
    s[s >= 1.0] = 0.0
    tree = cKDTree(s, boxsize=1.0)
    # lattice coordinates stretch lengths by at most |B^-1|; use that to bound the radius
    stretch = float(np.linalg.norm(np.linalg.inv(domain.basis), 2))
    pairs = tree.query_pairs(_DUPLICATE * domain.spacing(len(pos)) * stretch, output_type="ndarray")
    if len(pairs) == 0:
        return np.empty((0, 2), dtype=np.int64)
    pairs = np.sort(pairs, axis=1)
    cand = pairs[np.lexsort(pairs.T[::-1])]
    d = domain.minimal_image(pos[cand[:, 1]] - pos[cand[:, 0]])
    keep = np.hypot(d[:, 0], d[:, 1]) <= _DUPLICATE * domain.spacing(len(pos))
    return cand[keep].astype(np.int64)


def _check_distinct(domain: TorusDomain, pos: np.ndarray) -> None:
    pairs = coincident_pairs(domain, pos)
    if len(pairs):
        i, j = (int(v) for v in pairs[0])
        raise DegenerateInput(f"generators {i} and {j} coincide on the torus")


def _perturbation(n: int, scale: float) -> np.ndarray:
    # deterministic per-index offsets used only to break cocircular ties in qhull
    k = np.arange(n, dtype=float)
    ang = (k * 2.399963229728653) % (2 * math.pi)
    return scale * np.column_stack([np.cos(ang), np.sin(ang)]) * (0.5 + 0.5 * ((k * 0.6180339887498949) % 1.0))[:, None]


def _planar_periodic(domain: TorusDomain, pos: np.ndarray, margin: float):
    """One attempt at the periodic triangulation from padded images."""
    n = len(pos)
    s = domain.to_lattice(pos)
    lat_pts = (s[None, :, :] + _IMAGES[:, None, :]).reshape(-1, 2)
    ids = np.tile(np.arange(n), len(_IMAGES))
    offs = np.repeat(_IMAGES, n, axis=0)
    keep = np.all((lat_pts >= -margin) & (lat_pts < 1.0 + margin), axis=1)
    lat_pts, ids, offs = lat_pts[keep], ids[keep], offs[keep]
    pts = domain.from_lattice(lat_pts)
    if len(pts) < 3:
        return None
    try:
        dt = Delaunay(pts, qhull_options="Qbb Qc Qz Q12")
    except QhullError as exc:
        raise NumericalFailure(f"planar triangulation failed: {exc}") from exc
    simp = dt.simplices.astype(np.int64)
    p = pts[simp]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    flip = cross < 0
    simp[flip] = simp[flip][:, [0, 2, 1]]
    cent = lat_pts[simp].mean(axis=1)
    own = np.all((cent >= 0.0) & (cent < 1.0), axis=1)
    simp = simp[own]
    if len(simp) != 2 * n:
        return None
    # every kept triangle must have its circumdisk well inside the padded region
    p = pts[simp]
    b = p[:, 1] - p[:, 0]
    c = p[:, 2] - p[:, 0]
    d = 2.0 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    if np.any(d <= 0.0):
        return None
    b2 = (b * b).sum(1)
    c2 = (c * c).sum(1)
    o = np.column_stack([(c[:, 1] * b2 - b[:, 1] * c2) / d, (b[:, 0] * c2 - c[:, 0] * b2) / d])
    radius = np.hypot(o[:, 0], o[:, 1])
    so = domain.to_lattice(p[:, 0] + o)
    inv = np.linalg.inv(domain.basis)
    scale = np.hypot(inv[:, 0], inv[:, 1])  # lattice-coordinate change per unit length
    room = np.minimum(so + margin, 1.0 + margin - so) / scale
    if np.any(room.min(axis=1) <= radius):
        return None
    tri = ids[simp]
    off = offs[simp]
    nbr, nbc = _match_edges(tri, off)
    if nbr is None:
        return None
    return tri, off, nbr, nbc


def _single_site():
    """The two lattice triangles (0, u, v) and (u, u + v, v) of a one-site torus."""
    tri = np.zeros((2, 3), dtype=np.int64)
    off = np.array([[[0, 0], [1, 0], [0, 1]], [[1, 0], [1, 1], [0, 1]]], dtype=np.int64)
    nbr, nbc = _match_edges(tri, off)
    return tri, off, nbr, nbc


def _match_edges(tri: np.ndarray, off: np.ndarray):
    """Pair every half-edge with its twin; None when the mesh is not closed."""
    ntri = len(tri)
    n = int(tri.max()) + 1
    k = np.arange(3)
    u = tri[:, (k + 1) % 3].ravel()
    v = tri[:, (k + 2) % 3].ravel()
    dv = (off[:, (k + 2) % 3] - off[:, (k + 1) % 3]).reshape(-1, 2)
    if np.abs(dv).max() > 4:
        return None, None

    def encode(a, b, dx, dy):
        return ((a * n + b) * 9 + (dx + 4)) * 9 + (dy + 4)

    key = encode(u, v, dv[:, 0], dv[:, 1])
    order = np.argsort(key, kind="stable")
    sk = key[order]
    if np.any(sk[1:] == sk[:-1]):
        return None, None
    twin_key = encode(v, u, -dv[:, 0], -dv[:, 1])
    pos = np.searchsorted(sk, twin_key)
    pos[pos >= len(sk)] = 0
    if np.any(sk[pos] != twin_key):
        return None, None
    twin = order[pos]
    return (twin // 3).reshape(ntri, 3), (twin % 3).reshape(ntri, 3)


class PeriodicDelaunay:
    """Mutable periodic Delaunay triangulation following moving generators."""

    def __init__(self, domain: TorusDomain, points):
        self.domain = domain
        self._lat = np.ascontiguousarray(domain.basis, dtype=float)
        self._inv = np.ascontiguousarray(np.linalg.inv(domain.basis))
        self.rebuilds = 0
        self.flips = 0
        self._rebuild(np.asarray(points, dtype=float))

    @property
    def n(self) -> int:
        return len(self.pos)

    def _rebuild(self, points: np.ndarray) -> None:
        dom = self.domain
        pos = np.ascontiguousarray(dom.reduce(points))
        n = len(pos)
        if n < 1:
            raise ValueError("need at least one generator")
        _check_distinct(dom, pos)
        self.rebuilds += 1
        h = dom.spacing(n)
        margin0 = min(_MAX_MARGIN, 3.0 / math.sqrt(n))
        for jitter in (0.0, 1e-7, 1e-5):
            trial = pos if jitter == 0.0 else dom.reduce(pos + _perturbation(n, jitter * h))
            if n == 1:
                # all images of one site are cocircular in fours and jitter moves them together
                res = _single_site()
            else:
                margin = margin0
                while True:
                    res = _planar_periodic(dom, trial, margin)
                    if res is not None or margin >= _MAX_MARGIN:
                        break
                    margin = min(_MAX_MARGIN, 2.0 * margin)
            if res is None:
                continue
            tri, off, nbr, nbc = res
            if jitter != 0.0:
                # offsets were computed for the jittered copy; re-express them for the true positions
                corr = np.rint(dom.to_lattice(trial) - dom.to_lattice(pos)).astype(np.int64)
                off = off + corr[tri]
            self.pos = pos
            self.tri = np.ascontiguousarray(tri)
            self.off = np.ascontiguousarray(off)
            self.nbr = np.ascontiguousarray(nbr)
            self.nbc = np.ascontiguousarray(nbc)
            if K.min_signed_area(self.pos, self._lat, self.tri, self.off) <= 0.0:
                continue
            if self._legalize() < 0:
                continue
            return
        raise NumericalFailure("could not build a periodic triangulation from replicated images")

    def _legalize(self) -> int:
        n = self.n
        size = 3 * len(self.tri) + 4 * (20 * n + 100)
        if getattr(self, "_stack", None) is None or len(self._stack[0]) != size:
            self._stack = (np.empty(size, dtype=np.int64), np.empty(size, dtype=np.int64))
        flips = K.legalize(self.pos, self._lat, self.tri, self.off, self.nbr, self.nbc,
                           _INCIRCLE_EPS, *self._stack)
        if flips > 0:
            self.flips += flips
        return flips

    def _move_to(self, new: np.ndarray) -> bool:
        """Move vertices to the reduced positions ``new`` keeping the combinatorics."""
        K.relocate(self.pos, new, self._lat, self._inv, self.tri, self.off)
        if K.min_signed_area(self.pos, self._lat, self.tri, self.off) <= _MIN_AREA * self.domain.area / self.n:
            return False
        if self._legalize() < 0:
            return False
        return K.min_signed_area(self.pos, self._lat, self.tri, self.off) > 0.0

    def update(self, points) -> None:
        """Move the generators to ``points`` (any lift) and restore Delaunay.

        A move that would invert a triangle is retried in 4, 16 and 64 equal
        sub-steps with flips in between; only if that fails is the
        triangulation rebuilt from scratch.
        """
        dom = self.domain
        points = np.asarray(points, dtype=float)
        if points.shape != self.pos.shape:
            raise ValueError("the number of generators cannot change")
        new = K.reduce_points(np.ascontiguousarray(points), self._lat, self._inv)
        saved = (self.pos.copy(), self.tri.copy(), self.off.copy(), self.nbr.copy(), self.nbc.copy())
        if self.n >= 3:
            start = saved[0]
            delta = dom.minimal_image(new - start)
            for steps in (1, 4, 16, 64):
                ok = True
                for k in range(1, steps):
                    if not self._move_to(K.reduce_points(start + delta * (k / steps), self._lat, self._inv)):
                        ok = False
                        break
                if ok and self._move_to(new):
                    return
                pos, tri, off, nbr, nbc = saved
                self.pos, self.tri, self.off, self.nbr, self.nbc = (
                    pos.copy(), tri.copy(), off.copy(), nbr.copy(), nbc.copy())
        try:
            self._rebuild(new)
        except Exception:
            self.pos, self.tri, self.off, self.nbr, self.nbc = saved
            raise

    def tessellation(self) -> "PeriodicTessellation":
        """Immutable snapshot of the current Voronoi diagram."""
        cc = K.circumcenters(self.pos, self._lat, self.tri, self.off)
        area, mom1, mom2 = K.cell_integrals(self.pos, self._lat, self.tri, self.off, cc, self.n)
        return PeriodicTessellation(
            domain=self.domain,
            positions=self.pos.copy(),
            areas=area,
            centroid_offsets=mom1 / area[:, None],
            second_moments=mom2,
            _structure=(self._lat, self.tri.copy(), self.off.copy(), self.nbr.copy(), self.nbc.copy(), cc),
        )


def _frozen(*arrays):
    for a in arrays:
        a.setflags(write=False)
    return arrays


@dataclass(frozen=True, eq=False)
class PeriodicTessellation:
    """Periodic Voronoi diagram of N generators.

    Per-cell arrays are indexed like the generators. Vector quantities tied to
    a cell (centroid offsets, closest-neighbor vectors, Voronoi edge segments)
    are relative to the generator, in the lift where the cell is one planar
    polygon. Edge-based quantities are computed on first access.

    ``edge_*`` arrays hold one row per Voronoi edge of positive length: the
    two generator indices, the lattice offset of the second relative to the
    first, the lifted vector between them and the edge endpoints relative to
    the first generator (counter-clockwise about it). A generator adjacent to
    its own image appears as an edge (i, i) with a nonzero offset.
    """

    domain: TorusDomain
    positions: np.ndarray
    areas: np.ndarray
    centroid_offsets: np.ndarray
    second_moments: np.ndarray
    _structure: tuple

    def __post_init__(self):
        _frozen(self.positions, self.areas, self.centroid_offsets, self.second_moments)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def n(self) -> int:
        return len(self.positions)

    @cached_property
    def _edges(self):
        lat, tri, off, nbr, nbc, cc = self._structure
        ij, ioff, dvec, pq = K.edge_table(self.positions, lat, tri, off, nbr, nbc, cc,
                                          _ZERO_EDGE * self.domain.spacing(self.n))
        summary = K.neighbor_summary(ij, ioff, dvec, pq, self.n, _TIE_EPS)
        return _frozen(ij, ioff, dvec, pq, *summary)

    @property
    def edge_index(self) -> np.ndarray:
        return self._edges[0]

    @property
    def edge_offset(self) -> np.ndarray:
        return self._edges[1]

    @property
    def edge_vector(self) -> np.ndarray:
        return self._edges[2]

    @property
    def edge_segment(self) -> np.ndarray:
        return self._edges[3]

    @property
    def degree(self) -> np.ndarray:
        """Number of Voronoi edges of each cell (images of one neighbor counted separately)."""
        return self._edges[4]

    @property
    def perimeters(self) -> np.ndarray:
        return self._edges[5]

    @property
    def closest_neighbor(self) -> np.ndarray:
        return self._edges[6]

    @property
    def closest_offset(self) -> np.ndarray:
        """Lattice offset of the closest neighbor's image relative to the generator."""
        return self._edges[7]

    @property
    def closest_vector(self) -> np.ndarray:
        """x_{j*} - x_i in the lift."""
        return self._edges[8]

    @cached_property
    def centroids(self) -> np.ndarray:
        """Cell centroids in the generator's lift (may lie outside the fundamental domain)."""
        c = self.positions + self.centroid_offsets
        c.setflags(write=False)
        return c

    @cached_property
    def cells(self) -> list[np.ndarray]:
        """CCW vertex list of every cell, in the lift containing its generator."""
        lat, tri, off, nbr, nbc, cc = self._structure
        flat, start = K.cell_walk(self.positions, lat, tri, off, nbr, nbc, cc, self.n,
                                  _ZERO_EDGE * self.domain.spacing(self.n))
        return [self.positions[i] + flat[start[i]:start[i + 1]] for i in range(self.n)]

    @cached_property
    def neighbor_sets(self) -> list[frozenset[int]]:
        """Indices j != i whose cells share an edge with cell i (images identified)."""
        sets = [set() for _ in range(self.n)]
        for i, j in self.edge_index.tolist():
            if i != j:
                sets[i].add(j)
                sets[j].add(i)
        return [frozenset(s) for s in sets]

    @cached_property
    def delaunay_edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((min(i, j), max(i, j)) for i, j in self.edge_index.tolist() if i != j)


def build_tessellation(domain: TorusDomain, gens) -> PeriodicTessellation:
    """Periodic Voronoi tessellation of ``gens`` (a GeneratorSet or (N, 2) array)."""
    pts = gens.positions if isinstance(gens, GeneratorSet) else np.asarray(gens, dtype=float)
    return PeriodicDelaunay(domain, pts).tessellation()
