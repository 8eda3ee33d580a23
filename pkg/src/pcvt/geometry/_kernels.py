"""Numba kernels for the periodic Delaunay triangulation.

Triangulation layout (T triangles on a torus with N vertices, T == 2N):

* ``tri[t, k]``   vertex id of corner k (counter-clockwise).
* ``off[t, k]``   integer lattice offset of that corner; its lifted position is
  ``pos[tri[t, k]] + off[t, k] @ lat``. Only offset *differences* inside one
  triangle are ever used, so every triangle carries its own frame.
* ``nbr[t, k]``   triangle across the edge opposite corner k.
* ``nbc[t, k]``   corner of ``nbr[t, k]`` opposite the same edge.

Cell quantities are accumulated per triangle corner from the two signed
triangles (a, mid(ab), O) and (a, O, mid(ac)) where O is the circumcenter.
Summed around a vertex of a Delaunay triangulation these pieces tile its
Voronoi cell exactly, obtuse triangles included.
"""

import numpy as np
from numba import njit

_SIXTH = 1.0 / 6.0
_TWELFTH = 1.0 / 12.0


@njit(cache=True, inline="always")
def _norm(x, y):
    return np.sqrt(x * x + y * y)


@njit(cache=True, inline="always")
def _rel(pos, lat, tri, off, t, k_from, k_to):
    """Vector from corner k_from to corner k_to of triangle t."""
    a = tri[t, k_from]
    b = tri[t, k_to]
    dox = off[t, k_to, 0] - off[t, k_from, 0]
    doy = off[t, k_to, 1] - off[t, k_from, 1]
    x = pos[b, 0] - pos[a, 0] + dox * lat[0, 0] + doy * lat[1, 0]
    y = pos[b, 1] - pos[a, 1] + dox * lat[0, 1] + doy * lat[1, 1]
    return x, y


@njit(cache=True)
def min_signed_area(pos, lat, tri, off):
    """Smallest signed area over all triangles (negative means inverted)."""
    best = np.inf
    for t in range(tri.shape[0]):
        bx, by = _rel(pos, lat, tri, off, t, 0, 1)
        cx, cy = _rel(pos, lat, tri, off, t, 0, 2)
        a = 0.5 * (bx * cy - by * cx)
        if a < best:
            best = a
    return best


@njit(cache=True)
def _incircle(bx, by, cx, cy, dx, dy):
    """> 0 iff d lies inside the circumcircle of the CCW triangle (0, b, c)."""
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    d2 = dx * dx + dy * dy
    det = -(bx * (cy * d2 - c2 * dy) - by * (cx * d2 - c2 * dx) + b2 * (cx * dy - cy * dx))
    scale = (b2 + c2 + d2) * (b2 + c2 + d2)
    return det, scale


@njit(cache=True)
def legalize(pos, lat, tri, off, nbr, nbc, rel_eps, stack_t, stack_k):
    """Lawson edge flips until every edge is locally Delaunay.

    The work stacks bound the number of flips to (len(stack) - 3T) / 4.
    Returns the number of flips, or -1 when the structure cannot be repaired
    in place (self-adjacent triangles, non-convex quad, flip budget exceeded).
    """
    ntri = tri.shape[0]
    max_flips = (stack_t.shape[0] - 3 * ntri) // 4
    top = 0
    for t in range(ntri):
        for k in range(3):
            if nbr[t, k] >= t:
                stack_t[top] = t
                stack_k[top] = k
                top += 1
    flips = 0
    while top > 0:
        top -= 1
        t = stack_t[top]
        k = stack_k[top]
        t2 = nbr[t, k]
        j = nbc[t, k]
        k1 = (k + 1) % 3
        k2 = (k + 2) % 3
        j1 = (j + 1) % 3
        j2 = (j + 2) % 3
        # opposite vertex d of t2 expressed in t's frame (shared vertex b = corner k1 of t, j2 of t2)
        sx = off[t, k1, 0] - off[t2, j2, 0]
        sy = off[t, k1, 1] - off[t2, j2, 1]
        odx = off[t2, j, 0] + sx
        ody = off[t2, j, 1] + sy
        a = tri[t, k]
        d = tri[t2, j]
        bx, by = _rel(pos, lat, tri, off, t, k, k1)
        cx, cy = _rel(pos, lat, tri, off, t, k, k2)
        dox = odx - off[t, k, 0]
        doy = ody - off[t, k, 1]
        dx = pos[d, 0] - pos[a, 0] + dox * lat[0, 0] + doy * lat[1, 0]
        dy = pos[d, 1] - pos[a, 1] + dox * lat[0, 1] + doy * lat[1, 1]
        det, scale = _incircle(bx, by, cx, cy, dx, dy)
        if det <= rel_eps * scale:
            continue
        if t2 == t:
            return -1
        # quad a, b, d, c must be strictly convex for the flip to be valid
        if bx * dy - by * dx <= 0.0 or dx * cy - dy * cx <= 0.0:
            return -1
        if flips >= max_flips:
            return -1
        n_ab = nbr[t, k2]
        c_ab = nbc[t, k2]
        n_ca = nbr[t, k1]
        c_ca = nbc[t, k1]
        n_bd = nbr[t2, j1]
        c_bd = nbc[t2, j1]
        n_dc = nbr[t2, j2]
        c_dc = nbc[t2, j2]
        if n_ab == t or n_ab == t2 or n_ca == t or n_ca == t2:
            return -1
        if n_bd == t or n_bd == t2 or n_dc == t or n_dc == t2:
            return -1
        b = tri[t, k1]
        c = tri[t, k2]
        oax = off[t, k, 0]
        oay = off[t, k, 1]
        obx = off[t, k1, 0]
        oby = off[t, k1, 1]
        ocx = off[t, k2, 0]
        ocy = off[t, k2, 1]
        # new t = (a, b, d), new t2 = (a, d, c), both in t's frame
        tri[t, 0] = a
        tri[t, 1] = b
        tri[t, 2] = d
        off[t, 0, 0] = oax
        off[t, 0, 1] = oay
        off[t, 1, 0] = obx
        off[t, 1, 1] = oby
        off[t, 2, 0] = odx
        off[t, 2, 1] = ody
        tri[t2, 0] = a
        tri[t2, 1] = d
        tri[t2, 2] = c
        off[t2, 0, 0] = oax
        off[t2, 0, 1] = oay
        off[t2, 1, 0] = odx
        off[t2, 1, 1] = ody
        off[t2, 2, 0] = ocx
        off[t2, 2, 1] = ocy
        nbr[t, 0] = n_bd
        nbc[t, 0] = c_bd
        nbr[t, 1] = t2
        nbc[t, 1] = 2
        nbr[t, 2] = n_ab
        nbc[t, 2] = c_ab
        nbr[t2, 0] = n_dc
        nbc[t2, 0] = c_dc
        nbr[t2, 1] = n_ca
        nbc[t2, 1] = c_ca
        nbr[t2, 2] = t
        nbc[t2, 2] = 1
        nbr[n_bd, c_bd] = t
        nbc[n_bd, c_bd] = 0
        nbr[n_dc, c_dc] = t2
        nbc[n_dc, c_dc] = 0
        nbr[n_ab, c_ab] = t
        nbc[n_ab, c_ab] = 2
        nbr[n_ca, c_ca] = t2
        nbc[n_ca, c_ca] = 1
        flips += 1
        stack_t[top] = t
        stack_k[top] = 0
        stack_t[top + 1] = t
        stack_k[top + 1] = 2
        stack_t[top + 2] = t2
        stack_k[top + 2] = 0
        stack_t[top + 3] = t2
        stack_k[top + 3] = 1
        top += 4
    return flips


@njit(cache=True)
def wrap_vertices(pos, lat, inv, tri, off):
    """Reduce vertex positions into the fundamental cell, compensating offsets."""
    n = pos.shape[0]
    shift = np.zeros((n, 2), dtype=np.int64)
    moved = False
    for i in range(n):
        s0 = pos[i, 0] * inv[0, 0] + pos[i, 1] * inv[1, 0]
        s1 = pos[i, 0] * inv[0, 1] + pos[i, 1] * inv[1, 1]
        f0 = np.floor(s0)
        f1 = np.floor(s1)
        if f0 != 0.0 or f1 != 0.0:
            moved = True
            shift[i, 0] = np.int64(f0)
            shift[i, 1] = np.int64(f1)
            pos[i, 0] -= f0 * lat[0, 0] + f1 * lat[1, 0]
            pos[i, 1] -= f0 * lat[0, 1] + f1 * lat[1, 1]
    if moved:
        for t in range(tri.shape[0]):
            for k in range(3):
                v = tri[t, k]
                off[t, k, 0] += shift[v, 0]
                off[t, k, 1] += shift[v, 1]


@njit(cache=True)
def circumcenters(pos, lat, tri, off):
    """Circumcenter of each triangle relative to its corner 0."""
    ntri = tri.shape[0]
    out = np.empty((ntri, 2))
    for t in range(ntri):
        bx, by = _rel(pos, lat, tri, off, t, 0, 1)
        cx, cy = _rel(pos, lat, tri, off, t, 0, 2)
        d = 2.0 * (bx * cy - by * cx)
        b2 = bx * bx + by * by
        c2 = cx * cx + cy * cy
        out[t, 0] = (cy * b2 - by * c2) / d
        out[t, 1] = (bx * c2 - cx * b2) / d
    return out


@njit(cache=True)
def _cc_rel(cc, pos, lat, tri, off, t, k):
    """Circumcenter of t relative to its corner k."""
    if k == 0:
        return cc[t, 0], cc[t, 1]
    x, y = _rel(pos, lat, tri, off, t, 0, k)
    return cc[t, 0] - x, cc[t, 1] - y


@njit(cache=True)
def cell_integrals(pos, lat, tri, off, cc, n):
    """Area, first moment and second moment of every cell about its generator."""
    area = np.zeros(n)
    mom1 = np.zeros((n, 2))
    mom2 = np.zeros(n)
    px = np.empty(3)
    py = np.empty(3)
    for t in range(tri.shape[0]):
        px[0] = 0.0
        py[0] = 0.0
        px[1], py[1] = _rel(pos, lat, tri, off, t, 0, 1)
        px[2], py[2] = _rel(pos, lat, tri, off, t, 0, 2)
        for k in range(3):
            a = tri[t, k]
            k1 = (k + 1) % 3
            k2 = (k + 2) % 3
            bx = 0.5 * (px[k1] - px[k])
            by = 0.5 * (py[k1] - py[k])
            cx = 0.5 * (px[k2] - px[k])
            cy = 0.5 * (py[k2] - py[k])
            ox = cc[t, 0] - px[k]
            oy = cc[t, 1] - py[k]
            # pieces (0, B/2, O) and (0, O, C/2)
            cr1 = bx * oy - by * ox
            cr2 = ox * cy - oy * cx
            o2 = ox * ox + oy * oy
            area[a] += 0.5 * (cr1 + cr2)
            mom1[a, 0] += (cr1 * (bx + ox) + cr2 * (ox + cx)) * _SIXTH
            mom1[a, 1] += (cr1 * (by + oy) + cr2 * (oy + cy)) * _SIXTH
            mom2[a] += (cr1 * (bx * bx + by * by + o2 + bx * ox + by * oy)
                        + cr2 * (o2 + cx * cx + cy * cy + ox * cx + oy * cy)) * _TWELFTH
    return area, mom1, mom2


@njit(cache=True)
def edge_table(pos, lat, tri, off, nbr, nbc, cc, zero_len):
    """One row per Delaunay edge whose dual Voronoi edge has positive length.

    Columns: i, j, lattice offset (j relative to i), d = x_j - x_i (lifted),
    Voronoi edge endpoints p, q relative to x_i. Rows are ordered by the
    (triangle, corner) of their first half-edge.
    """
    ntri = tri.shape[0]
    m = 3 * ntri // 2 + 3
    ij = np.empty((m, 2), dtype=np.int64)
    ioff = np.empty((m, 2), dtype=np.int64)
    dvec = np.empty((m, 2))
    pq = np.empty((m, 4))
    ne = 0
    for t in range(ntri):
        for k in range(3):
            t2 = nbr[t, k]
            j = nbc[t, k]
            if t2 < t or (t2 == t and j < k):
                continue
            k1 = (k + 1) % 3
            k2 = (k + 2) % 3
            # edge from b = corner k1 to c = corner k2; in t2 the vertex b is corner j+2
            px, py = _cc_rel(cc, pos, lat, tri, off, t, k1)
            qx, qy = _cc_rel(cc, pos, lat, tri, off, t2, (j + 2) % 3)
            ex = qx - px
            ey = qy - py
            if np.sqrt(ex * ex + ey * ey) <= zero_len:
                continue
            dx, dy = _rel(pos, lat, tri, off, t, k1, k2)
            ij[ne, 0] = tri[t, k1]
            ij[ne, 1] = tri[t, k2]
            ioff[ne, 0] = off[t, k2, 0] - off[t, k1, 0]
            ioff[ne, 1] = off[t, k2, 1] - off[t, k1, 1]
            dvec[ne, 0] = dx
            dvec[ne, 1] = dy
            # the Voronoi edge runs from O_t2 to O_t when seen CCW around b... keep
            # (p, q) oriented so that cross(p, q) > 0 about x_i
            if px * qy - py * qx >= 0.0:
                pq[ne, 0] = px
                pq[ne, 1] = py
                pq[ne, 2] = qx
                pq[ne, 3] = qy
            else:
                pq[ne, 0] = qx
                pq[ne, 1] = qy
                pq[ne, 2] = px
                pq[ne, 3] = py
            ne += 1
    return ij[:ne], ioff[:ne], dvec[:ne], pq[:ne]


@njit(cache=True)
def neighbor_summary(ij, ioff, dvec, pq, n, rel_tie):
    """Per-cell degree, perimeter and closest neighbor (index, offset, vector).

    Ties in distance (relative ``rel_tie``) go to the lowest neighbor index,
    then the lexicographically smallest lattice offset.
    """
    degree = np.zeros(n, dtype=np.int64)
    perim = np.zeros(n)
    dmin = np.full(n, np.inf)
    ne = ij.shape[0]
    for e in range(ne):
        ln = _norm(pq[e, 2] - pq[e, 0], pq[e, 3] - pq[e, 1])
        dist = _norm(dvec[e, 0], dvec[e, 1])
        for side in range(2):
            i = ij[e, side]
            degree[i] += 1
            perim[i] += ln
            if dist < dmin[i]:
                dmin[i] = dist
    best_j = np.full(n, -1, dtype=np.int64)
    best_o = np.zeros((n, 2), dtype=np.int64)
    best_v = np.zeros((n, 2))
    for e in range(ne):
        dist = _norm(dvec[e, 0], dvec[e, 1])
        for side in range(2):
            i = ij[e, side]
            if dist > dmin[i] * (1.0 + rel_tie):
                continue
            if side == 0:
                j = ij[e, 1]
                ox = ioff[e, 0]
                oy = ioff[e, 1]
                vx = dvec[e, 0]
                vy = dvec[e, 1]
            else:
                j = ij[e, 0]
                ox = -ioff[e, 0]
                oy = -ioff[e, 1]
                vx = -dvec[e, 0]
                vy = -dvec[e, 1]
            cur = best_j[i]
            take = False
            if cur < 0 or j < cur:
                take = True
            elif j == cur:
                if ox < best_o[i, 0] or (ox == best_o[i, 0] and oy < best_o[i, 1]):
                    take = True
            if take:
                best_j[i] = j
                best_o[i, 0] = ox
                best_o[i, 1] = oy
                best_v[i, 0] = vx
                best_v[i, 1] = vy
    return degree, perim, best_j, best_o, best_v


@njit(cache=True)
def cell_walk(pos, lat, tri, off, nbr, nbc, cc, n, zero_len):
    """CCW Voronoi polygon of every vertex, relative to the vertex.

    Returns flat vertex coordinates and per-cell start indices (CSR layout).
    Consecutive duplicate vertices (zero-length edges) are dropped.
    """
    first_t = np.full(n, -1, dtype=np.int64)
    first_k = np.zeros(n, dtype=np.int64)
    for t in range(tri.shape[0]):
        for k in range(3):
            v = tri[t, k]
            if first_t[v] < 0:
                first_t[v] = t
                first_k[v] = k
    ntri = tri.shape[0]
    out = np.empty((3 * ntri, 2))
    start = np.zeros(n + 1, dtype=np.int64)
    m = 0
    for v in range(n):
        start[v] = m
        t0 = first_t[v]
        k0 = first_k[v]
        t = t0
        k = k0
        cnt0 = m
        steps = 0
        while True:
            ox, oy = _cc_rel(cc, pos, lat, tri, off, t, k)
            if m == cnt0 or _norm(ox - out[m - 1, 0], oy - out[m - 1, 1]) > zero_len:
                out[m, 0] = ox
                out[m, 1] = oy
                m += 1
            kk = (k + 1) % 3
            tn = nbr[t, kk]
            k = (nbc[t, kk] + 1) % 3
            t = tn
            steps += 1
            if (t == t0 and k == k0) or steps > 3 * ntri:
                break
        if m - cnt0 > 1 and _norm(out[m - 1, 0] - out[cnt0, 0], out[m - 1, 1] - out[cnt0, 1]) <= zero_len:
            m -= 1
    start[n] = m
    return out[:m].copy(), start


@njit(cache=True)
def minimal_image(vec, lat, inv):
    """Shortest lattice representative of each row of ``vec``."""
    m = vec.shape[0]
    out = np.empty((m, 2))
    for r in range(m):
        s0 = vec[r, 0] * inv[0, 0] + vec[r, 1] * inv[1, 0]
        s1 = vec[r, 0] * inv[0, 1] + vec[r, 1] * inv[1, 1]
        s0 -= np.round(s0)
        s1 -= np.round(s1)
        best = np.inf
        bx = 0.0
        by = 0.0
        for a in range(-1, 2):
            for b in range(-1, 2):
                t0 = s0 + a
                t1 = s1 + b
                x = t0 * lat[0, 0] + t1 * lat[1, 0]
                y = t0 * lat[0, 1] + t1 * lat[1, 1]
                d = x * x + y * y
                if d < best:
                    best = d
                    bx = x
                    by = y
        out[r, 0] = bx
        out[r, 1] = by
    return out


@njit(cache=True)
def reduce_points(pts, lat, inv):
    """Map points into the half-open fundamental parallelogram."""
    m = pts.shape[0]
    out = np.empty((m, 2))
    for r in range(m):
        s0 = pts[r, 0] * inv[0, 0] + pts[r, 1] * inv[1, 0]
        s1 = pts[r, 0] * inv[0, 1] + pts[r, 1] * inv[1, 1]
        s0 -= np.floor(s0)
        s1 -= np.floor(s1)
        if s0 >= 1.0:
            s0 = 0.0
        if s1 >= 1.0:
            s1 = 0.0
        out[r, 0] = s0 * lat[0, 0] + s1 * lat[1, 0]
        out[r, 1] = s0 * lat[0, 1] + s1 * lat[1, 1]
    return out


@njit(cache=True)
def relocate(pos, new, lat, inv, tri, off):
    """Set pos <- new (both reduced) keeping every lifted triangle corner continuous.

    Each vertex is assumed to travel along the shortest image of new - pos.
    """
    n = pos.shape[0]
    delta = minimal_image(new - pos, lat, inv)
    shift = np.empty((n, 2), dtype=np.int64)
    for i in range(n):
        x = pos[i, 0] + delta[i, 0] - new[i, 0]
        y = pos[i, 1] + delta[i, 1] - new[i, 1]
        shift[i, 0] = np.int64(np.rint(x * inv[0, 0] + y * inv[1, 0]))
        shift[i, 1] = np.int64(np.rint(x * inv[0, 1] + y * inv[1, 1]))
        pos[i, 0] = new[i, 0]
        pos[i, 1] = new[i, 1]
    for t in range(tri.shape[0]):
        for k in range(3):
            v = tri[t, k]
            off[t, k, 0] += shift[v, 0]
            off[t, k, 1] += shift[v, 1]
