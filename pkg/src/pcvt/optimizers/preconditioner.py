"""Shifted sparse solves with the periodic graph Laplacian."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import PreconditionFailure

SHIFT_LADDER = (1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4)


class ShiftedFactor:
    """Factorization of G + sigma I with the smallest sigma from the ladder that is SPD.

    Positive definiteness is read off the pivots of a symmetric-mode LU
    without row interchanges, which then coincides with an LDL^T
    factorization.
    """

    def __init__(self, g: sp.spmatrix, ladder=SHIFT_LADDER):
        g = sp.csc_matrix(g, dtype=float)
        n = g.shape[0]
        if g.shape != (n, n):
            raise ValueError("G must be square")
        scale = float(g.diagonal().sum()) / n
        if not scale > 0.0:
            raise PreconditionFailure("graph Laplacian has zero trace")
        self.scale = scale
        for rel in ladder:
            sigma = rel * scale
            a = (g + sigma * sp.identity(n, format="csc")).tocsc()
            try:
                lu = spla.splu(a, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                               options=dict(SymmetricMode=True))
            except RuntimeError:
                continue
            if np.all(lu.perm_r == lu.perm_c) and np.all(lu.U.diagonal() > 0.0):
                self.sigma = sigma
                self._lu = lu
                return
        raise PreconditionFailure("no shift in the ladder makes G positive definite")

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(b, dtype=float))


def solve_preconditioner(g, q: np.ndarray, factor: ShiftedFactor | None = None) -> np.ndarray:
    """Apply (G + sigma I)^-1 to each coordinate axis of an interleaved 2N vector.

    The constant vector spans the null space of G; that component of q is
    passed through scaled by the mean diagonal of G instead of being amplified
    by 1/sigma.
    """
    factor = factor or ShiftedFactor(g)
    q = np.asarray(q, dtype=float)
    cols = q.reshape(-1, 2)
    mean = cols.mean(axis=0)
    r = factor.solve(cols - mean)
    r -= r.mean(axis=0)
    r += mean / factor.scale
    if not np.all(np.isfinite(r)):
        raise PreconditionFailure("preconditioned direction is not finite")
    return r.ravel()
