"""CVT optimizers: Lloyd, L-BFGS(M) and P-L-BFGS(M, T) on the scaled energy E."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..energy import f_hex, graph_laplacian
from ..errors import DegenerateInput, NumericalFailure
from ..geometry import GeneratorSet, PeriodicDelaunay, PeriodicTessellation, TorusDomain
from .lbfgs import minimize_lbfgs
from .line_search import WolfeCertificate
from .preconditioner import ShiftedFactor, solve_preconditioner

LLOYD_MAX_ITER = 1_000_000
# relative slack on the Lloyd monotonicity check: F is summed over N cells
_MONOTONE_SLACK = 1e-12


def default_tol(domain: TorusDomain) -> float:
    return 1e-12 * math.sqrt(domain.area)


def _positions(gens) -> np.ndarray:
    return np.array(gens.positions if isinstance(gens, GeneratorSet) else gens, dtype=float)


@dataclass
class OptimizerReport:
    """Outcome of one optimizer run.

    ``trace`` has one row (F, E, ||DE||/N) per iterate, the initial one
    included, so ``len(trace) == iterations + 1``.
    """

    method: str
    final: GeneratorSet
    tessellation: PeriodicTessellation
    iterations: int
    trace: np.ndarray
    converged: bool
    wall_time: float
    evaluations: int = 0
    message: str = ""
    certificates: list[WolfeCertificate] = field(default_factory=list)
    restarts: int = 0
    preconditioned_steps: int = 0
    monotone: bool = True

    @property
    def E(self) -> float:
        return float(self.trace[-1, 1])

    @property
    def F(self) -> float:
        return float(self.trace[-1, 0])

    @property
    def gradient_measure(self) -> float:
        return float(self.trace[-1, 2])


class CvtObjective:
    """E and D E as a function of flat, unreduced positions.

    Owns (or borrows) a moving periodic Delaunay triangulation so successive
    evaluations only pay for local flips.
    """

    def __init__(self, domain: TorusDomain, positions: np.ndarray, engine: PeriodicDelaunay | None = None):
        self.domain = domain
        self.engine = engine if engine is not None else PeriodicDelaunay(domain, positions)
        if engine is not None:
            engine.update(positions)
        self.n = self.engine.n
        self.fh = f_hex(domain, self.n)
        self.scale = 1.0 / (self.n * self.fh)
        self.evaluations = 0
        self.tess = self.engine.tessellation()
        self._edge_key = None
        self._topology_mark = (self.engine.flips, self.engine.rebuilds)

    def __call__(self, x: np.ndarray):
        self.evaluations += 1
        try:
            self.engine.update(x.reshape(-1, 2))
        except (DegenerateInput, NumericalFailure):
            return math.inf, np.full(x.shape, np.nan)
        self.tess = t = self.engine.tessellation()
        e = float(t.second_moments.sum()) * self.scale
        g = (-2.0 * self.scale) * (t.areas[:, None] * t.centroid_offsets).ravel()
        return e, g

    def gnorm(self, g: np.ndarray) -> float:
        return float(np.linalg.norm(g)) / self.n

    def f_noise(self, f: float) -> float:
        return 10.0 * math.sqrt(self.n) * np.finfo(float).eps * abs(f)

    def _edges(self) -> np.ndarray:
        ij = np.sort(self.tess.edge_index, axis=1)
        key = ij[:, 0] * self.n + ij[:, 1]
        return np.unique(key)

    def topology_changed(self) -> bool:
        mark = (self.engine.flips, self.engine.rebuilds)
        if mark == self._topology_mark and self._edge_key is not None:
            return False
        self._topology_mark = mark
        key = self._edges()
        changed = self._edge_key is not None and not np.array_equal(key, self._edge_key)
        self._edge_key = key
        return changed

    def energy_row(self) -> tuple[float, float, float]:
        t = self.tess
        f = float(t.second_moments.sum())
        g = (-2.0 * self.scale) * (t.areas[:, None] * t.centroid_offsets).ravel()
        return f, f * self.scale, self.gnorm(g)


def lloyd(
    domain: TorusDomain,
    gens,
    tol: float | None = None,
    max_iter: int = LLOYD_MAX_ITER,
    engine: PeriodicDelaunay | None = None,
    callback=None,
) -> OptimizerReport:
    """Lloyd's fixed-point iteration x_i <- c_i until ||DE||/N < tol.

    Hitting ``max_iter`` returns the lowest-energy iterate with
    ``converged=False``.
    """
    tol = default_tol(domain) if tol is None else tol
    start = time.perf_counter()
    obj = CvtObjective(domain, _positions(gens), engine)
    rows = [obj.energy_row()]
    best = (rows[0][0], obj.tess.positions.copy())
    monotone = True
    k = 0
    while rows[-1][2] >= tol and k < max_iter:
        t = obj.tess
        obj(t.positions + t.centroid_offsets)
        rows.append(obj.energy_row())
        k += 1
        if rows[-1][0] > rows[-2][0] * (1.0 + _MONOTONE_SLACK):
            monotone = False
        if rows[-1][0] < best[0]:
            best = (rows[-1][0], obj.tess.positions.copy())
        if callback is not None:
            callback(k, obj.tess)
    converged = rows[-1][2] < tol
    message = ""
    if not converged:
        message = f"iteration cap {max_iter} reached"
        if best[0] < rows[-1][0]:
            obj(best[1])
            rows.append(obj.energy_row())
    return OptimizerReport(
        method="lloyd", final=GeneratorSet(obj.tess.positions), tessellation=obj.tess, iterations=k,
        trace=np.array(rows), converged=converged, wall_time=time.perf_counter() - start,
        evaluations=obj.evaluations + 1, message=message, monotone=monotone,
    )


def _quasi_newton(domain, gens, M, T, tol, max_iter, engine, method, callback=None, line_search=None):
    tol = default_tol(domain) if tol is None else tol
    start = time.perf_counter()
    obj = CvtObjective(domain, _positions(gens), engine)
    n = obj.n
    # the first direction is a Lloyd-sized step: DE_i times N F_hex / (2 |V_i|) with |V_i| ~ |Omega|/N
    h0 = n * n * obj.fh / (2.0 * domain.area)
    precond = None
    if T is not None:
        def precond(q):
            factor = ShiftedFactor(graph_laplacian(domain, tess=obj.tess))
            return solve_preconditioner(None, q, factor) * (n * obj.fh)

    x0 = obj.tess.positions.ravel().copy()
    rows = []

    def record(k, x, f, g):
        rows.append(obj.energy_row())
        if callback is not None:
            callback(k, obj.tess)

    rows.append(obj.energy_row())
    obj.topology_changed()
    res = minimize_lbfgs(
        obj, x0, M=M, T=T, precond=precond, gnorm=obj.gnorm, tol=tol, max_iter=max_iter,
        h0_initial=h0, topology_changed=obj.topology_changed, f_noise=obj.f_noise,
        callback=record, line_search=line_search,
    )
    return OptimizerReport(
        method=method, final=GeneratorSet(obj.tess.positions), tessellation=obj.tess,
        iterations=res.iterations, trace=np.array(rows), converged=res.converged,
        wall_time=time.perf_counter() - start, evaluations=obj.evaluations + 1, message=res.message,
        certificates=res.certificates, restarts=res.restarts, preconditioned_steps=res.preconditioned_steps,
    )


def lbfgs(domain: TorusDomain, gens, M: int = 7, tol: float | None = None, max_iter: int = 100000,
          engine: PeriodicDelaunay | None = None, callback=None, line_search=None) -> OptimizerReport:
    """L-BFGS(M) on E until ||DE||/N < tol."""
    return _quasi_newton(domain, gens, M, None, tol, max_iter, engine, f"lbfgs({M})", callback, line_search)


def plbfgs(domain: TorusDomain, gens, M: int = 20, T: int | None = 20, tol: float | None = None,
           max_iter: int = 100000, engine: PeriodicDelaunay | None = None, callback=None,
           line_search=None) -> OptimizerReport:
    """P-L-BFGS(M, T): every T-th direction is preconditioned with the graph Laplacian.

    ``T=None`` never preconditions and is the same iteration as :func:`lbfgs`.
    """
    name = f"plbfgs({M},{'inf' if T is None else T})"
    return _quasi_newton(domain, gens, M, T, tol, max_iter, engine, name, callback, line_search)
