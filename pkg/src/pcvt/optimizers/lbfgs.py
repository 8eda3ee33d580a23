"""Limited-memory BFGS with an optional periodic preconditioner.

Generic over the objective: ``fun(x) -> (f, g)``. The CVT-specific wrappers
live in :mod:`pcvt.optimizers.cvt`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import LineSearchFailure, PreconditionFailure
from .line_search import LineSearchResult, WolfeCertificate, strong_wolfe

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]
LineSearch = Callable[..., LineSearchResult]


@dataclass
class LbfgsState:
    """Curvature memory of the two-loop recursion."""

    M: int
    T: int | None = None
    s: deque = field(default_factory=deque)
    y: deque = field(default_factory=deque)
    rho: deque = field(default_factory=deque)
    skipped: int = 0
    restarts: int = 0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("memory M must be >= 1")
        if self.T is not None and self.T < 1:
            raise ValueError("precondition period T must be >= 1 or None")

    def push(self, s: np.ndarray, y: np.ndarray) -> bool:
        """Store a pair, dropping the oldest beyond M; skip non-positive curvature."""
        sy = float(s @ y)
        if not sy > 0.0:
            self.skipped += 1
            return False
        if len(self.s) == self.M:
            self.s.popleft()
            self.y.popleft()
            self.rho.popleft()
        self.s.append(s)
        self.y.append(y)
        self.rho.append(1.0 / sy)
        return True

    def clear(self) -> None:
        self.s.clear()
        self.y.clear()
        self.rho.clear()
        self.restarts += 1

    def h0(self) -> float | None:
        if not self.s:
            return None
        y = self.y[-1]
        return float(self.s[-1] @ y) / float(y @ y)

    def direction(self, g: np.ndarray, k: int, precond: Callable | None, h0_default: float):
        """Two-loop recursion; returns (p, preconditioned?)."""
        q = g.copy()
        a = []
        for s, y, rho in zip(reversed(self.s), reversed(self.y), reversed(self.rho)):
            ai = rho * float(s @ q)
            q -= ai * y
            a.append(ai)
        used = False
        r = None
        if precond is not None and self.T is not None and k % self.T == 0:
            try:
                r = precond(q)
                used = True
            except PreconditionFailure:
                r = None
        if r is None:
            h0 = self.h0()
            r = (h0 if h0 is not None else h0_default) * q
        for (s, y, rho), ai in zip(zip(self.s, self.y, self.rho), reversed(a)):
            r += s * (ai - rho * float(y @ r))
        return -r, used


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    evaluations: int
    converged: bool
    history: list  # (f, gradient measure) per iterate, starting with x0
    certificates: list[WolfeCertificate]
    restarts: int
    skipped_pairs: int
    preconditioned_steps: int
    steepest_descent_fallbacks: int
    message: str = ""


def minimize_lbfgs(
    fun: Objective,
    x0: np.ndarray,
    M: int = 7,
    T: int | None = None,
    precond: Callable[[np.ndarray], np.ndarray] | None = None,
    gnorm: Callable[[np.ndarray], float] | None = None,
    tol: float = 1e-8,
    max_iter: int = 100000,
    h0_initial: float = 1.0,
    c1: float = 1e-4,
    c2: float = 0.9,
    line_search: LineSearch | None = None,
    topology_changed: Callable[[], bool] | None = None,
    f_noise: Callable[[float], float] | None = None,
    callback: Callable[[int, np.ndarray, float, np.ndarray], None] | None = None,
) -> LbfgsResult:
    """Minimize ``fun`` by L-BFGS(M), or P-L-BFGS(M, T) when ``T`` and ``precond`` are given.

    On iterations k with k mod T == 0 the middle of the two-loop recursion
    solves with ``precond`` instead of scaling by H0. ``topology_changed`` is
    polled after each accepted step; the memory is cleared when it reports a
    change and the new pair fails the curvature guard. A failed line search
    triggers one steepest-descent attempt, after which the run stops with the
    best iterate.
    """
    gnorm = gnorm or (lambda g: float(np.linalg.norm(g)))
    search = line_search or strong_wolfe
    state = LbfgsState(M, T)
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    evals = 1
    history = [(f, gnorm(g))]
    certs: list[WolfeCertificate] = []
    pre_steps = 0
    fallbacks = 0
    k = 0
    message = ""
    while history[-1][1] >= tol:
        if k >= max_iter:
            message = "iteration cap reached"
            break
        p, used = state.direction(g, k, precond, h0_initial)
        d0 = float(g @ p)
        if not d0 < 0.0:
            state.clear()
            p = -h0_initial * g
            d0 = float(g @ p)
            used = False
        pre_steps += used

        def phi(alpha, x=x, p=p):
            fa, ga = fun(x + alpha * p)
            return fa, ga, float(ga @ p)

        noise = f_noise(f) if f_noise else 0.0
        try:
            res = search(phi, f, d0, alpha0=1.0, c1=c1, c2=c2, f_noise=noise)
        except LineSearchFailure:
            fallbacks += 1
            state.clear()
            p = -h0_initial * g
            d0 = float(g @ p)

            def phi(alpha, x=x, p=p):
                fa, ga = fun(x + alpha * p)
                return fa, ga, float(ga @ p)

            try:
                res = search(phi, f, d0, alpha0=1.0, c1=c1, c2=c2, f_noise=noise)
            except LineSearchFailure as exc:
                # restore the objective's internal state to the best iterate
                fun(x)
                evals += 1
                message = f"line search failed: {exc}"
                break
        evals += res.evaluations
        x_new = x + res.alpha * p
        s = x_new - x
        y = res.g - g
        certs.append(res.certificate)
        changed = topology_changed() if topology_changed else False
        if not state.push(s, y) and changed:
            state.clear()
        x, f, g = x_new, res.f, res.g
        k += 1
        history.append((f, gnorm(g)))
        if callback is not None:
            callback(k, x, f, g)
    converged = history[-1][1] < tol
    return LbfgsResult(
        x=x, f=f, g=g, iterations=k, evaluations=evals, converged=converged, history=history,
        certificates=certs, restarts=state.restarts, skipped_pairs=state.skipped,
        preconditioned_steps=pre_steps, steepest_descent_fallbacks=fallbacks, message=message,
    )
