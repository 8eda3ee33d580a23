"""Strong Wolfe line search (bracketing + cubic interpolation)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import LineSearchFailure

# phi(alpha) -> (f(x + alpha p), grad f(x + alpha p), directional derivative)
Phi = Callable[[float], tuple[float, np.ndarray, float]]


@dataclass(frozen=True)
class WolfeCertificate:
    """The two strong Wolfe inequalities of an accepted step, as evaluated.

    ``approximate`` marks steps whose energy change was below the rounding
    level ``f_noise``; for those the decrease test is f <= f0 + f_noise.
    """

    alpha: float
    f0: float
    d0: float
    f: float
    d: float
    c1: float
    c2: float
    f_noise: float
    approximate: bool

    @property
    def sufficient_decrease(self) -> bool:
        bound = self.f0 + (self.f_noise if self.approximate else self.c1 * self.alpha * self.d0)
        return self.f <= bound

    @property
    def curvature(self) -> bool:
        return abs(self.d) <= -self.c2 * self.d0

    @property
    def holds(self) -> bool:
        return self.sufficient_decrease and self.curvature


@dataclass(frozen=True)
class LineSearchResult:
    alpha: float
    f: float
    g: np.ndarray
    evaluations: int
    certificate: WolfeCertificate


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic interpolating (f, f') at a and b, or None."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if not disc >= 0.0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    den = db - da + 2.0 * d2
    if den == 0.0:
        return None
    t = b - (b - a) * (db + d2 - d1) / den
    return t if math.isfinite(t) else None


def strong_wolfe(
    phi: Phi,
    f0: float,
    d0: float,
    alpha0: float = 1.0,
    c1: float = 1e-4,
    c2: float = 0.9,
    max_evals: int = 40,
    alpha_max: float = 1e10,
    f_noise: float = 0.0,
) -> LineSearchResult:
    """Find alpha satisfying the strong Wolfe conditions along a descent direction.

    ``f_noise`` is the rounding level of f; once f(alpha) is within that of f0
    the sufficient decrease test cannot be resolved and the step is accepted
    on the curvature condition alone (flagged in the certificate).
    """
    if not d0 < 0.0:
        raise LineSearchFailure("not a descent direction")
    evals = 0

    def accept(alpha, f, g, d):
        exact = f <= f0 + c1 * alpha * d0
        cert = WolfeCertificate(alpha, f0, d0, f, d, c1, c2, f_noise, not exact)
        return LineSearchResult(alpha, f, g, evals, cert)

    def decrease_ok(alpha, f):
        return f <= f0 + c1 * alpha * d0 or f <= f0 + f_noise

    def zoom(lo, hi):
        nonlocal evals
        a_lo, f_lo, d_lo = lo
        a_hi, f_hi, d_hi = hi
        while evals < max_evals:
            width = a_hi - a_lo
            t = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            lo_b, hi_b = sorted((a_lo + 0.1 * width, a_hi - 0.1 * width))
            if t is None or not lo_b <= t <= hi_b:
                t = 0.5 * (a_lo + a_hi)
            if t == a_lo or t == a_hi:
                break
            f, g, d = phi(t)
            evals += 1
            if not decrease_ok(t, f) or f >= f_lo:
                a_hi, f_hi, d_hi = t, f, d
            else:
                if abs(d) <= -c2 * d0:
                    return accept(t, f, g, d)
                if d * (a_hi - a_lo) >= 0.0:
                    a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
                a_lo, f_lo, d_lo = t, f, d
        raise LineSearchFailure(f"zoom did not converge after {evals} evaluations")

    prev = (0.0, f0, d0)
    alpha = alpha0
    first = True
    while evals < max_evals:
        f, g, d = phi(alpha)
        evals += 1
        if not math.isfinite(f):
            # step left the region where the objective is defined; back off
            alpha = 0.5 * (prev[0] + alpha)
            continue
        if not decrease_ok(alpha, f) or (not first and f >= prev[1]):
            return zoom(prev, (alpha, f, d))
        if abs(d) <= -c2 * d0:
            return accept(alpha, f, g, d)
        if d >= 0.0:
            return zoom((alpha, f, d), prev)
        prev = (alpha, f, d)
        first = False
        alpha = min(2.0 * alpha, alpha_max)
    raise LineSearchFailure(f"no acceptable step after {evals} evaluations")
