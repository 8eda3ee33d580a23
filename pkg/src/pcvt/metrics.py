"""Regularity measures and batch statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptySample, InsufficientData

EPSILON = 0.005
R_HEX = 8.0 * math.sqrt(3.0)


@dataclass(frozen=True)
class RegularityReport:
    H: float
    R_eps: float
    epsilon: float
    hexagonal: np.ndarray
    regular: np.ndarray
    ratios: np.ndarray  # perimeter^2 / area per cell


def regularity_report(tess, epsilon: float = EPSILON) -> RegularityReport:
    """H = share of six-sided cells; R_eps = share of six-sided cells with |1 - r/r_hex| <= eps."""
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    ratios = tess.perimeters ** 2 / tess.areas
    hexagonal = tess.degree == 6
    regular = hexagonal & (np.abs(1.0 - ratios / R_HEX) <= epsilon)
    n = len(ratios)
    return RegularityReport(float(hexagonal.sum()) / n, float(regular.sum()) / n, epsilon, hexagonal, regular, ratios)


def regularity(tess, epsilon: float = EPSILON) -> tuple[float, float]:
    """(H, R_eps) of a tessellation."""
    rep = regularity_report(tess, epsilon)
    return rep.H, rep.R_eps


class Ecdf:
    """Right-continuous empirical CDF: f(x) = #{s <= x} / n."""

    def __init__(self, samples):
        s = np.sort(np.asarray(samples, dtype=float).ravel())
        if s.size == 0:
            raise EmptySample("an ECDF needs at least one sample")
        if np.isnan(s).any():
            raise ValueError("samples contain NaN")
        self.samples = s
        s.setflags(write=False)

    def __len__(self) -> int:
        return self.samples.size

    def __call__(self, x):
        out = np.searchsorted(self.samples, np.asarray(x, dtype=float), side="right") / self.samples.size
        return float(out) if np.ndim(out) == 0 else out

    evaluate = __call__


def ecdf(samples) -> Ecdf:
    return Ecdf(samples)


def correlation_ratio(e_minus_1, h, r) -> float:
    """sigma_R cov(E-1, H) / (sigma_H cov(E-1, R)) with unbiased (n-1) estimators."""
    e = np.asarray(e_minus_1, dtype=float)
    h = np.asarray(h, dtype=float)
    r = np.asarray(r, dtype=float)
    if e.size < 2:
        raise InsufficientData("need at least two samples for a covariance")
    cov_eh = float(np.cov(e, h, ddof=1)[0, 1])
    cov_er = float(np.cov(e, r, ddof=1)[0, 1])
    den = float(np.std(h, ddof=1)) * cov_er
    if den == 0.0:
        return math.nan
    return float(np.std(r, ddof=1)) * cov_eh / den


@dataclass(frozen=True)
class MeasureStats:
    mean: float
    std: float
    min: float
    max: float

    @classmethod
    def of(cls, values) -> "MeasureStats":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            raise InsufficientData("empty sample")
        std = float(np.std(v, ddof=1)) if v.size > 1 else math.nan
        return cls(float(v.mean()), std, float(v.min()), float(v.max()))


@dataclass(frozen=True)
class Sample:
    """(E - 1, H, R_eps) of a set of PCVTs."""

    e: np.ndarray
    h: np.ndarray
    r: np.ndarray

    @classmethod
    def of(cls, rows) -> "Sample":
        a = np.asarray(rows, dtype=float).reshape(-1, 3)
        if a.shape[0] == 0:
            raise InsufficientData("empty batch")
        return cls(a[:, 0].copy(), a[:, 1].copy(), a[:, 2].copy())

    def stats(self) -> dict[str, MeasureStats]:
        return {"E-1": MeasureStats.of(self.e), "H": MeasureStats.of(self.h), "R": MeasureStats.of(self.r)}

    def correlation_ratio(self) -> float:
        return correlation_ratio(self.e, self.h, self.r) if self.e.size > 1 else math.nan


@dataclass(frozen=True)
class StatsSummary:
    stages: list[dict[str, MeasureStats]]  # hybrid, one entry per stage q
    baselines: dict[str, dict[str, MeasureStats]]
    E_min_minus_1: float
    E_ref_minus_1: float
    R_ref: float
    H_ref: float
    f_star: list[dict[str, float]]  # per stage: f*_{E-1}, 1-f*_R, 1-f*_H
    tau: float
    rho: dict[str, float]


def tau_ratio(e_min_minus_1: float, e_ref_minus_1: float) -> float:
    return e_min_minus_1 / e_ref_minus_1


def summarize(hybrid_stages: Sequence, baselines: Mapping[str, object], epsilon: float = EPSILON) -> StatsSummary:
    """Table statistics of a hybrid batch against baseline batches.

    ``hybrid_stages[q]`` holds the (E-1, H, R) rows of all runs at stage q;
    ``baselines[name]`` the rows of each baseline. E_ref is the lowest baseline
    energy; R_ref and H_ref the best (largest) baseline R_eps and H. f*_{E-1}
    is the hybrid ECDF at E_ref - 1; for R_eps and H the tables report
    1 - f* (the share of hybrid runs strictly above the reference).
    ``epsilon`` only labels the data: R must already be computed with it.
    """
    if not hybrid_stages:
        raise InsufficientData("no hybrid stages")
    if not baselines:
        raise InsufficientData("no baseline batches")
    stages = [s if isinstance(s, Sample) else Sample.of(s) for s in hybrid_stages]
    base = {k: (v if isinstance(v, Sample) else Sample.of(v)) for k, v in baselines.items()}
    e_ref = min(float(b.e.min()) for b in base.values())
    r_ref = max(float(b.r.max()) for b in base.values())
    h_ref = max(float(b.h.max()) for b in base.values())
    e_min = min(float(s.e.min()) for s in stages)
    f_star = []
    for s in stages:
        f_star.append({
            "E-1": Ecdf(s.e)(e_ref),
            "R": 1.0 - Ecdf(s.r)(r_ref),
            "H": 1.0 - Ecdf(s.h)(h_ref),
        })
    rho = {name: b.correlation_ratio() for name, b in base.items()}
    rho["hybrid"] = stages[-1].correlation_ratio()
    return StatsSummary(
        stages=[s.stats() for s in stages],
        baselines={k: b.stats() for k, b in base.items()},
        E_min_minus_1=e_min,
        E_ref_minus_1=e_ref,
        R_ref=r_ref,
        H_ref=h_ref,
        f_star=f_star,
        tau=tau_ratio(e_min, e_ref),
        rho=rho,
    )


def bootstrap_nonincreasing(stage_means_samples: Sequence, n_boot: int = 2000, confidence: float = 0.95,
                            rng: np.random.Generator | None = None) -> bool:
    """Whether stage means are non-increasing at the given bootstrap confidence.

    ``stage_means_samples[q]`` are per-run values at stage q (same runs in
    every stage). For each consecutive pair the one-sided bootstrap interval
    of mean(q+1) - mean(q) must not lie entirely above zero.
    """
    rng = rng or np.random.default_rng(0)
    data = np.asarray(stage_means_samples, dtype=float)
    if data.ndim != 2 or data.shape[1] < 2:
        raise InsufficientData("need per-run values for every stage")
    runs = data.shape[1]
    idx = rng.integers(runs, size=(n_boot, runs))
    for q in range(data.shape[0] - 1):
        diff = data[q + 1] - data[q]
        boots = diff[idx].mean(axis=1)
        if np.quantile(boots, 1.0 - confidence) > 0.0:
            return False
    return True
