"""Move-away-from-closest-neighbor (MACN) dynamics and the hybrid landscape probe.

A MACN step displaces every generator straight away from its closest
neighbor, x_i <- x_i + d_i (x_i - x_j*) / |x_i - x_j*|, all generators using
the same input tessellation. MACN-c takes d_i = |x_i - c_i|; MACN-delta
perturbs a converged PCVT by a fixed length scale (or one of the variants).
The hybrid alternates K MACN-c steps, a descent to a PCVT and one MACN-delta
kick, Q times.
"""

from __future__ import annotations

import enum
import math
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .energy import f_hex
from .errors import DegenerateInput
from .geometry import GeneratorSet, PeriodicDelaunay, PeriodicTessellation, TorusDomain, build_tessellation
from .geometry.tessellation import coincident_pairs
from .metrics import EPSILON, regularity
from .optimizers import OptimizerReport, default_tol, lbfgs, lloyd, plbfgs

_GOLDEN = 0.6180339887498949


class DeltaRule(str, enum.Enum):
    FIXED = "fixed"
    INTRINSIC = "intrinsic"
    RANDOM_NEIGHBOR = "random-neighbor"
    RANDOM_ANGLE = "random-angle"


@dataclass(frozen=True)
class InnerOptimizer:
    """Descent method used to reach a PCVT inside each hybrid stage."""

    kind: str = "lloyd"
    M: int = 7
    T: int | None = None

    def __post_init__(self):
        if self.kind not in ("lloyd", "lbfgs", "plbfgs"):
            raise ValueError(f"unknown inner optimizer {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "InnerOptimizer":
        """'lloyd', 'lbfgs(7)', 'plbfgs(20,20)' or 'plbfgs(20,inf)'."""
        m = re.fullmatch(r"\s*(lloyd|lbfgs|plbfgs)\s*(?:\(([^)]*)\))?\s*", text.lower())
        if not m:
            raise ValueError(f"cannot parse optimizer {text!r}")
        kind, args = m.group(1), [a.strip() for a in (m.group(2) or "").split(",") if a.strip()]
        if kind == "lloyd":
            return cls("lloyd")
        if kind == "lbfgs":
            return cls("lbfgs", int(args[0]) if args else 7)
        M = int(args[0]) if args else 20
        T = 20 if len(args) < 2 else (None if args[1] in ("inf", "none") else int(args[1]))
        return cls("plbfgs", M, T)

    def __str__(self) -> str:
        if self.kind == "lloyd":
            return "lloyd"
        if self.kind == "lbfgs":
            return f"lbfgs({self.M})"
        return f"plbfgs({self.M},{'inf' if self.T is None else self.T})"

    def run(self, domain, gens, tol, engine=None, callback=None, max_iter=None) -> OptimizerReport:
        if self.kind == "lloyd":
            kw = {} if max_iter is None else {"max_iter": max_iter}
            return lloyd(domain, gens, tol=tol, engine=engine, callback=callback, **kw)
        kw = {} if max_iter is None else {"max_iter": max_iter}
        if self.kind == "lbfgs":
            return lbfgs(domain, gens, M=self.M, tol=tol, engine=engine, callback=callback, **kw)
        return plbfgs(domain, gens, M=self.M, T=self.T, tol=tol, engine=engine, callback=callback, **kw)


@dataclass(frozen=True)
class MacnConfig:
    K: int
    Q: int
    tol: float | None = None
    delta_rule: DeltaRule = DeltaRule.FIXED
    inner: InnerOptimizer = field(default_factory=InnerOptimizer)
    rng_seed: int = 0
    K_schedule: Sequence[int] | None = None  # per-stage override of K
    record_series: bool = True
    max_inner_iter: int | None = None

    def __post_init__(self):
        if self.K < 0 or self.Q < 1:
            raise ValueError("need K >= 0 and Q >= 1")
        object.__setattr__(self, "delta_rule", DeltaRule(self.delta_rule))
        if isinstance(self.inner, str):
            object.__setattr__(self, "inner", InnerOptimizer.parse(self.inner))
        if self.K_schedule is not None:
            sched = tuple(int(k) for k in self.K_schedule)
            if len(sched) != self.Q or min(sched) < 0:
                raise ValueError("K_schedule needs Q non-negative entries")
            object.__setattr__(self, "K_schedule", sched)

    def stage_K(self, q: int) -> int:
        return self.K if self.K_schedule is None else self.K_schedule[q]


def default_delta(domain: TorusDomain, n: int) -> float:
    """delta = sqrt(|Omega| / N) / 4."""
    return 0.25 * math.sqrt(domain.area / n)


def _tess_for(domain, gens, tess) -> PeriodicTessellation:
    return tess if tess is not None else build_tessellation(domain, gens)


def _away_directions(tess: PeriodicTessellation) -> np.ndarray:
    v = -np.asarray(tess.closest_vector)
    norm = np.hypot(v[:, 0], v[:, 1])
    if np.any(norm == 0.0):
        raise DegenerateInput("a generator coincides with its closest neighbor")
    return v / norm[:, None]


def nudge_collisions(domain: TorusDomain, pos: np.ndarray) -> tuple[np.ndarray, int]:
    """Separate coincident generators deterministically.

    The higher index of each coincident pair moves by 1e-9 sqrt(|Omega|/N)
    along the angle 2 pi frac(i * golden ratio).
    """
    pos = np.array(pos, dtype=float)
    step = 1e-9 * domain.spacing(len(pos))
    moved = 0
    for _ in range(8):
        pairs = coincident_pairs(domain, pos)
        if len(pairs) == 0:
            break
        idx = np.unique(pairs.max(axis=1))
        ang = 2.0 * math.pi * ((idx * _GOLDEN) % 1.0)
        pos[idx] += step * np.column_stack([np.cos(ang), np.sin(ang)])
        moved += len(idx)
    return domain.reduce(pos), moved


def _displace(tess: PeriodicTessellation, distances) -> np.ndarray:
    d = np.broadcast_to(np.asarray(distances, dtype=float), (tess.n,))
    if np.any(d < 0.0):
        raise ValueError("MACN distances must be non-negative")
    return tess.positions + d[:, None] * _away_directions(tess)


def macn_step(domain: TorusDomain, gens, tess: PeriodicTessellation | None = None, distances=0.0) -> GeneratorSet:
    """Jacobi MACN update with per-generator displacement lengths ``distances``."""
    tess = _tess_for(domain, gens, tess)
    pos, _ = nudge_collisions(domain, _displace(tess, distances))
    return GeneratorSet(pos)


def macn_c_distances(tess: PeriodicTessellation) -> np.ndarray:
    c = tess.centroid_offsets
    return np.hypot(c[:, 0], c[:, 1])


def macn_c_step(domain: TorusDomain, gens, tess: PeriodicTessellation | None = None) -> GeneratorSet:
    """MACN step with d_i = |x_i - c_i|."""
    tess = _tess_for(domain, gens, tess)
    return macn_step(domain, gens, tess, macn_c_distances(tess))


def delta_displacements(domain, tess: PeriodicTessellation, rule: DeltaRule | str = DeltaRule.FIXED, rng=None,
                        delta: float | None = None) -> np.ndarray:
    """The (N, 2) vectors a MACN-delta step adds to the generators."""
    rule = DeltaRule(rule)
    n = tess.n
    delta = default_delta(domain, n) if delta is None else delta
    if rule is DeltaRule.FIXED:
        return delta * _away_directions(tess)
    if rule is DeltaRule.INTRINSIC:
        return (tess.areas / tess.perimeters)[:, None] * _away_directions(tess)
    if rng is None:
        raise ValueError(f"{rule.value} needs a seeded random generator")
    if rule is DeltaRule.RANDOM_ANGLE:
        theta = rng.uniform(0.0, 2.0 * math.pi, n)
        return delta * np.column_stack([np.cos(theta), np.sin(theta)])
    # random neighbor: closest image of a uniformly drawn j in N_i, sorted by index
    ij, dvec = tess.edge_index, tess.edge_vector
    dist = np.hypot(dvec[:, 0], dvec[:, 1])
    nearest: list[dict[int, tuple[float, np.ndarray]]] = [dict() for _ in range(n)]
    for e, (i, j) in enumerate(ij.tolist()):
        if i == j:
            continue
        for a, b, v in ((i, j, dvec[e]), (j, i, -dvec[e])):
            cur = nearest[a].get(b)
            if cur is None or dist[e] < cur[0]:
                nearest[a][b] = (dist[e], v)
    out = np.empty((n, 2))
    for i in range(n):
        keys = sorted(nearest[i])
        if not keys:
            raise DegenerateInput(f"generator {i} has no neighbor")
        _, v = nearest[i][keys[int(rng.integers(len(keys)))]]
        out[i] = -delta * v / np.hypot(v[0], v[1])
    return out


def _delta_positions(domain, tess: PeriodicTessellation, rule: DeltaRule, rng, delta=None) -> np.ndarray:
    return tess.positions + delta_displacements(domain, tess, rule, rng, delta)


def macn_delta_step(domain: TorusDomain, gens, tess: PeriodicTessellation | None = None,
                    rule: DeltaRule | str = DeltaRule.FIXED, rng: np.random.Generator | None = None,
                    delta: float | None = None) -> GeneratorSet:
    """Perturb a PCVT by the chosen MACN-delta rule."""
    tess = _tess_for(domain, gens, tess)
    pos, _ = nudge_collisions(domain, _delta_positions(domain, tess, rule, rng, delta))
    return GeneratorSet(pos)


@dataclass
class StageResult:
    q: int
    pcvt: GeneratorSet
    E: float
    H: float
    R: float
    converged: bool
    macn_c_steps: int
    inner_iterations: int
    inner_message: str = ""
    seconds: float = 0.0


@dataclass
class HybridTrace:
    """Everything recorded along one hybrid (or annealing) run.

    ``series`` holds (E - 1, H, R_eps) for every recorded tessellation in
    order: the initial one, each MACN-c iterate, each inner-optimizer iterate
    and each MACN-delta result. ``boundaries[q]`` gives the series index where
    stage q's MACN-c block, inner block and MACN-delta step end.
    """

    stages: list[StageResult]
    series: np.ndarray
    boundaries: list[dict]
    wall_time: float
    collisions: int = 0
    accepted: list[bool] | None = None  # annealing only

    @property
    def pcvts(self) -> list[GeneratorSet]:
        return [s.pcvt for s in self.stages]

    @property
    def stage_energies(self) -> np.ndarray:
        return np.array([s.E - 1.0 for s in self.stages])

    @property
    def best(self) -> StageResult:
        return min(self.stages, key=lambda s: s.E)


class _Recorder:
    def __init__(self, domain, n, enabled, eps):
        self.scale = 1.0 / (n * f_hex(domain, n))
        self.enabled = enabled
        self.eps = eps
        self.rows: list[tuple[float, float, float]] = []

    def __call__(self, tess: PeriodicTessellation):
        if self.enabled:
            h, r = regularity(tess, self.eps)
            self.rows.append((float(tess.second_moments.sum()) * self.scale - 1.0, h, r))

    def __len__(self):
        return len(self.rows)


def _move(engine: PeriodicDelaunay, domain: TorusDomain, pos: np.ndarray) -> int:
    try:
        engine.update(pos)
        return 0
    except DegenerateInput:
        fixed, moved = nudge_collisions(domain, pos)
        engine.update(fixed)
        return moved


def _run_macn_c(engine, domain, K, rec) -> tuple[int, PeriodicTessellation]:
    collisions = 0
    tess = engine.tessellation()
    for _ in range(K):
        collisions += _move(engine, domain, _displace(tess, macn_c_distances(tess)))
        tess = engine.tessellation()
        rec(tess)
    return collisions, tess


def macn_c_run(domain: TorusDomain, gens, K: int, record: bool = True, eps: float = EPSILON,
               callback: Callable[[int, PeriodicTessellation], None] | None = None):
    """K MACN-c steps from ``gens``; returns (final GeneratorSet, series of (E-1, H, R))."""
    pos = np.array(gens.positions if isinstance(gens, GeneratorSet) else gens, dtype=float)
    engine = PeriodicDelaunay(domain, pos)
    rec = _Recorder(domain, engine.n, record, eps)
    tess = engine.tessellation()
    rec(tess)
    for k in range(K):
        _move(engine, domain, _displace(tess, macn_c_distances(tess)))
        tess = engine.tessellation()
        rec(tess)
        if callback is not None:
            callback(k + 1, tess)
    return GeneratorSet(tess.positions), np.array(rec.rows).reshape(-1, 3)


def hybrid(domain: TorusDomain, init, cfg: MacnConfig, eps: float = EPSILON,
           stop: Callable[[StageResult], bool] | None = None) -> HybridTrace:
    """Q stages of K MACN-c steps, descent to a PCVT and (except last) a MACN-delta kick.

    ``stop`` may end the run early after any stage (used by callers that only
    need to know whether some level was reached).
    """
    start = time.perf_counter()
    tol = default_tol(domain) if cfg.tol is None else cfg.tol
    rng = np.random.Generator(np.random.Philox(cfg.rng_seed))
    pos = np.array(init.positions if isinstance(init, GeneratorSet) else init, dtype=float)
    engine = PeriodicDelaunay(domain, pos)
    n = engine.n
    rec = _Recorder(domain, n, cfg.record_series, eps)
    rec(engine.tessellation())
    stages: list[StageResult] = []
    bounds: list[dict] = []
    collisions = 0
    for q in range(cfg.Q):
        t0 = time.perf_counter()
        K = cfg.stage_K(q)
        c, _ = _run_macn_c(engine, domain, K, rec)
        collisions += c
        macn_end = len(rec)
        report = cfg.inner.run(domain, engine.pos.copy(), tol, engine=engine,
                               callback=(lambda k, t: rec(t)) if cfg.record_series else None,
                               max_iter=cfg.max_inner_iter)
        tess = report.tessellation
        h, r = regularity(tess, eps)
        stage = StageResult(q, report.final, report.E, h, r, report.converged, K, report.iterations,
                            report.message, time.perf_counter() - t0)
        stages.append(stage)
        b = {"macn_c_end": macn_end, "inner_end": len(rec), "delta_end": None}
        bounds.append(b)
        if stop is not None and stop(stage):
            break
        if q < cfg.Q - 1:
            collisions += _move(engine, domain, _delta_positions(domain, tess, cfg.delta_rule, rng))
            rec(engine.tessellation())
            b["delta_end"] = len(rec)
            stage.seconds = time.perf_counter() - t0
    return HybridTrace(stages, np.array(rec.rows).reshape(-1, 3), bounds, time.perf_counter() - start, collisions)


@dataclass(frozen=True)
class AnnealingSchedule:
    """Metropolis schedule for the perturb-and-reminimize baseline.

    Temperature at stage s is T0 * decay**s; perturbations are uniform in a
    disk of radius h sqrt(|V_i|) around each generator.
    """

    stages: int = 24
    T0: float = 1e-4
    decay: float = 0.9
    h: float = 0.25
    inner: InnerOptimizer = field(default_factory=lambda: InnerOptimizer("lbfgs", 7))
    tol: float | None = None

    def __post_init__(self):
        if isinstance(self.inner, str):
            object.__setattr__(self, "inner", InnerOptimizer.parse(self.inner))
        if self.stages < 1:
            raise ValueError("need at least one stage")

    def temperature(self, s: int) -> float:
        return self.T0 * self.decay ** s


def metropolis_accept(dE: float, temperature: float, u: float) -> bool:
    """Accept a move with energy change dE at the given temperature (u uniform in [0, 1))."""
    if dE <= 0.0:
        return True
    if temperature <= 0.0:
        return False
    if math.isinf(temperature):
        return True
    return u < math.exp(-dE / temperature)


def annealing_baseline(domain: TorusDomain, init, schedule: AnnealingSchedule,
                       rng: np.random.Generator, eps: float = EPSILON) -> HybridTrace:
    """Perturb the current PCVT, re-minimize, accept by the Metropolis rule.

    The first stage minimizes ``init``; each later stage proposes a new PCVT.
    ``stages`` records every proposed PCVT; ``accepted`` the decisions.
    """
    start = time.perf_counter()
    tol = default_tol(domain) if schedule.tol is None else schedule.tol
    pos = np.array(init.positions if isinstance(init, GeneratorSet) else init, dtype=float)
    engine = PeriodicDelaunay(domain, pos)
    rec = _Recorder(domain, engine.n, True, eps)
    report = schedule.inner.run(domain, pos, tol, engine=engine)
    current = report
    stages, accepted, bounds = [], [True], []

    def stage_of(s, rep):
        h, r = regularity(rep.tessellation, eps)
        return StageResult(s, rep.final, rep.E, h, r, rep.converged, 0, rep.iterations, rep.message, rep.wall_time)

    stages.append(stage_of(0, report))
    rec(report.tessellation)
    bounds.append({"macn_c_end": 0, "inner_end": len(rec), "delta_end": None})
    collisions = 0
    for s in range(1, schedule.stages):
        t = current.tessellation
        radius = schedule.h * np.sqrt(t.areas)
        r = radius * np.sqrt(rng.random(t.n))
        theta = rng.uniform(0.0, 2.0 * math.pi, t.n)
        trial = t.positions + r[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
        trial, moved = nudge_collisions(domain, trial)
        collisions += moved
        proposal = schedule.inner.run(domain, trial, tol, engine=engine)
        ok = metropolis_accept(proposal.E - current.E, schedule.temperature(s), float(rng.random()))
        accepted.append(ok)
        stages.append(stage_of(s, proposal))
        rec(proposal.tessellation)
        bounds.append({"macn_c_end": len(rec) - 1, "inner_end": len(rec), "delta_end": None})
        if ok:
            current = proposal
    return HybridTrace(stages, np.array(rec.rows).reshape(-1, 3), bounds, time.perf_counter() - start,
                       collisions, accepted)
