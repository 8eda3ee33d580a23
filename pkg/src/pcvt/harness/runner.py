"""Seeded batches of independent runs."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from ..errors import PcvtError
from ..geometry import GeneratorSet, admissible_hex_pairs
from ..macn import InnerOptimizer, annealing_baseline, hybrid
from ..metrics import regularity
from .config import ExperimentConfig


@dataclass
class StageRow:
    stage: int
    e_minus_1: float
    H: float
    R: float
    iters: int
    converged: bool
    seconds: float = 0.0


@dataclass
class ResultRecord:
    """One run: per-stage measures and the final generator positions."""

    run: int
    seed: int
    method: str
    stages: list[StageRow] = field(default_factory=list)
    positions: np.ndarray | None = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error

    @property
    def best(self) -> StageRow:
        return min(self.stages, key=lambda s: s.e_minus_1)


def run_seed(master_seed: int, run_index: int) -> int:
    """64-bit seed of run ``run_index``, independent of scheduling and of other runs."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(run_index,))
    return int(ss.generate_state(1, np.uint64)[0])


def initial_positions(cfg: ExperimentConfig, seed: int) -> np.ndarray:
    """Uniform random generators for a run."""
    rng = np.random.Generator(np.random.Philox(seed))
    return cfg.torus.random_points(cfg.n, rng)


def execute(cfg: ExperimentConfig, run_index: int) -> ResultRecord:
    """Run ``run_index`` of the batch; failures are recorded, not raised."""
    seed = run_seed(cfg.master_seed, run_index)
    rec = ResultRecord(run_index, seed, cfg.method)
    dom = cfg.torus
    try:
        init = initial_positions(cfg, seed)
        kind = cfg.method_kind
        if kind in ("lloyd", "lbfgs", "plbfgs"):
            start = time.perf_counter()
            rep = InnerOptimizer.parse(cfg.method).run(dom, init, cfg.tol, max_iter=cfg.max_iter)
            h, r = regularity(rep.tessellation, cfg.epsilon)
            rec.stages.append(StageRow(0, rep.E - 1.0, h, r, rep.iterations, rep.converged,
                                       time.perf_counter() - start))
            rec.positions = np.array(rep.final.positions)
        else:
            if kind == "hybrid":
                # the MACN-delta kicks draw from a stream separate from the initial positions
                trace = hybrid(dom, init, cfg.macn([seed, 1]), eps=cfg.epsilon)
            else:
                trace = annealing_baseline(dom, init, cfg.schedule(),
                                           np.random.Generator(np.random.Philox([seed, 2])), eps=cfg.epsilon)
            for s in trace.stages:
                rec.stages.append(StageRow(s.q, s.E - 1.0, s.H, s.R, s.inner_iterations, s.converged, s.seconds))
            rec.positions = np.array(trace.stages[-1].pcvt.positions)
    except PcvtError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _execute_star(args):
    return execute(*args)


def iter_batch(cfg: ExperimentConfig, runs: Iterable[int] | None = None) -> Iterator[ResultRecord]:
    """Yield records in run order; a process pool is used when ``cfg.workers > 1``."""
    indices = list(range(cfg.runs) if runs is None else runs)
    if cfg.workers == 1 or len(indices) < 2:
        for i in indices:
            yield execute(cfg, i)
        return
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        yield from pool.map(_execute_star, [(cfg, i) for i in indices])


def run_batch(cfg: ExperimentConfig, sink: Callable[[ResultRecord], None] | None = None) -> list[ResultRecord]:
    """All runs of ``cfg``; ``sink`` sees each record as soon as it is available."""
    out = []
    for rec in iter_batch(cfg):
        out.append(rec)
        if sink is not None:
            sink(rec)
    return out


def sweep_k(cfg: ExperimentConfig, Ks: Sequence[int], sink=None) -> dict[int, list[ResultRecord]]:
    """The hybrid batch of ``cfg`` repeated for each K (same initial configurations)."""
    if cfg.method_kind != "hybrid":
        cfg = cfg.replace(method="hybrid")
    out = {}
    for K in Ks:
        sub = cfg.replace(K=int(K), K_schedule=None)
        out[int(K)] = run_batch(sub, None if sink is None else (lambda r, K=int(K): sink(K, r)))
    return out


def sweep_table(results: dict[int, list[ResultRecord]]) -> list[dict]:
    """Mean and min E - 1 per stage per K over the successful runs."""
    rows = []
    for K, recs in results.items():
        good = [r for r in recs if r.ok]
        if not good:
            continue
        n_stages = min(len(r.stages) for r in good)
        for q in range(n_stages):
            e = np.array([r.stages[q].e_minus_1 for r in good])
            rows.append({"K": K, "stage": q, "mean": float(e.mean()), "min": float(e.min()), "runs": len(e)})
    return rows


@dataclass(frozen=True)
class Admissibility:
    n: int
    admissible: bool
    pairs: tuple[tuple[int, int], ...]
    below: int | None  # largest admissible value < n
    above: int  # smallest admissible value > n


def admissible_hex_n(n: int) -> Admissibility:
    """Whether the hexagonal torus with N = n generators admits a perfect honeycomb."""
    if n < 1:
        raise ValueError("N must be >= 1")
    pairs = tuple(admissible_hex_pairs(n))
    below = next((m for m in range(n - 1, 0, -1) if admissible_hex_pairs(m)), None)
    above = next(m for m in range(n + 1, 4 * n + 2) if admissible_hex_pairs(m))
    return Admissibility(n, bool(pairs), pairs, below, above)
