"""End-to-end acceptance checks; each test prints one PASS/FAIL line.

The long N=973 reproduction only runs when PCVT_LONG_TESTS=1.
"""

import math
import os

import numpy as np
import pytest

from pcvt.energy import energy, f_hex, gradient, graph_laplacian, hessian
from pcvt.geometry import TorusDomain, build_tessellation, honeycomb
from pcvt.harness import ExperimentConfig, run_batch, run_seed
from pcvt.harness.cli import main
from pcvt.harness.runner import initial_positions
from pcvt.macn import DeltaRule, MacnConfig, annealing_baseline, AnnealingSchedule, default_delta, \
    delta_displacements, hybrid, macn_c_run
from pcvt.metrics import regularity, summarize
from pcvt.optimizers import lbfgs, lloyd, plbfgs

from conftest import random_gens

LONG = os.environ.get("PCVT_LONG_TESTS") == "1"


def verdict(capsys, label, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    assert ok, detail


def best_rows(records):
    return [s for r in records if r.ok for s in r.stages]


@pytest.fixture(scope="module")
def lbfgs_square_1000():
    return run_batch(ExperimentConfig(n=1000, runs=500, method="lbfgs(7)", master_seed=0))


def test_honeycomb_ground_state_recovery(capsys):
    cfg = ExperimentConfig(domain="hexagonal", n=49, method="hybrid", K=1000, Q=10, runs=20, master_seed=0)
    rows = best_rows(run_batch(cfg))
    hits = [s for s in rows if s.e_minus_1 < 1e-9 and s.H == 1.0 and s.R == 1.0]
    best = min(s.e_minus_1 for s in rows)
    verdict(capsys, "honeycomb recovery N=49", len(hits) > 0,
            f"{len(hits)} ground-state stages over 20 runs, best E-1={best:.3g}")


@pytest.mark.skipif(not LONG, reason="set PCVT_LONG_TESTS=1 for the N=973 run (tens of minutes)")
def test_large_hexagonal_ground_state(capsys):
    cfg = ExperimentConfig(domain="hexagonal", n=973, method="hybrid", K=6000, Q=10, runs=25, master_seed=0)
    best = min(s.e_minus_1 for s in best_rows(run_batch(cfg)))
    verdict(capsys, "honeycomb recovery N=973", best < 1e-10, f"min E-1={best:.3g} over 25 runs (< 1e-10)")


def test_hybrid_beats_lbfgs_at_n1000(capsys, lbfgs_square_1000):
    cfg = ExperimentConfig(n=1000, method="hybrid", K=6000, Q=10, runs=10, master_seed=0)
    hyb = min(s.e_minus_1 for s in best_rows(run_batch(cfg)))
    base = min(r.stages[-1].e_minus_1 for r in lbfgs_square_1000[:200] if r.ok)
    verdict(capsys, "hybrid vs L-BFGS(7) N=1000", hyb < 0.8 * base,
            f"hybrid min E-1={hyb:.4g}, L-BFGS min E-1={base:.4g}, ratio={hyb / base:.3f} (< 0.8)")


def test_baseline_energy_bands(capsys, lbfgs_square_1000):
    # Lloyd stops at 1e-8: its final energies agree with the 1e-12 stop to 8 digits
    ll = run_batch(ExperimentConfig(n=1000, runs=500, method="lloyd", tol=1e-8, master_seed=0))
    m_ll = float(np.mean([r.stages[-1].e_minus_1 for r in ll if r.ok]))
    m_lb = float(np.mean([r.stages[-1].e_minus_1 for r in lbfgs_square_1000 if r.ok]))
    ok = 0.0075 <= m_ll <= 0.0095 and 0.0070 <= m_lb <= 0.0088
    verdict(capsys, "baseline energy bands N=1000", ok,
            f"Lloyd <E-1>={m_ll:.5f} in [0.0075,0.0095], L-BFGS(7) <E-1>={m_lb:.5f} in [0.0070,0.0088]")


def test_macn_c_plateau(capsys):
    # predeclared draw: run 0 of master seed 0, as the batch runner would produce it
    cfg = ExperimentConfig(n=1500, master_seed=0)
    init = initial_positions(cfg, run_seed(0, 0))
    _, series = macn_c_run(cfg.torus, init, 8000)
    e, h, r = series[-1]
    ok = 0.013 <= e <= 0.020 and 0.86 <= h <= 0.93 and 0.55 <= r <= 0.70
    verdict(capsys, "MACN-c plateau N=1500 k=8000", ok,
            f"E-1={e:.4f} in [0.013,0.020], H={h:.2%} in [86%,93%], R={r:.2%} in [55%,70%]")


def test_random_init_hexagon_fraction(capsys):
    dom = TorusDomain.square()
    hr = np.array([regularity(build_tessellation(dom, random_gens(dom, 1500, s))) for s in range(50)])
    h, r = hr.mean(axis=0)
    verdict(capsys, "random init regularity N=1500", 0.25 <= h <= 0.35 and r < 0.01,
            f"mean H={h:.2%} in [25%,35%], mean R={r:.2%} (< 1%)")


def test_gradient_and_hessian_against_differences(capsys):
    worst = {"grad": 0.0, "hess": 0.0, "null": 0.0, "sum": 0.0}
    for kind in ("square", "hexagonal"):
        dom = TorusDomain.from_kind(kind)
        for n in (4, 8, 16):
            x = random_gens(dom, n, 1000 + n).ravel()
            g = gradient(dom, x.reshape(-1, 2))
            fd = np.zeros_like(x)
            hfd = np.zeros((len(x), len(x)))
            for k in range(len(x)):
                e = np.zeros_like(x)
                e[k] = 1e-6
                fd[k] = (energy(dom, (x + e).reshape(-1, 2)).F - energy(dom, (x - e).reshape(-1, 2)).F) / 2e-6
                e[k] = 1e-5
                hfd[:, k] = (gradient(dom, (x + e).reshape(-1, 2)) - gradient(dom, (x - e).reshape(-1, 2))) / 2e-5
            H = hessian(dom, x.reshape(-1, 2)).toarray()
            worst["grad"] = max(worst["grad"], np.linalg.norm(g - fd) / np.linalg.norm(g))
            worst["hess"] = max(worst["hess"], np.linalg.norm(H - hfd) / np.linalg.norm(H))
            for axis in range(2):
                v = np.zeros(2 * n)
                v[axis::2] = 1.0
                worst["null"] = max(worst["null"], np.abs(H @ v).max())
            scale = n * f_hex(dom, n) / dom.spacing(n)
            worst["sum"] = max(worst["sum"], np.abs(g.reshape(-1, 2).sum(axis=0)).max() / scale)
    ok = worst["grad"] < 1e-6 and worst["hess"] < 1e-5 and worst["null"] < 1e-8 and worst["sum"] < 1e-12
    verdict(capsys, "gradient/Hessian", ok,
            f"grad rel={worst['grad']:.2g}, Hessian rel={worst['hess']:.2g}, "
            f"null={worst['null']:.2g}, sum={worst['sum']:.2g}")


def test_conservation_and_normalization(capsys):
    sq, hx = TorusDomain.square(), TorusDomain.hexagonal()
    area_err = max(abs(build_tessellation(d, random_gens(d, n, n)).areas.sum() / d.area - 1)
                   for d in (sq, hx) for n in (1, 7, 500))
    e1 = abs(energy(sq, [[0.3, 0.7]]).E - 3 * math.sqrt(3) / 5)
    ehc = abs(energy(hx, honeycomb(hx, 5, 3)).E - 1)
    g = graph_laplacian(sq, random_gens(sq, 50, 3)).toarray()
    trace_err = abs(np.trace(g) / (2 * sq.area) - 1)
    sym = np.array_equal(g, g.T)
    row = np.abs(g.sum(axis=1)).max()
    floor = np.linalg.eigvalsh(g).min()
    ok = area_err < 1e-12 and e1 <= 1e-12 and ehc <= 1e-12 and trace_err < 1e-10 and sym and row < 1e-12 \
        and floor >= -1e-10
    verdict(capsys, "conservation/normalization", ok,
            f"area={area_err:.2g}, E(1)={e1:.2g}, E(honeycomb)={ehc:.2g}, trace={trace_err:.2g}, "
            f"symmetric={sym}, G1={row:.2g}, min eig={floor:.2g}")


def test_protocol_identities(capsys):
    hyb = [[(0.004, 0.9, 0.6), (0.0021, 0.93, 0.7)]]
    s = summarize(hyb, {"a": [(0.0039, 0.9, 0.5)], "b": [(0.005, 0.8, 0.4)]})
    tau_ok = s.tau == 0.0021 / 0.0039

    sq = TorusDomain.square()
    tr = hybrid(sq, random_gens(sq, 200, 1), MacnConfig(K=100, Q=4, rng_seed=1))
    an = annealing_baseline(sq, random_gens(sq, 200, 2), AnnealingSchedule(stages=4), np.random.default_rng(3))
    rh_ok = bool(np.all(tr.series[:, 2] <= tr.series[:, 1])) and all(st.R <= st.H for st in an.stages)

    rep = lloyd(sq, random_gens(sq, 1000, 4), tol=1e-8)
    v = delta_displacements(sq, rep.tessellation, DeltaRule.FIXED)
    norm_err = float(np.max(np.abs(np.hypot(*v.T) / default_delta(sq, 1000) - 1)))

    x = random_gens(sq, 300, 5)
    a, b = lbfgs(sq, x, M=7), plbfgs(sq, x, M=7, T=None)
    same = np.array_equal(a.trace, b.trace) and np.array_equal(a.final.positions, b.final.positions)
    ok = tau_ok and rh_ok and norm_err <= 1e-15 and same
    verdict(capsys, "protocol identities", ok,
            f"tau exact={tau_ok}, R<=H on traces={rh_ok}, delta norm rel={norm_err:.2g}, "
            f"plbfgs(T=inf)==lbfgs {same}")


def test_batch_outputs_are_byte_identical(capsys, tmp_path):
    methods = ["lloyd", "lbfgs(7)", "plbfgs(20,20)", "hybrid", "anneal"]
    diffs = []
    for m in methods:
        args = ["batch", "-n", "60", "--runs", "3", "--method", m, "-K", "20", "-Q", "3", "--stages", "3",
                "--delta-rule", "random-angle", "--seed", "5", "--output", str(tmp_path), "--tag", "b"]
        blobs = []
        for _ in range(2):
            assert main(args + ["--no-timing"]) == 0
            blobs.append(((tmp_path / "b.csv").read_bytes(), (tmp_path / "b.json").read_bytes()))
        if blobs[0] != blobs[1]:
            diffs.append(m)
    capsys.readouterr()
    verdict(capsys, "determinism", not diffs, f"byte-identical CSV/JSON for {len(methods) - len(diffs)}/"
            f"{len(methods)} methods" + (f", differing: {diffs}" if diffs else ""))
