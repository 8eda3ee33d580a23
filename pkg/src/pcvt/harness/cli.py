"""Command line interface: ``pcvt run|batch|sweep-k|stats|render|check-n``.

Settings come from the defaults, then ``--config FILE`` (JSON), then flags.
Results go to ``--output``, else $PCVT_OUTPUT_DIR, else ./pcvt-out. Errors are
printed to stderr as one JSON object and mapped to a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

from ..energy import energy
from ..errors import PcvtError
from ..geometry import TorusDomain, build_tessellation
from ..metrics import regularity_report, summarize
from .config import ConfigError, ExperimentConfig, from_mapping, load_config
from .io import CsvWriter, final_sample, read_csv, read_json, stage_samples, write_json
from .render import render_svg
from .runner import admissible_hex_n, run_batch, sweep_k, sweep_table

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4
EXIT_IO = 5
EXIT_RUN_FAILED = 6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="JSON file of config keys")
    g.add_argument("--domain", choices=["square", "hexagonal"])
    g.add_argument("--area", type=float)
    g.add_argument("-n", "--n", type=int, help="number of generators")
    g.add_argument("--method", help="lloyd | lbfgs(M) | plbfgs(M,T) | hybrid | anneal")
    g.add_argument("--runs", type=int)
    g.add_argument("--seed", dest="master_seed", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", type=int)
    g.add_argument("-K", "--K", type=int, help="MACN-c steps per hybrid stage")
    g.add_argument("-Q", "--Q", type=int, help="hybrid stages")
    g.add_argument("--delta-rule", choices=["fixed", "intrinsic", "random-neighbor", "random-angle"])
    g.add_argument("--inner", help="descent method inside hybrid/anneal stages")
    g.add_argument("--stages", type=int, help="annealing stages")
    g.add_argument("--T0", type=float)
    g.add_argument("--decay", type=float)
    g.add_argument("--h", type=float, help="annealing perturbation scale")
    g.add_argument("--epsilon", type=float)
    g.add_argument("--output", dest="output_dir")
    g.add_argument("--tag", help="basename of the result files")
    g.add_argument("--workers", type=int)
    g.add_argument("--render", action="store_true", default=None, help="write an SVG of each run")
    g.add_argument("--no-timing", dest="timing", action="store_false", default=None,
                   help="leave wall-time fields empty")
    g.add_argument("--check-ground-state", action="store_true", default=None)


_CONFIG_KEYS = ("domain", "area", "n", "method", "runs", "master_seed", "tol", "max_iter", "K", "Q",
                "delta_rule", "inner", "stages", "T0", "decay", "h", "epsilon", "output_dir", "tag",
                "workers", "render", "timing", "check_ground_state")


def config_from_args(args) -> ExperimentConfig:
    base = load_config(args.config) if args.config else None
    return from_mapping({k: getattr(args, k) for k in _CONFIG_KEYS}, base)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pcvt", description="Periodic centroidal Voronoi tessellations on flat torii.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="a single run")
    _config_flags(run)
    batch = sub.add_parser("batch", help="a seeded batch of runs")
    _config_flags(batch)
    sweep = sub.add_parser("sweep-k", help="hybrid batches over several K")
    _config_flags(sweep)
    sweep.add_argument("--Ks", default="2000,4000,6000,8000", help="comma separated K values")
    stats = sub.add_parser("stats", help="summary statistics of result CSVs")
    stats.add_argument("hybrid", help="CSV of the hybrid batch")
    stats.add_argument("--baseline", action="append", required=True, metavar="NAME=CSV")
    stats.add_argument("--epsilon", type=float, default=0.005)
    render = sub.add_parser("render", help="SVG of a stored run")
    render.add_argument("results", help="JSON result file")
    render.add_argument("--run", type=int, default=0)
    render.add_argument("--out", required=True)
    render.add_argument("--e-range", type=float, nargs=2, metavar=("LO", "HI"))
    render.add_argument("--width", type=int, default=600)
    check = sub.add_parser("check-n", help="hexagonal-torus admissibility of N")
    check.add_argument("N", type=int)
    return p


def _finite(x):
    return None if isinstance(x, float) and not math.isfinite(x) else x


def _emit(obj) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True))


def _render_records(cfg: ExperimentConfig, records, out: Path) -> list[str]:
    paths = []
    for rec in records:
        if rec.positions is None:
            continue
        tess = build_tessellation(cfg.torus, rec.positions)
        p = render_svg(tess, energy(cfg.torus, tess=tess), regularity_report(tess, cfg.epsilon),
                       out / f"{cfg.tag}_run{rec.run:04d}.svg")
        paths.append(str(p))
    return paths


def _batch(cfg: ExperimentConfig) -> dict:
    out = cfg.output_path()
    csv_path = out / f"{cfg.tag}.csv"
    with CsvWriter(csv_path, cfg.timing) as w:
        records = run_batch(cfg, w.write)
    json_path = write_json(records, out / f"{cfg.tag}.json", cfg.to_dict(), cfg.timing)
    summary = {"csv": str(csv_path), "json": str(json_path), "runs": len(records),
               "failed": [r.run for r in records if not r.ok]}
    good = [r for r in records if r.ok and r.stages]
    if good:
        best = min(good, key=lambda r: r.best.e_minus_1)
        summary["best"] = {"run": best.run, "E_minus_1": best.best.e_minus_1, "H": best.best.H, "R_eps": best.best.R}
    if cfg.render:
        summary["svg"] = _render_records(cfg, records, out)
    return summary


def cmd_run(args) -> int:
    cfg = config_from_args(args).replace(runs=1)
    summary = _batch(cfg)
    _emit(summary)
    return EXIT_RUN_FAILED if summary["failed"] else EXIT_OK


def cmd_batch(args) -> int:
    summary = _batch(config_from_args(args))
    _emit(summary)
    return EXIT_RUN_FAILED if summary["failed"] and len(summary["failed"]) == summary["runs"] else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    try:
        Ks = [int(k) for k in args.Ks.split(",") if k.strip()]
    except ValueError:
        raise ConfigError(f"bad --Ks {args.Ks!r}") from None
    out = cfg.output_path()
    writers = {K: CsvWriter(out / f"{cfg.tag}_K{K}.csv", cfg.timing) for K in Ks}
    try:
        results = sweep_k(cfg, Ks, lambda K, r: writers[K].write(r))
    finally:
        for w in writers.values():
            w.close()
    for K, recs in results.items():
        write_json(recs, out / f"{cfg.tag}_K{K}.json", cfg.replace(K=K, method="hybrid").to_dict(), cfg.timing)
    _emit({"table": sweep_table(results), "output": str(out)})
    return EXIT_OK


def _stats_dict(s) -> dict:
    return {"mean": _finite(s.mean), "std": _finite(s.std), "min": s.min, "max": s.max}


def cmd_stats(args) -> int:
    stages = stage_samples(read_csv(args.hybrid))
    baselines = {}
    for item in args.baseline:
        name, sep, path = item.partition("=")
        if not sep:
            raise ConfigError(f"--baseline expects NAME=CSV, got {item!r}")
        baselines[name] = final_sample(read_csv(path))
    s = summarize(stages, baselines, args.epsilon)
    _emit({
        "stages": [{k: _stats_dict(v) for k, v in st.items()} for st in s.stages],
        "baselines": {n: {k: _stats_dict(v) for k, v in b.items()} for n, b in s.baselines.items()},
        "E_min_minus_1": s.E_min_minus_1, "E_ref_minus_1": s.E_ref_minus_1,
        "R_ref": s.R_ref, "H_ref": s.H_ref, "f_star": s.f_star, "tau": s.tau,
        "rho": {k: _finite(v) for k, v in s.rho.items()},
    })
    return EXIT_OK


def cmd_render(args) -> int:
    records, config = read_json(args.results)
    rec = next((r for r in records if r.run == args.run), None)
    if rec is None or rec.positions is None:
        raise ConfigError(f"run {args.run} has no stored positions in {args.results}")
    cfg = ExperimentConfig() if config is None else from_mapping(config)
    dom = TorusDomain.from_kind(cfg.domain, cfg.area)
    tess = build_tessellation(dom, rec.positions)
    p = render_svg(tess, energy(dom, tess=tess), regularity_report(tess, cfg.epsilon), args.out,
                   e_range=args.e_range, width=args.width)
    _emit({"svg": str(p)})
    return EXIT_OK


def cmd_check(args) -> int:
    a = admissible_hex_n(args.N)
    _emit({"N": a.n, "admissible": a.admissible, "pairs": [list(p) for p in a.pairs],
           "below": a.below, "above": a.above})
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "batch": cmd_batch, "sweep-k": cmd_sweep, "stats": cmd_stats,
             "render": cmd_render, "check-n": cmd_check}


def _fail(code: int, exc: BaseException) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        return _fail(EXIT_USAGE, exc)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return _COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        return _fail(EXIT_CONFIG, exc)
    except PcvtError as exc:
        return _fail(EXIT_NUMERIC, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
