"""CSV and JSON result files.

Floats are written with ``repr`` so every value round-trips exactly. Wall
times only appear in the ``seconds`` column / key; with ``timing=False`` they
are written empty so that files are byte-identical across executions.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..metrics import Sample
from .runner import ResultRecord, StageRow

CSV_COLUMNS = ("run", "seed", "method", "stage", "E_minus_1", "H", "R_eps", "iters", "converged", "seconds", "error")
JSON_FORMAT = "pcvt-results/1"


def _fmt(x: float) -> str:
    return repr(float(x))


def csv_rows(rec: ResultRecord, timing: bool = True) -> list[list[str]]:
    if not rec.stages:
        return [[str(rec.run), str(rec.seed), rec.method, "", "", "", "", "", "", "", rec.error]]
    return [
        [str(rec.run), str(rec.seed), rec.method, str(s.stage), _fmt(s.e_minus_1), _fmt(s.H), _fmt(s.R),
         str(s.iters), str(int(s.converged)), _fmt(s.seconds) if timing else "", rec.error]
        for s in rec.stages
    ]


class CsvWriter:
    """Appends records to a CSV file as they arrive."""

    def __init__(self, path: str | os.PathLike, timing: bool = True):
        self.path = Path(path)
        self.timing = timing
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(CSV_COLUMNS)
        self._fh.flush()

    def write(self, rec: ResultRecord) -> None:
        self._w.writerows(csv_rows(rec, self.timing))
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def to_csv(records: Iterable[ResultRecord], timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in records:
        w.writerows(csv_rows(rec, timing))
    return buf.getvalue()


def write_csv(records: Iterable[ResultRecord], path: str | os.PathLike, timing: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv(records, timing))
    return path


def read_csv(path: str | os.PathLike) -> list[ResultRecord]:
    """Records without positions, in file order."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV header {header}")
        out: list[ResultRecord] = []
        for row in reader:
            run, seed, method, stage, e, h, r, iters, conv, sec, err = row
            if not out or out[-1].run != int(run):
                out.append(ResultRecord(int(run), int(seed), method, error=err))
            if stage != "":
                out[-1].stages.append(StageRow(int(stage), float(e), float(h), float(r), int(iters),
                                               bool(int(conv)), float(sec) if sec else 0.0))
    return out


def _record_dict(rec: ResultRecord, timing: bool) -> dict:
    return {
        "run": rec.run,
        "seed": rec.seed,
        "method": rec.method,
        "error": rec.error,
        "stages": [
            {"stage": s.stage, "E_minus_1": s.e_minus_1, "H": s.H, "R_eps": s.R, "iters": s.iters,
             "converged": s.converged, "seconds": s.seconds if timing else None}
            for s in rec.stages
        ],
        "positions": None if rec.positions is None else np.asarray(rec.positions, dtype=float).tolist(),
    }


def to_json(records: Iterable[ResultRecord], config: dict | None = None, timing: bool = True) -> str:
    doc = {"format": JSON_FORMAT, "config": config, "records": [_record_dict(r, timing) for r in records]}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def write_json(records: Iterable[ResultRecord], path: str | os.PathLike, config: dict | None = None,
               timing: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(records, config, timing))
    return path


def read_json(path: str | os.PathLike) -> tuple[list[ResultRecord], dict | None]:
    """(records with positions, the config the batch ran with)."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != JSON_FORMAT:
        raise ValueError(f"{path}: not a {JSON_FORMAT} file")
    out = []
    for d in doc["records"]:
        stages = [StageRow(s["stage"], s["E_minus_1"], s["H"], s["R_eps"], s["iters"], s["converged"],
                           s["seconds"] or 0.0) for s in d["stages"]]
        pos = None if d["positions"] is None else np.array(d["positions"], dtype=float).reshape(-1, 2)
        out.append(ResultRecord(d["run"], d["seed"], d["method"], stages, pos, d["error"]))
    return out, doc.get("config")


def stage_samples(records: Sequence[ResultRecord]) -> list[Sample]:
    """Per stage, the (E - 1, H, R_eps) rows of every successful run that reached it."""
    good = [r for r in records if r.ok and r.stages]
    if not good:
        return []
    n_stages = max(len(r.stages) for r in good)
    out = []
    for q in range(n_stages):
        rows = [(r.stages[q].e_minus_1, r.stages[q].H, r.stages[q].R) for r in good if len(r.stages) > q]
        out.append(Sample.of(rows))
    return out


def final_sample(records: Sequence[ResultRecord]) -> Sample:
    """Last-stage values of each successful run (what a baseline batch contributes)."""
    rows = [(r.stages[-1].e_minus_1, r.stages[-1].H, r.stages[-1].R) for r in records if r.ok and r.stages]
    return Sample.of(rows)
