"""Experiment runner, result files, SVG rendering and the ``pcvt`` command."""

from .config import ConfigError, ExperimentConfig, from_mapping, load_config
from .io import read_csv, read_json, stage_samples, final_sample, to_csv, to_json, write_csv, write_json
from .render import render_svg, svg_string
from .runner import ResultRecord, StageRow, admissible_hex_n, execute, run_batch, run_seed, sweep_k, sweep_table

__all__ = [
    "ConfigError", "ExperimentConfig", "ResultRecord", "StageRow", "admissible_hex_n", "execute",
    "final_sample", "from_mapping", "load_config", "read_csv", "read_json", "render_svg", "run_batch",
    "run_seed", "stage_samples", "svg_string", "sweep_k", "sweep_table", "to_csv", "to_json",
    "write_csv", "write_json",
]
