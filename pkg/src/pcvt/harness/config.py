"""Experiment configuration: defaults, JSON files and flag overrides."""

from __future__ import annotations

import dataclasses
import json
import os
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ..errors import PcvtError
from ..geometry import TorusDomain, TorusKind, admissible_hex_pairs
from ..macn import AnnealingSchedule, DeltaRule, InnerOptimizer, MacnConfig

OUTPUT_ENV = "PCVT_OUTPUT_DIR"
DEFAULT_OUTPUT = "pcvt-out"

_METHOD = re.compile(r"(lloyd|lbfgs|plbfgs)(\(.*\))?|hybrid|anneal")


class ConfigError(PcvtError, ValueError):
    """Invalid experiment configuration."""


class AdmissibilityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One batch of independent runs.

    ``method`` is 'lloyd', 'lbfgs(M)', 'plbfgs(M,T)', 'hybrid' or 'anneal';
    the hybrid and annealing parameters are only read for those methods.
    """

    domain: str = "square"
    area: float = 1.0
    n: int = 100
    method: str = "lloyd"
    runs: int = 1
    master_seed: int = 0
    tol: float | None = None
    max_iter: int | None = None
    # hybrid
    K: int = 1000
    Q: int = 10
    delta_rule: str = "fixed"
    inner: str = "lloyd"
    K_schedule: tuple[int, ...] | None = None
    # annealing baseline
    stages: int = 24
    T0: float = 1e-4
    decay: float = 0.9
    h: float = 0.25
    # regularity threshold for R_eps
    epsilon: float = 0.005
    # output
    output_dir: str | None = None
    tag: str = "results"
    workers: int = 1
    render: bool = False
    timing: bool = True
    check_ground_state: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        try:
            TorusKind(self.domain)
        except ValueError:
            raise ConfigError(f"unknown domain {self.domain!r}") from None
        if not _METHOD.fullmatch(self.method.replace(" ", "").lower()):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.method.startswith(("lloyd", "lbfgs", "plbfgs")):
            try:
                InnerOptimizer.parse(self.method)
            except (ValueError, IndexError) as exc:
                raise ConfigError(str(exc)) from None
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.runs < 0:
            raise ConfigError("runs must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.area > 0:
            raise ConfigError("area must be positive")
        if self.K < 0 or self.Q < 1:
            raise ConfigError("need K >= 0 and Q >= 1")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        try:
            DeltaRule(self.delta_rule)
            InnerOptimizer.parse(self.inner)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.K_schedule is not None:
            object.__setattr__(self, "K_schedule", tuple(int(k) for k in self.K_schedule))
            if len(self.K_schedule) != self.Q:
                raise ConfigError("K_schedule needs Q entries")
        if self.domain == TorusKind.HEXAGONAL.value and not admissible_hex_pairs(self.n):
            msg = f"N={self.n} admits no honeycomb on the hexagonal torus"
            if self.check_ground_state:
                raise ConfigError(msg)
            warnings.warn(msg, AdmissibilityWarning, stacklevel=3)

    @property
    def torus(self) -> TorusDomain:
        return TorusDomain.from_kind(self.domain, self.area)

    @property
    def method_kind(self) -> str:
        return self.method.split("(")[0].strip().lower()

    def macn(self, rng_seed) -> MacnConfig:
        return MacnConfig(K=self.K, Q=self.Q, tol=self.tol, delta_rule=DeltaRule(self.delta_rule),
                          inner=InnerOptimizer.parse(self.inner), rng_seed=rng_seed,
                          K_schedule=self.K_schedule, record_series=False, max_inner_iter=self.max_iter)

    def schedule(self) -> AnnealingSchedule:
        return AnnealingSchedule(stages=self.stages, T0=self.T0, decay=self.decay, h=self.h,
                                 inner=InnerOptimizer.parse(self.inner), tol=self.tol)

    def output_path(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d.pop("extra")
        if d["K_schedule"] is not None:
            d["K_schedule"] = list(d["K_schedule"])
        return d

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"extra"}


def from_mapping(values: Mapping[str, Any], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Overlay ``values`` (None entries ignored) on ``base`` or the defaults."""
    unknown = set(values) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = (base or ExperimentConfig()).to_dict()
    merged.update({k: v for k, v in values.items() if v is not None})
    return ExperimentConfig(**merged)


def load_config(path: str | os.PathLike, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read a JSON object of config keys."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        values = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(values, dict):
        raise ConfigError("config file must hold a JSON object")
    return from_mapping(values, base)
