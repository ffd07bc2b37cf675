"""Experiment configuration files (YAML or JSON) and run manifests."""
from __future__ import annotations

import json
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from ..errors import ConfigParse
from ..io import atomic_write

KINDS = ("theory_curve", "simulate", "shrink", "transfer", "reproduce")


@dataclass
class ExperimentConfig:
    kind: str = "theory_curve"
    seed: int = 0
    output_dir: str = "out"
    plot: bool = False
    # teacher / student
    snrs: list = field(default_factory=lambda: [3.0])
    n1: int = 100
    n3: int = 50
    n2: int = 50
    depth: int = 3
    eps: float = 1e-3
    tau: float = 1.0
    sample_count: int | None = None
    sigma_z: float = 1.0
    finite_size: bool = True
    # time grid (units of tau)
    t_min: float = 1e-2
    t_max: float = 30.0
    n_times: int = 200
    # simulation
    init: str = "aligned"
    data_mode: str | None = None
    lam: float | None = None
    activation: str = "linear"
    slope: float = 0.2
    n_seeds: int = 1
    # shrinkage
    input: str | None = None
    aspect: float | None = None
    margin: float = 0.02
    report: str | None = None
    estimate_scale: bool = False
    # transfer
    snr_a: float = 3.0
    snr_b: float = 3.0
    q: float = 1.0
    grid: bool = False
    # reproduce
    figure: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigParse(f"kind must be one of {KINDS}, got {self.kind!r}")
        if isinstance(self.snrs, (int, float)):
            self.snrs = [self.snrs]
        try:
            self.snrs = [float(s) for s in self.snrs]
        except (TypeError, ValueError) as exc:
            raise ConfigParse(f"snrs must be a list of numbers: {exc}") from exc
        for name in ("n1", "n3", "n2", "depth", "n_times", "n_seeds", "seed"):
            if not isinstance(getattr(self, name), int) or isinstance(getattr(self, name), bool):
                raise ConfigParse(f"{name} must be an integer, got {getattr(self, name)!r}")
        if self.t_min <= 0 or self.t_max <= self.t_min:
            raise ConfigParse("need 0 < t_min < t_max")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigParse("configuration must be a mapping of field names to values")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigParse(f"unknown configuration fields: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a YAML or JSON file (JSON is valid YAML) and apply ``overrides``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParse(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigParse(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigParse(f"{path}: top level must be a mapping")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


@dataclass
class RunManifest:
    config: dict
    seed: int
    version: str
    wall_time: float
    outputs: list
    python: str = field(default_factory=platform.python_version)

    def write(self, path) -> None:
        atomic_write(path, lambda fh: json.dump(asdict(self), fh, indent=2, sort_keys=True, default=str))

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))
