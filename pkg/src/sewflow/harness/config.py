"""Experiment configuration: JSON file plus command-line overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..measures import InitialLawSpec, MeasureError
from ..model import ModelError, builtin_model

DEMO_PARAMS = {
    "b0": 0.5, "bx": -0.8, "bm": 0.4,
    "cx": 0.3, "cv": 0.4, "cm": -0.2,
    "s0": 0.5, "sx": 0.4, "sv": 0.2,
    "lambda": 2.0,
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: str = "linear1d"
    params: dict = field(default_factory=lambda: dict(DEMO_PARAMS))
    initial: dict = field(default_factory=lambda: {"kind": "gaussian", "dim": 1, "mean": [0.2], "cov": [[0.25]]})
    s: float = 0.0
    t: float = 1.0
    T: float = 1.0
    N: int = 10_000
    seed: int = 12345
    levels: tuple = (3, 9)
    ref_level: int = 13
    reps: int = 8
    threads: int = 1
    out: str = "out"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        self.levels = tuple(int(v) for v in self.levels)
        self.validate()

    def validate(self):
        if not self.s < self.t <= self.T:
            raise ConfigError(f"need s < t <= T, got s={self.s}, t={self.t}, T={self.T}")
        if self.s < 0:
            raise ConfigError("s must be non-negative")
        if self.N < 100:
            raise ConfigError("N must be at least 100")
        if len(self.levels) != 2 or self.levels[0] > self.levels[1] or self.levels[0] < 0:
            raise ConfigError("levels must be a range A:B with 0 <= A <= B")
        if self.levels[1] >= self.ref_level:
            raise ConfigError("study levels must be below the reference level")
        if self.reps < 1 or self.threads < 1:
            raise ConfigError("reps and threads must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        try:
            self.build_model()
            self.initial_spec()
        except (ModelError, MeasureError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def build_model(self):
        return builtin_model(self.model, **self.params)

    def initial_spec(self, n: int | None = None) -> InitialLawSpec:
        data = dict(self.initial)
        if data.get("kind") != "explicit-points":
            data["n"] = self.N if n is None else n
        return InitialLawSpec.from_dict(data)

    def level_range(self):
        return list(range(self.levels[0], self.levels[1] + 1))

    def opt(self, key, default):
        return self.options.get(key, default)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["levels"] = list(self.levels)
        return d

    def hash(self) -> str:
        d = self.to_dict()
        # outputs and scheduling do not change results
        d.pop("out")
        d.pop("threads")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


FIELDS = {f for f in ExperimentConfig.__dataclass_fields__}


def load_config(path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    data = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data = dict(data)
    options = dict(data.pop("options", {}))
    for key in list(data):
        if key not in FIELDS:
            options[key] = data.pop(key)
    if data.get("model", "linear1d") != "linear1d" and "params" not in data:
        data["params"] = {}
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    try:
        return ExperimentConfig(**data, options=options)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
