"""Run configuration shared by the library and the command line.

Every tunable lives here with its default. Config files are plain text,
one ``key = value`` per line, ``#`` comments allowed; keys match the
dataclass fields one to one and unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

COUNT_MODES = ("unsigned-count", "signed-sum", "per-polarity")


@dataclass(frozen=True)
class RunConfig:
    # aggregation
    n_events: int = 7500  # events per constant-count window
    bins: int = 4  # temporal bins per voxel grid
    count_mode: str = "unsigned-count"
    # heatmaps
    heatmap_res: int = 64
    sigma: float = 2.0  # Gaussian footprint, pixels
    # geometry
    depth_half_extent: float = 1000.0  # mm mapped to one unit of z
    # lifting
    temperature: float = 1.0
    epsilon: float = 1e-8  # divergence smoothing
    # simulation
    cp: float = 0.2  # positive contrast threshold
    cn: float = 0.2  # negative contrast threshold
    log_eps: float = 1e-3
    refractory: float = 1e-4  # seconds
    # training
    lr: float = 3e-4
    seed: int = 0

    def __post_init__(self):
        if self.n_events <= 0:
            raise ConfigError("n_events must be positive")
        if self.bins < 2:
            raise ConfigError("bins must be at least 2")
        if self.count_mode not in COUNT_MODES:
            raise ConfigError(
                f"count_mode must be one of {', '.join(COUNT_MODES)}; got {self.count_mode!r}"
            )
        if self.heatmap_res < 2:
            raise ConfigError("heatmap_res must be at least 2")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.depth_half_extent <= 0:
            raise ConfigError("depth_half_extent must be positive")
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.cp <= 0 or self.cn <= 0:
            raise ConfigError("contrast thresholds must be positive")
        if self.log_eps <= 0:
            raise ConfigError("log_eps must be positive")
        if self.refractory < 0:
            raise ConfigError("refractory must be non-negative")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELDS[name].type
    raw = raw.strip()
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{name} expects an integer, got {raw!r}") from None
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{name} expects a number, got {raw!r}") from None
    return raw


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from a file plus optional overrides (CLI flags win)."""
    values: dict[str, object] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, rhs = line.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, rhs)
    if overrides:
        for key, val in overrides.items():
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            if val is not None:
                values[key] = val
    return RunConfig(**values)


def config_defaults() -> dict:
    """Field name to default value, in declaration order."""
    return {f.name: f.default for f in dataclasses.fields(RunConfig)}
