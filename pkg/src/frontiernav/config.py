"""Navigation parameters and the JSON configuration file that carries them."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

from .errors import ConfigurationError

_DISTANCES = ("r_near", "r_goal", "r_clear", "epsilon_stall", "tau_merge", "r_sep", "step_size", "r_gain", "dbscan_eps")
_COUNTS = ("T_stall", "n_emergency", "prediction_interval", "max_steps", "min_cluster_cells", "discard_cooldown")
_UNIT = ("p_presence", "g_min")


@dataclass(frozen=True)
class NavConfig:
    # frontier manager thresholds
    r_near: float = 0.2
    r_goal: float = 1.0
    r_clear: float = 0.5
    epsilon_stall: float = 0.1
    T_stall: int = 15
    p_presence: float = 0.7
    n_emergency: int = 3
    tau_merge: float = 1.8
    g_min: float = 0.5
    prediction_interval: int = 6
    # viewpoint standoff from a detected object
    r_sep: float = 1.0
    # agent action space and episode budget
    step_size: float = 0.25
    turn_angle: float = math.radians(30.0)
    max_steps: int = 500
    rng_seed: int = 0
    # grid frontier detector
    r_gain: float = 2.0
    min_cluster_cells: int = 3
    # object hypotheses
    dbscan_eps: float = 1.0
    discard_cooldown: int = 100

    def __post_init__(self):
        for name in _DISTANCES:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise ConfigurationError(f"{name} must be a positive distance, got {value!r}")
        for name in _COUNTS:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        for name in _UNIT:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0 < value <= 1:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {value!r}")
        if not 0 < self.turn_angle < math.pi:
            raise ConfigurationError("turn_angle must lie in (0, pi) radians")
        if isinstance(self.rng_seed, bool) or not isinstance(self.rng_seed, int):
            raise ConfigurationError("rng_seed must be an integer")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_dict(self) -> dict:
        return asdict(self)

    def updated(self, **overrides) -> "NavConfig":
        return config_from_dict({**self.to_dict(), **overrides})


def _coerce(name: str, value):
    if name in _COUNTS or name == "rng_seed":
        if isinstance(value, float) and value.is_integer():
            return int(value)
    elif isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def config_from_dict(data: dict) -> NavConfig:
    """Build a config from a mapping; missing keys keep their defaults."""
    known = set(NavConfig.field_names())
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
    return NavConfig(**{k: _coerce(k, v) for k, v in data.items()})


def load_config(path) -> NavConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a JSON object")
    return config_from_dict(data)


def default_config_path() -> Path:
    return Path(str(resources.files("frontiernav") / "data" / "default_config.json"))


def save_config(config: NavConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")


__all__ = ["NavConfig", "config_from_dict", "load_config", "save_config", "default_config_path", "replace"]
