"""Run configuration loaded from TOML.

Example::

    scene = "sphere.json"        # paths are relative to this file
    seed = 0
    output_dir = "grids"

    [grid]
    s = 50.0
    partition_factor = 2
    scene_resolution = [128, 128, 128]
    camera_resolution = [64, 64, 128]
    view_dependency = true
    inclusive_transmittance = false
    density_scale = 1.0

    [schedule]
    total_steps = 500000
    refresh_interval = 2500
    phase_fractions = [0.2, 0.4, 0.6, 0.8]

    [sampling]
    points_per_ray = 32
    interpolate_conditionals = false

    [loss]
    lambda1 = 0.5
    lambda2 = 0.5
    epsilon = 0.001
    beta = 10.0
    surf_weight = 500.0
    inclusive_weights = false
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .sampler import MixSchedule


@dataclass(frozen=True)
class RunConfig:
    scene: Path
    cameras: Optional[Path] = None
    output_dir: Path = Path("grids")
    seed: int = 0
    threads: Optional[int] = None
    # grid
    s: float = 50.0
    partition_factor: int = 2
    scene_resolution: tuple = (128, 128, 128)
    camera_resolution: tuple = (64, 64, 128)
    view_dependency: bool = True
    inclusive_transmittance: bool = False
    density_scale: float = 1.0
    # schedule
    total_steps: int = 500_000
    refresh_interval: int = 2500
    phase_fractions: tuple = (0.20, 0.40, 0.60, 0.80)
    # sampling
    points_per_ray: int = 32
    interpolate_conditionals: bool = False
    # loss
    lambda1: float = 0.5
    lambda2: float = 0.5
    epsilon: float = 1e-3
    beta: float = 10.0
    surf_weight: float = 500.0
    inclusive_weights: bool = False

    def __post_init__(self):
        def res(name, v):
            try:
                t = tuple(int(x) for x in v)
            except TypeError:
                t = (int(v),) * 3
            if len(t) != 3 or min(t) < 1:
                raise ConfigError(f"{name} must be three integers >= 1, got {v!r}")
            object.__setattr__(self, name, t)

        res("scene_resolution", self.scene_resolution)
        res("camera_resolution", self.camera_resolution)
        object.__setattr__(self, "scene", Path(self.scene))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.cameras is not None:
            object.__setattr__(self, "cameras", Path(self.cameras))
        if self.partition_factor < 1:
            raise ConfigError("partition_factor must be >= 1")
        if not self.s > 0:
            raise ConfigError("s must be positive")
        if self.refresh_interval < 1:
            raise ConfigError("refresh_interval must be >= 1")
        if self.points_per_ray < 1:
            raise ConfigError("points_per_ray must be >= 1")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be >= 1")
        try:
            self.schedule()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def schedule(self) -> MixSchedule:
        return MixSchedule(self.total_steps, tuple(self.phase_fractions))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_SECTIONS = {
    "grid": {"s", "partition_factor", "scene_resolution", "camera_resolution", "view_dependency",
             "inclusive_transmittance", "density_scale"},
    "schedule": {"total_steps", "refresh_interval", "phase_fractions"},
    "sampling": {"points_per_ray", "interpolate_conditionals"},
    "loss": {"lambda1", "lambda2", "epsilon", "beta", "surf_weight", "inclusive_weights"},
}
_TOP = {"scene", "cameras", "output_dir", "seed", "threads"}


def config_from_dict(data: dict, base_dir: Path | None = None) -> RunConfig:
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            unknown = set(value) - _SECTIONS[key]
            if unknown:
                raise ConfigError(f"unknown keys in [{key}]: {', '.join(sorted(unknown))}")
            kwargs.update(value)
        elif key in _TOP:
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if "scene" not in kwargs:
        raise ConfigError("config must name a scene file")
    if base_dir is not None:
        kwargs.setdefault("output_dir", "grids")
        for key in ("scene", "cameras", "output_dir"):
            if kwargs.get(key) is not None and not Path(kwargs[key]).is_absolute():
                kwargs[key] = base_dir / kwargs[key]
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data, path.parent)
