"""Run configuration: defaults, overridden by a TOML file, overridden by flags.

Every section maps onto one of the package's config dataclasses; keys are
the dataclass field names. See ``configs/SCHEMA.md`` for the full list.
"""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .actuation import GantryConfig
from .experiments.stability import StabilityConfig
from .experiments.sweep import TRIAL_SPEEDS_CM_S
from .kinematics import SuspensionConfig
from .navigation import MissionSetup, NavConfig
from .vision.pipeline import VisionConfig
from .vision.render import row_camera, weed_camera
from .world import ScenarioSpec, load_scenario_spec


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CameraConfig:
    weed_blur_px_per_cmps: float = 0.45
    weed_noise_sigma: float = 2.0
    row_noise_sigma: float = 2.0


@dataclass(frozen=True)
class ExperimentConfig:
    speeds: tuple[float, ...] = TRIAL_SPEEDS_CM_S
    trials: int = 1
    parallel: int = 1


@dataclass(frozen=True)
class RunConfig:
    world: ScenarioSpec = field(default_factory=ScenarioSpec)
    suspension: SuspensionConfig = field(default_factory=SuspensionConfig)
    gantry: GantryConfig = field(default_factory=GantryConfig)
    vision: VisionConfig = field(default_factory=VisionConfig)
    navigation: NavConfig = field(default_factory=NavConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    stability: StabilityConfig = field(default_factory=StabilityConfig)
    seed: int = 0
    out: str = "results"

    def mission_setup(self) -> MissionSetup:
        cam = self.camera
        return MissionSetup(nav=self.navigation, gantry=self.gantry, vision=self.vision,
                            suspension=self.suspension,
                            weed_cam=weed_camera(motion_blur_px_per_cmps=cam.weed_blur_px_per_cmps,
                                                 pixel_noise_sigma=cam.weed_noise_sigma),
                            row_cam=row_camera(pixel_noise_sigma=cam.row_noise_sigma))


def _coerce(current, value, where: str):
    if isinstance(current, bool) or isinstance(value, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(current, float) and isinstance(value, int):
        return float(value)
    if isinstance(current, tuple) and isinstance(value, list):
        as_float = not current or isinstance(current[0], float)
        return tuple(float(v) if as_float and isinstance(v, int) else v for v in value)
    return value


def apply_table(obj, table: dict, where: str):
    """Copy of dataclass ``obj`` with the keys of ``table`` replaced, recursing into sub-tables."""
    fields = {f.name for f in dataclasses.fields(obj)}
    changes = {}
    for key, value in table.items():
        if key not in fields:
            raise ConfigError(f"unknown key {where}.{key}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current) and isinstance(value, dict):
            changes[key] = apply_table(current, value, f"{where}.{key}")
        else:
            changes[key] = _coerce(current, value, f"{where}.{key}")
    try:
        return replace(obj, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def merge(config: RunConfig, data: dict) -> RunConfig:
    changes = {}
    for key, value in data.items():
        if key in ("seed", "out"):
            changes[key] = value
        elif key == "world":
            try:
                parsed = load_scenario_spec(value)
                changes[key] = replace(config.world, **{k: getattr(parsed, k) for k in value})
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"world: {exc}") from exc
        elif key in {f.name for f in dataclasses.fields(config)}:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            changes[key] = apply_table(getattr(config, key), value, key)
        else:
            raise ConfigError(f"unknown section [{key}]")
    return replace(config, **changes)


def load_config(path: str | Path | None = None) -> RunConfig:
    """Defaults, overridden by the TOML file at ``path`` when given."""
    config = RunConfig()
    if path is None:
        return config
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return merge(config, data)
