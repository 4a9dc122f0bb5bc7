"""Simulated field: crop rows, weeds, obstacles, and the skid-steer robot pose."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

TRACK_WIDTH_M = 0.406
ROBOT_LENGTH_M = 0.760
OBSTACLE_KINDS = ("rock", "organic", "incline")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class CropRow:
    start: tuple[float, float]
    direction: tuple[float, float]
    plant_spacing_m: float
    plant_radius_m: float
    length_m: float

    def __post_init__(self):
        norm = math.hypot(*self.direction)
        if abs(norm - 1.0) > 1e-9:
            raise ScenarioError(f"row direction must be a unit vector, got norm {norm}")
        if self.plant_spacing_m <= 2 * self.plant_radius_m:
            raise ScenarioError("plant spacing must exceed the plant diameter")

    @property
    def end(self) -> tuple[float, float]:
        return (self.start[0] + self.direction[0] * self.length_m,
                self.start[1] + self.direction[1] * self.length_m)

    def plant_positions(self) -> np.ndarray:
        n = int(math.floor(self.length_m / self.plant_spacing_m + 1e-9)) + 1
        s = np.arange(n) * self.plant_spacing_m
        return np.column_stack([self.start[0] + s * self.direction[0],
                                self.start[1] + s * self.direction[1]])


@dataclass
class Weed:
    position: tuple[float, float]
    stem_radius_m: float
    height_m: float
    eliminated: bool = False

    def __post_init__(self):
        if not 0.002 < self.stem_radius_m < 0.05:
            raise ScenarioError(f"stem radius {self.stem_radius_m} outside (0.002, 0.05) m")
        if not 0.01 < self.height_m < 0.30:
            raise ScenarioError(f"weed height {self.height_m} outside (0.01, 0.30) m")


@dataclass(frozen=True)
class Obstacle:
    position: tuple[float, float]
    height_cm: float
    kind: str

    def __post_init__(self):
        if self.height_cm <= 0:
            raise ScenarioError("obstacle height must be positive")
        if self.kind not in OBSTACLE_KINDS:
            raise ScenarioError(f"unknown obstacle kind {self.kind!r}")


@dataclass
class FieldScenario:
    width_m: float
    length_m: float
    rows: list[CropRow]
    weeds: list[Weed]
    obstacles: list[Obstacle]
    seed: int
    row_spacing_m: float = 0.5

    def crop_positions(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, 2))
        return np.vstack([r.plant_positions() for r in self.rows])

    def weed_positions(self) -> np.ndarray:
        return np.array([w.position for w in self.weeds], dtype=float).reshape(-1, 2)

    def copy(self) -> "FieldScenario":
        return replace(self, weeds=[replace(w) for w in self.weeds],
                       rows=list(self.rows), obstacles=list(self.obstacles))


@dataclass
class RobotState:
    position: tuple[float, float] = (0.0, 0.0)
    heading_rad: float = 0.0
    linear_speed_cm_s: float = 0.0
    odometer_m: float = 0.0
    clock_s: float = 0.0


@dataclass
class ScenarioSpec:
    """Parameters for :func:`generate_scenario`.

    Weed density is per square metre of cropped area (rows x spacing x row
    length); weeds are placed inside a band of ``weed_band_m`` centred on
    each row, which is the strip the downward camera sweeps.
    """
    row_count: int = 2
    row_length_m: float = 10.0
    row_spacing_m: float = 0.5
    plant_spacing_m: float = 0.25
    plant_radius_m: float = 0.045
    headland_m: float = 1.5
    weed_density_per_m2: float = 19.3
    weed_band_m: float = 0.28
    weed_radius_median_m: float = 0.0055
    weed_radius_sigma: float = 0.45
    weed_radius_min_m: float = 0.0021
    weed_radius_max_m: float = 0.049
    weed_height_range_m: tuple[float, float] = (0.03, 0.25)
    weed_min_gap_m: float = 0.002
    crop_min_separation_m: float = 0.01
    obstacles: list[tuple[float, float, float, str]] = field(default_factory=list)

    @property
    def field_width_m(self) -> float:
        return self.row_count * self.row_spacing_m

    @property
    def field_length_m(self) -> float:
        return self.row_length_m + 2 * self.headland_m

    @property
    def weed_count(self) -> int:
        area = self.row_count * self.row_spacing_m * self.row_length_m
        return int(round(self.weed_density_per_m2 * area))


def generate_scenario(spec: ScenarioSpec, seed: int) -> FieldScenario:
    if spec.row_count < 1:
        raise ScenarioError("at least one crop row is required")
    if spec.row_length_m <= 0 or spec.row_spacing_m <= 0 or spec.headland_m < 0:
        raise ScenarioError("field dimensions must be positive")
    if spec.weed_density_per_m2 < 0:
        raise ScenarioError("weed density must be non-negative")
    if spec.weed_band_m > spec.row_spacing_m:
        raise ScenarioError("weed band wider than the row spacing")

    rows = [CropRow(start=(spec.headland_m, (i + 0.5) * spec.row_spacing_m),
                    direction=(1.0, 0.0),
                    plant_spacing_m=spec.plant_spacing_m,
                    plant_radius_m=spec.plant_radius_m,
                    length_m=spec.row_length_m)
            for i in range(spec.row_count)]
    crops = np.vstack([r.plant_positions() for r in rows])

    rng = np.random.Generator(np.random.PCG64(seed))
    weeds: list[Weed] = []
    placed = np.zeros((0, 3))
    target = spec.weed_count
    attempts = 0
    while len(weeds) < target:
        attempts += 1
        if attempts > 2000 * max(target, 1):
            raise ScenarioError("weed density too high for the rejection sampler")
        row = rows[int(rng.integers(spec.row_count))]
        along = rng.uniform(0.0, spec.row_length_m)
        lateral = rng.uniform(-spec.weed_band_m / 2, spec.weed_band_m / 2)
        radius = math.exp(rng.normal(math.log(spec.weed_radius_median_m), spec.weed_radius_sigma))
        height = rng.uniform(*spec.weed_height_range_m)
        if not spec.weed_radius_min_m <= radius <= spec.weed_radius_max_m:
            continue
        x = row.start[0] + along
        y = row.start[1] + lateral
        if np.min(np.hypot(crops[:, 0] - x, crops[:, 1] - y)) < spec.crop_min_separation_m:
            continue
        if len(placed):
            gap = np.hypot(placed[:, 0] - x, placed[:, 1] - y) - placed[:, 2] - radius
            if np.min(gap) < spec.weed_min_gap_m:
                continue
        weeds.append(Weed(position=(float(x), float(y)), stem_radius_m=float(radius),
                          height_m=float(height)))
        placed = np.vstack([placed, [x, y, radius]])

    obstacles = [Obstacle(position=(float(ox), float(oy)), height_cm=float(h), kind=k)
                 for ox, oy, h, k in spec.obstacles]
    return FieldScenario(width_m=spec.field_width_m, length_m=spec.field_length_m,
                         rows=rows, weeds=weeds, obstacles=obstacles, seed=seed,
                         row_spacing_m=spec.row_spacing_m)


def normalize_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.remainder(theta, 2 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2 * math.pi
    return wrapped


def advance(state: RobotState, wheel_speeds: tuple[float, float], dt: float,
            track_width_m: float = TRACK_WIDTH_M, max_speed_cm_s: float = 100.0) -> RobotState:
    """Integrate skid-steer motion exactly over ``dt`` for constant side speeds.

    ``wheel_speeds`` is (left, right) in cm/s. The odometer accumulates the
    distance travelled by the robot centre.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v_l, v_r = (max(-max_speed_cm_s, min(max_speed_cm_s, s)) / 100.0 for s in wheel_speeds)
    v = 0.5 * (v_l + v_r)
    omega = (v_r - v_l) / track_width_m
    x, y = state.position
    th = state.heading_rad
    if abs(omega) < 1e-12:
        x += v * dt * math.cos(th)
        y += v * dt * math.sin(th)
    else:
        th_new = th + omega * dt
        x += v / omega * (math.sin(th_new) - math.sin(th))
        y -= v / omega * (math.cos(th_new) - math.cos(th))
    return RobotState(position=(x, y),
                      heading_rad=normalize_angle(th + omega * dt),
                      linear_speed_cm_s=v * 100.0,
                      odometer_m=state.odometer_m + abs(v) * dt,
                      clock_s=state.clock_s + dt)


def load_scenario_spec(data: dict) -> ScenarioSpec:
    """Build a ScenarioSpec from a parsed ``[world]`` config table."""
    known = ScenarioSpec.__dataclass_fields__
    kwargs = {}
    for key, value in data.items():
        if key == "obstacles":
            kwargs[key] = [(float(o["x"]), float(o["y"]), float(o["height_cm"]), str(o["kind"]))
                           for o in value]
        elif key == "weed_height_range_m":
            kwargs[key] = tuple(float(v) for v in value)
        elif key in known:
            kwargs[key] = value
        else:
            raise ScenarioError(f"unknown world config key {key!r}")
    return ScenarioSpec(**kwargs)


def scenario_to_csv(scenario: FieldScenario) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["entity", "x", "y", "attributes"])
    for i, row in enumerate(scenario.rows):
        for x, y in row.plant_positions():
            writer.writerow(["crop", f"{x:.6f}", f"{y:.6f}",
                             f"row={i};radius_m={row.plant_radius_m:.6f}"])
    for w in scenario.weeds:
        writer.writerow(["weed", f"{w.position[0]:.6f}", f"{w.position[1]:.6f}",
                         f"stem_radius_m={w.stem_radius_m:.6f};height_m={w.height_m:.6f};"
                         f"eliminated={int(w.eliminated)}"])
    for o in scenario.obstacles:
        writer.writerow(["obstacle", f"{o.position[0]:.6f}", f"{o.position[1]:.6f}",
                         f"height_cm={o.height_cm:g};kind={o.kind}"])
    return buf.getvalue()


def weeds_in_bounds(scenario: FieldScenario) -> bool:
    return all(0 <= w.position[0] <= scenario.length_m and 0 <= w.position[1] <= scenario.width_m
               for w in scenario.weeds)


def count_eliminated(weeds: Iterable[Weed]) -> int:
    return sum(1 for w in weeds if w.eliminated)


def nearest(points: Sequence[tuple[float, float]], p: tuple[float, float]) -> tuple[int, float]:
    arr = np.asarray(points, dtype=float).reshape(-1, 2)
    if not len(arr):
        return -1, math.inf
    d = np.hypot(arr[:, 0] - p[0], arr[:, 1] - p[1])
    i = int(np.argmin(d))
    return i, float(d[i])
