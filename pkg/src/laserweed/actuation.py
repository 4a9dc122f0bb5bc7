"""Three-axis stepper gantry carrying the weeding laser.

Axes: x is a timing belt along the direction of travel, y is a pair of
synchronised lead screws across the row, z is a single lead screw that
lowers the laser. Every move is planned from absolute step counts measured
from the homed origin, so rounding never accumulates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .world import RobotState, Weed

AXES = ("x", "y", "z")
MICROSTEP_CHOICES = (1, 2, 4, 8, 16, 32)


class GantryError(RuntimeError):
    pass


class OutOfRangeError(GantryError):
    def __init__(self, axis: str, value: float, travel: float):
        super().__init__(f"{axis}-axis target {value:.4f} mm outside [0, {travel:.1f}] mm")
        self.axis = axis


class SafetyError(GantryError):
    pass


@dataclass(frozen=True)
class AxisConfig:
    drive: str = "belt"
    pitch_mm: float = 2.0
    teeth: int = 20
    steps_per_rev: int = 200
    microstepping: int = 16
    travel_mm: float = 400.0
    dual_motor: bool = False
    step_rate: float = 2000.0
    repeatability_mm: float = 0.0

    def __post_init__(self):
        if self.drive not in ("belt", "lead_screw"):
            raise ValueError(f"unknown drive {self.drive!r}")
        if self.steps_per_rev <= 0 or self.teeth <= 0:
            raise ValueError("steps per revolution and teeth must be positive")
        if self.microstepping not in MICROSTEP_CHOICES:
            raise ValueError(f"microstepping must be one of {MICROSTEP_CHOICES}")
        if self.travel_mm <= 0 or self.step_rate <= 0:
            raise ValueError("travel and step rate must be positive")


def belt_axis(**kw) -> AxisConfig:
    return AxisConfig(**{"drive": "belt", "pitch_mm": 2.0, "teeth": 20, "travel_mm": 400.0,
                         "step_rate": 2000.0, "repeatability_mm": 1.5, **kw})


def screw_axis(**kw) -> AxisConfig:
    # 40 000 microsteps/s moves a 2 mm lead screw at the same 25 mm/s as the belt
    return AxisConfig(**{"drive": "lead_screw", "pitch_mm": 2.0, "teeth": 1, "travel_mm": 300.0,
                         "step_rate": 40000.0, "repeatability_mm": 0.8, **kw})


@dataclass(frozen=True)
class LaserConfig:
    power_w: float = 2.5
    wavelength_nm: float = 450.0
    exposure_s: float = 2.0
    standoff_mm: float = 50.0
    kill_margin_mm: float = 1.0

    def __post_init__(self):
        if self.exposure_s <= 0:
            raise ValueError("exposure must be positive")


@dataclass(frozen=True)
class GantryConfig:
    x: AxisConfig = field(default_factory=belt_axis)
    y: AxisConfig = field(default_factory=lambda: screw_axis(dual_motor=True))
    z: AxisConfig = field(default_factory=lambda: screw_axis(repeatability_mm=0.0))
    laser: LaserConfig = field(default_factory=LaserConfig)
    quantized: bool = True
    top_height_mm: float = 300.0
    sensor_cone_mm: float = 15.0
    sensor_samples: int = 4
    origin_m: tuple[float, float] = (-0.50, 0.15)

    def axis(self, name: str) -> AxisConfig:
        return getattr(self, name)

    def noiseless(self) -> "GantryConfig":
        return replace(self, x=replace(self.x, repeatability_mm=0.0),
                       y=replace(self.y, repeatability_mm=0.0),
                       z=replace(self.z, repeatability_mm=0.0))


@dataclass(frozen=True)
class StepPlan:
    steps: dict[str, float]
    motor_steps: dict[str, float]
    displacement_mm: dict[str, float]
    residual_mm: dict[str, float]
    target_mm: tuple[float, float, float]
    duration_s: float


@dataclass
class GantryState:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    commanded: tuple[float, float, float] = (0.0, 0.0, 0.0)
    steps: tuple[float, float, float] = (0, 0, 0)
    homed: bool = False
    laser_on: bool = False
    limit_hit: dict[str, bool] = field(default_factory=lambda: dict.fromkeys(AXES, False))
    clock_s: float = 0.0


def axis_resolution(axis: AxisConfig) -> float:
    """Linear travel per microstep in mm."""
    return (axis.pitch_mm * axis.teeth) / (axis.steps_per_rev * axis.microstepping)


def round_half_away(q: float) -> int:
    return int(math.copysign(math.floor(abs(q) + 0.5), q))


def laser_height(state: GantryState, config: GantryConfig) -> float:
    return config.top_height_mm - state.position[2]


def home(state: GantryState | None = None) -> GantryState:
    clock = state.clock_s if state is not None else 0.0
    return GantryState(homed=True, clock_s=clock)


def plan_move(state: GantryState, target, config: GantryConfig) -> StepPlan:
    if not state.homed:
        raise SafetyError("gantry must be homed before planning a move")
    steps, disp, resid = {}, {}, {}
    duration = 0.0
    for i, name in enumerate(AXES):
        axis = config.axis(name)
        t = float(target[i])
        if not -1e-9 <= t <= axis.travel_mm + 1e-9:
            raise OutOfRangeError(name, t, axis.travel_mm)
        res = axis_resolution(axis)
        goal = round_half_away(t / res) if config.quantized else t / res
        n = goal - state.steps[i]
        steps[name] = n
        disp[name] = n * res
        resid[name] = t - goal * res
        duration = max(duration, abs(n) / axis.step_rate)
    motors = {"x": steps["x"], "z": steps["z"]}
    if config.y.dual_motor:
        motors["y1"] = motors["y2"] = steps["y"]
    else:
        motors["y"] = steps["y"]
    return StepPlan(steps=steps, motor_steps=motors, displacement_mm=disp, residual_mm=resid,
                    target_mm=tuple(float(v) for v in target), duration_s=duration)


def execute_plan(state: GantryState, plan: StepPlan, config: GantryConfig,
                 rng: np.random.Generator | None = None) -> GantryState:
    if not state.homed:
        raise SafetyError("gantry must be homed before moving")
    if config.y.dual_motor and plan.motor_steps["y1"] != plan.motor_steps["y2"]:
        raise GantryError("dual y-axis motors out of sync")
    new_steps, commanded, actual = [], [], []
    limit = dict(state.limit_hit)
    for i, name in enumerate(AXES):
        axis = config.axis(name)
        res = axis_resolution(axis)
        n = state.steps[i] + plan.steps[name]
        pos = n * res
        if pos < 0 or pos > axis.travel_mm:
            limit[name] = True
            n = 0 if pos < 0 else (math.floor(axis.travel_mm / res) if config.quantized
                                   else axis.travel_mm / res)
            pos = n * res
        new_steps.append(n)
        commanded.append(pos)
        if plan.steps[name] == 0:
            # an idle axis keeps its previous settling error
            actual.append(state.position[i])
            continue
        err = 0.0
        if rng is not None and axis.repeatability_mm > 0:
            err = float(rng.normal(0.0, axis.repeatability_mm))
        actual.append(min(max(pos + err, 0.0), axis.travel_mm))
    return replace(state, position=tuple(actual), commanded=tuple(commanded),
                   steps=tuple(new_steps), limit_hit=limit,
                   clock_s=state.clock_s + plan.duration_s)


def move_to(state: GantryState, target, config: GantryConfig,
            rng: np.random.Generator | None = None) -> GantryState:
    return execute_plan(state, plan_move(state, target, config), config, rng)


def gantry_to_world(point_mm, robot: RobotState, config: GantryConfig) -> tuple[float, float]:
    """Map a gantry (x, y) in mm to field coordinates in metres."""
    bx = config.origin_m[0] + point_mm[0] / 1000.0
    by = config.origin_m[1] - point_mm[1] / 1000.0
    c, s = math.cos(robot.heading_rad), math.sin(robot.heading_rad)
    return (robot.position[0] + c * bx - s * by, robot.position[1] + s * bx + c * by)


def world_to_gantry(point_m, robot: RobotState, config: GantryConfig) -> tuple[float, float]:
    dx = point_m[0] - robot.position[0]
    dy = point_m[1] - robot.position[1]
    c, s = math.cos(robot.heading_rad), math.sin(robot.heading_rad)
    bx = c * dx + s * dy
    by = -s * dx + c * dy
    return ((bx - config.origin_m[0]) * 1000.0, (config.origin_m[1] - by) * 1000.0)


def descend_to_weed(state: GantryState, weed: Weed | None, config: GantryConfig,
                    noise_mm: float = 0.0, rng: np.random.Generator | None = None,
                    offset_mm: float = 0.0) -> tuple[GantryState, bool]:
    """Lower the laser until the ultrasonic range puts it ``standoff_mm`` above the weed.

    ``offset_mm`` is the horizontal distance between the laser axis and the
    weed centre. Returns the new state and whether the sensor found the weed;
    without an echo the descent runs to the z travel limit.
    """
    x, y, _ = state.commanded
    present = weed is not None and offset_mm <= config.sensor_cone_mm + weed.stem_radius_m * 1000
    if not present:
        return move_to(state, (x, y, config.z.travel_mm), config), False
    true_range = laser_height(state, config) - weed.height_m * 1000.0
    n = max(1, config.sensor_samples)
    if noise_mm > 0:
        if rng is None:
            raise ValueError("a random generator is required for noisy ranging")
        measured = true_range + float(np.mean(rng.normal(0.0, noise_mm, n)))
    else:
        measured = true_range
    z = state.commanded[2] + measured - config.laser.standoff_mm
    z = min(max(z, 0.0), config.z.travel_mm)
    return move_to(state, (x, y, z), config), True


def fire(state: GantryState, weed: Weed, robot: RobotState,
         config: GantryConfig) -> tuple[GantryState, bool]:
    if not state.homed:
        raise SafetyError("refusing to fire an unhomed laser")
    lx, ly = gantry_to_world(state.position, robot, config)
    dist_mm = math.hypot(lx - weed.position[0], ly - weed.position[1]) * 1000.0
    hit = dist_mm <= weed.stem_radius_m * 1000.0 + config.laser.kill_margin_mm
    if hit:
        weed.eliminated = True
    return replace(state, laser_on=False, clock_s=state.clock_s + config.laser.exposure_s), hit


def plan_csv(plan: StepPlan) -> str:
    lines = ["axis,steps,displacement_mm,residual_mm"]
    for name in AXES:
        lines.append(f"{name},{plan.steps[name]:g},{plan.displacement_mm[name]:.6f},"
                     f"{plan.residual_mm[name]:.6f}")
    for motor, n in plan.motor_steps.items():
        if motor.startswith("y") and motor != "y":
            lines.append(f"{motor},{n:g},,")
    lines.append(f"duration_s,{plan.duration_s:.6f},,")
    return "\n".join(lines) + "\n"
