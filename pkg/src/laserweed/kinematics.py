"""Position analysis of the double four-bar (slider-crank) suspension.

Two routes coexist. The formula route evaluates the vector-loop closure
directly. The reference route carries fixed design constants (link angle
-10.47 deg, slider -90.69 mm) that differ from what the default link
lengths give, and that the field climbing limits were matched against.
Obstacle traversal thresholds use the reference route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .world import Obstacle

REFERENCE_LINK_ANGLE_DEG = -10.47
REFERENCE_SLIDER_MM = -90.69

KIND_FACTORS = {"rock": 1.0, "organic": 0.85, "incline": 1.25}
CLEAN_CLIMB_LIMIT_CM = 10.5
LIGHT_DEVIATION_ONSET_CM = 10.0

CLIMB_CLASSES = ("yes", "partial", "no")
NAV_EFFECTS = ("none", "light_deviation", "significant_deviation")
IMAGE_EFFECTS = ("none", "partial_distortion", "unstable")


class LinkGeometryError(ValueError):
    """The linkage cannot close for the requested crank angle."""


@dataclass(frozen=True)
class SuspensionConfig:
    crank_mm: float = 270.0
    coupler_mm: float = 320.0
    offset_mm: float = 195.0
    crank_angle_deg: float = 30.0
    pivot_height_mm: float = 320.0
    wheel_radius_mm: float = 92.0

    def __post_init__(self):
        if min(self.crank_mm, self.coupler_mm, self.pivot_height_mm, self.wheel_radius_mm) <= 0 \
                or self.offset_mm < 0:
            raise LinkGeometryError("link lengths must be positive")

    @property
    def rest_slider_mm(self) -> float:
        return self.pivot_height_mm - self.wheel_radius_mm


@dataclass(frozen=True)
class SuspensionPose:
    link_angle_deg: float
    slider_mm: float
    max_lift_mm: float


@dataclass(frozen=True)
class TraversalOutcome:
    climb: str
    nav_effect: str
    image_effect: str

    def __post_init__(self):
        if self.climb == "yes" and self.nav_effect not in ("none", "light_deviation"):
            raise ValueError("a clean climb cannot cause significant deviation")
        if self.climb == "no" and (self.nav_effect, self.image_effect) != (
                "significant_deviation", "unstable"):
            raise ValueError("a failed climb must deviate significantly and destabilise the image")


def solve_theta3(config: SuspensionConfig) -> float:
    """Connecting-link angle in degrees from the vector loop."""
    rise = config.crank_mm * math.sin(math.radians(config.crank_angle_deg)) - config.offset_mm
    arg = rise / config.coupler_mm
    if not -1.0 <= arg <= 1.0:
        raise LinkGeometryError(f"arcsine argument {arg:.6f} outside [-1, 1]")
    return math.degrees(math.asin(arg))


def solve_slider_position(config: SuspensionConfig, link_angle_deg: float) -> float:
    return (config.crank_mm * math.cos(math.radians(config.crank_angle_deg))
            - config.coupler_mm * math.cos(math.radians(link_angle_deg)))


def loop_residual(config: SuspensionConfig, link_angle_deg: float) -> float:
    return (config.crank_mm * math.sin(math.radians(config.crank_angle_deg))
            - config.coupler_mm * math.sin(math.radians(link_angle_deg)) - config.offset_mm)


def lift_from_slider(config: SuspensionConfig, slider_mm: float) -> float:
    # the slider sign is a frame convention; only its magnitude reproduces the 137 mm lift
    return config.rest_slider_mm - abs(slider_mm)


def max_wheel_lift(config: SuspensionConfig, route: str = "reference") -> float:
    if route == "reference":
        return lift_from_slider(config, REFERENCE_SLIDER_MM)
    if route == "formula":
        return lift_from_slider(config, solve_slider_position(config, solve_theta3(config)))
    raise ValueError(f"unknown route {route!r}")


def solve_pose(config: SuspensionConfig, route: str = "formula") -> SuspensionPose:
    if route == "reference":
        angle, slider = REFERENCE_LINK_ANGLE_DEG, REFERENCE_SLIDER_MM
    else:
        angle = solve_theta3(config)
        slider = solve_slider_position(config, angle)
    return SuspensionPose(link_angle_deg=angle, slider_mm=slider,
                          max_lift_mm=max(0.0, lift_from_slider(config, slider)))


def climb_limit_cm(config: SuspensionConfig) -> float:
    """Largest obstacle the suspension can lift a wheel over, to 0.1 cm."""
    return round(max_wheel_lift(config, "reference") / 10.0, 1)


def effective_height_cm(obstacle: Obstacle) -> float:
    return obstacle.height_cm * KIND_FACTORS[obstacle.kind]


def traversal_outcome(obstacle: Obstacle, config: SuspensionConfig | None = None) -> TraversalOutcome:
    config = config or SuspensionConfig()
    height = effective_height_cm(obstacle)
    if height > climb_limit_cm(config):
        return TraversalOutcome("no", "significant_deviation", "unstable")
    if height > CLEAN_CLIMB_LIMIT_CM:
        return TraversalOutcome("partial", "light_deviation", "partial_distortion")
    nav = "light_deviation" if height >= LIGHT_DEVIATION_ONSET_CM else "none"
    return TraversalOutcome("yes", nav, "none")


def report_lines(config: SuspensionConfig) -> list[str]:
    formula = solve_pose(config, "formula")
    ref = solve_pose(config, "reference")
    return [
        f"rest_slider_mm,{config.rest_slider_mm:.2f}",
        f"link_angle_deg_formula,{formula.link_angle_deg:.2f}",
        f"slider_mm_formula,{formula.slider_mm:.2f}",
        f"max_lift_mm_formula,{formula.max_lift_mm:.2f}",
        f"link_angle_deg_reference,{ref.link_angle_deg:.2f}",
        f"slider_mm_reference,{ref.slider_mm:.2f}",
        f"max_lift_mm_reference,{ref.max_lift_mm:.2f}",
        f"climb_limit_cm,{climb_limit_cm(config):.1f}",
    ]
