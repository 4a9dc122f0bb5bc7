"""Obstacle crossings: climbing, path deviation, and image distortion."""
from __future__ import annotations

from dataclasses import dataclass, replace

from ..kinematics import traversal_outcome
from ..navigation import MissionSetup, run_mission
from ..world import TRACK_WIDTH_M, Obstacle, ScenarioSpec, generate_scenario


@dataclass(frozen=True)
class ObstacleCase:
    label: str
    kind: str
    height_cm: float
    climb: str
    nav_effect: str
    image_effect: str


def _case(label, kind, h, climb, nav, image):
    return ObstacleCase(label, kind, float(h), climb, nav, image)


# field trial outcomes for each obstacle
FIELD_TRIALS = (
    _case("Small Stones", "rock", 5, "yes", "none", "none"),
    _case("Small Stones", "rock", 7, "yes", "none", "none"),
    _case("Small Stones", "rock", 8, "yes", "none", "none"),
    _case("Medium Rocks", "rock", 10, "yes", "light_deviation", "none"),
    _case("Medium Rocks", "rock", 12, "partial", "light_deviation", "partial_distortion"),
    _case("Large Rock", "rock", 13, "partial", "light_deviation", "partial_distortion"),
    _case("Large Rock", "rock", 14, "no", "significant_deviation", "unstable"),
    _case("Large Rock", "rock", 15, "no", "significant_deviation", "unstable"),
    _case("Agriculture Waste", "organic", 5, "yes", "none", "none"),
    _case("Agriculture Waste", "organic", 10, "yes", "none", "none"),
    _case("Agriculture Waste", "organic", 15, "partial", "light_deviation", "partial_distortion"),
    _case("Field Incline", "incline", 5, "yes", "none", "none"),
    _case("Field Incline", "incline", 10, "partial", "light_deviation", "partial_distortion"),
    _case("Field Incline", "incline", 15, "no", "significant_deviation", "unstable"),
)


@dataclass(frozen=True)
class StabilityConfig:
    row_length_m: float = 2.5
    obstacle_along_m: float = 1.0
    speed_cm_s: float = 42.5
    deviation_deg: float = 2.0
    distortion_min: float = 0.1
    seed: int = 0


@dataclass(frozen=True)
class StabilityRow:
    case: ObstacleCase
    climb: str
    nav_effect: str
    image_effect: str
    max_deviation_deg: float
    distorted_frames: int
    stuck: bool

    @property
    def matches(self) -> bool:
        return (self.climb, self.nav_effect, self.image_effect) == (
            self.case.climb, self.case.nav_effect, self.case.image_effect)


@dataclass(frozen=True)
class StabilityReport:
    rows: list[StabilityRow]

    @property
    def matches(self) -> int:
        return sum(r.matches for r in self.rows)


def cross_obstacle(case: ObstacleCase, config: StabilityConfig = StabilityConfig(),
                   setup: MissionSetup | None = None) -> StabilityRow:
    """Drive one weed-free row with ``case`` under the left wheel track and observe the effects.

    Navigation: stuck means significant deviation; otherwise any heading
    error above ``deviation_deg`` after the crossing counts as a light
    deviation. Image: frames whose sharpness drops by more than
    ``distortion_min`` are distorted; distortion that outlasts the crossing
    (the robot never gets past) is unstable.
    """
    setup = setup or MissionSetup()
    spec = ScenarioSpec(row_count=1, row_length_m=config.row_length_m, weed_density_per_m2=0.0)
    world = generate_scenario(spec, config.seed)
    row = world.rows[0]
    ob = Obstacle(position=(row.start[0] + config.obstacle_along_m, row.start[1] + TRACK_WIDTH_M / 2),
                  height_cm=case.height_cm, kind=case.kind)
    world.obstacles.append(ob)
    nav = replace(setup.nav, speed_cm_s=config.speed_cm_s, max_rows=1)
    log = run_mission(world, replace(setup, nav=nav, measure_sharpness=True), seed=config.seed)

    stuck = log.aborted is not None
    if log.crossings:
        err_start, frame_start = log.crossings[0]
    else:
        err_start, frame_start = len(log.heading_errors), len(log.distortion)
    after = log.heading_errors[err_start:]
    max_dev = max((abs(e) for e in after), default=0.0)
    frames = log.distortion[frame_start:]
    distorted = sum(d > config.distortion_min for d in frames)

    if stuck:
        nav_effect = "significant_deviation"
    elif max_dev > config.deviation_deg:
        nav_effect = "light_deviation"
    else:
        nav_effect = "none"
    if distorted == 0:
        image = "none"
    elif stuck or (frames and frames[-1] > config.distortion_min):
        image = "unstable"
    else:
        image = "partial_distortion"
    # the suspension model says whether the wheel clears it cleanly or with hindrance
    climb = "no" if stuck else traversal_outcome(ob, setup.suspension).climb
    return StabilityRow(case=case, climb=climb, nav_effect=nav_effect, image_effect=image,
                        max_deviation_deg=max_dev, distorted_frames=distorted, stuck=stuck)


def run_stability_study(config: StabilityConfig = StabilityConfig(), obstacles=FIELD_TRIALS,
                        setup: MissionSetup | None = None) -> StabilityReport:
    return StabilityReport(rows=[cross_obstacle(c, config, setup) for c in obstacles])
