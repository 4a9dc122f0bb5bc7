"""Row-following controller and the full weeding mission loop.

The robot aligns with the row nearest its centre, drives straight while the
row angle seen by the forward camera stays within the deviation threshold,
and corrects larger errors with a stop-turn-resume point turn. An empty
row detection ends the row: the robot clears the crops, turns 90 degrees
toward the next row, crosses one row spacing, and turns 90 degrees again.
Turn direction alternates from row to row.

Every control cycle lasts one camera frame period. The downward camera is
checked each cycle; new weeds stop the robot while the gantry targets,
ranges, and fires at each of them.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import actuation as act
from .kinematics import SuspensionConfig, TraversalOutcome, traversal_outcome
from .vision.hough import DetectedRow, select_row
from .vision.pipeline import VisionConfig, detect_rows, detect_weeds, sharpness
from .vision.render import (CameraModel, render_clean, finish, render_view, robot_to_world,
                            row_camera, weed_camera)
from .world import (ROBOT_LENGTH_M, TRACK_WIDTH_M, FieldScenario, Obstacle, RobotState, Weed,
                    advance, normalize_angle)

MODES = ("aligning", "following", "exiting", "turning", "done")
TRANSITIONS = {
    "aligning": {"following", "done"},
    "following": {"exiting", "done"},
    "exiting": {"turning", "done"},
    "turning": {"aligning", "done"},
    "done": set(),
}
DRIVE_EVENTS = ("drive", "turn", "advance")
ALIGN_CREEP_M = 0.1


class MissionError(RuntimeError):
    pass


@dataclass(frozen=True)
class NavConfig:
    deviation_threshold_deg: float = 5.0
    exit_distance_m: float = 1.5
    max_rows: int | None = None
    speed_cm_s: float = 42.5
    frame_rate_hz: float = 5.0
    turn_rate_deg_s: float = 30.0
    lateral_tolerance_mm: float = 5.0
    first_turn_left: bool = True
    stuck_timeout_s: float = 10.0
    dedup_radius_mm: float = 15.0
    match_margin_mm: float = 5.0
    range_noise_mm: float = 2.0
    fire: bool = True
    max_cycles: int = 100000

    def __post_init__(self):
        if self.deviation_threshold_deg <= 0:
            raise ValueError("deviation threshold must be positive")
        if self.speed_cm_s <= 0 or self.frame_rate_hz <= 0 or self.turn_rate_deg_s <= 0:
            raise ValueError("speed, frame rate, and turn rate must be positive")
        if self.exit_distance_m < 0:
            raise ValueError("exit distance must be non-negative")

    @property
    def frame_period_s(self) -> float:
        return 1.0 / self.frame_rate_hz


@dataclass
class NavState:
    mode: str = "aligning"
    target_row: DetectedRow | None = None
    rows_completed: int = 0
    heading_error_deg: float = 0.0
    turn_left: bool = True

    def transition(self, mode: str) -> None:
        if mode not in TRANSITIONS[self.mode]:
            raise MissionError(f"illegal transition {self.mode} -> {mode}")
        self.mode = mode


@dataclass(frozen=True)
class Command:
    """A motion primitive: ``straight`` (cm/s for one cycle), ``turn`` (deg, + left), ``advance`` (m)."""
    kind: str
    amount: float


@dataclass(frozen=True)
class AlignCommand:
    turn_deg: float
    lateral_mm: float

    @property
    def is_noop(self) -> bool:
        return self.turn_deg == 0.0 and self.lateral_mm == 0.0


def heading_error_deg(row: DetectedRow) -> float:
    """Robot heading minus row heading; a row leaning left in the image means the robot points right."""
    return -row.angle_deg


def align_to_row(row: DetectedRow, mm_per_px: float) -> AlignCommand:
    """Turn onto the row's heading, then shift sideways onto its centre line (+ = left)."""
    return AlignCommand(turn_deg=row.angle_deg, lateral_mm=row.distance_from_center_px * mm_per_px)


def follow_step(state: NavState, row: DetectedRow, config: NavConfig = NavConfig()) -> Command:
    if state.mode != "following":
        raise MissionError(f"follow_step called in mode {state.mode}")
    err = heading_error_deg(row)
    state.heading_error_deg = err
    state.target_row = row
    if abs(err) > config.deviation_threshold_deg:
        return Command("turn", -err)
    return Command("straight", config.speed_cm_s)


def end_of_row_maneuver(exit_distance_m: float, inter_row_spacing_m: float,
                        turn_left: bool) -> list[Command]:
    sign = 1.0 if turn_left else -1.0
    return [Command("advance", exit_distance_m), Command("turn", 90.0 * sign),
            Command("advance", inter_row_spacing_m), Command("turn", 90.0 * sign)]


def apply_command(robot: RobotState, cmd: Command, config: NavConfig = NavConfig(),
                  track_width_m: float = TRACK_WIDTH_M) -> tuple[RobotState, float]:
    """Execute one primitive exactly; returns the new pose and the time it took."""
    if cmd.kind == "straight":
        dt = config.frame_period_s
        return advance(robot, (cmd.amount, cmd.amount), dt, track_width_m), dt
    if cmd.kind == "advance":
        if cmd.amount == 0:
            return replace(robot, linear_speed_cm_s=0.0), 0.0
        v = math.copysign(config.speed_cm_s, cmd.amount)
        dt = abs(cmd.amount) * 100.0 / config.speed_cm_s
        moved = advance(robot, (v, v), dt, track_width_m)
        return replace(moved, linear_speed_cm_s=0.0), dt
    if cmd.kind == "turn":
        if cmd.amount == 0:
            return replace(robot, linear_speed_cm_s=0.0), 0.0
        dt = abs(cmd.amount) / config.turn_rate_deg_s
        omega = math.radians(cmd.amount) / dt
        vs = omega * track_width_m / 2.0 * 100.0
        turned = advance(robot, (-vs, vs), dt, track_width_m, max_speed_cm_s=math.inf)
        return replace(turned, linear_speed_cm_s=0.0), dt
    raise ValueError(f"unknown command {cmd.kind!r}")


def wheel_segments(robot: RobotState, track_width_m: float = TRACK_WIDTH_M,
                   length_m: float = ROBOT_LENGTH_M) -> list[tuple[np.ndarray, np.ndarray]]:
    """Left and right wheel tracks under the chassis as world-frame segments."""
    pts = robot_to_world(np.array([[-length_m / 2, track_width_m / 2], [length_m / 2, track_width_m / 2],
                                   [-length_m / 2, -track_width_m / 2], [length_m / 2, -track_width_m / 2]]),
                         robot)
    return [(pts[0], pts[1]), (pts[2], pts[3])]


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    t = np.clip(((p - a) @ ab) / float(ab @ ab), 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.hypot(*(p - closest).T)


def crop_collisions(robot: RobotState, world: FieldScenario) -> int:
    """Number of crop discs a wheel track currently overlaps."""
    crops = world.crop_positions()
    if not len(crops):
        return 0
    radii = np.concatenate([np.full(len(r.plant_positions()), r.plant_radius_m) for r in world.rows])
    hits = np.zeros(len(crops), dtype=bool)
    for a, b in wheel_segments(robot):
        hits |= _segment_distance(crops, a, b) < radii
    return int(hits.sum())


@dataclass(frozen=True)
class LogEvent:
    t: float
    event: str
    x: float
    y: float
    heading: float
    detail: str = ""
    duration: float = 0.0


@dataclass
class Target:
    position: tuple[float, float]
    weed_index: int | None
    t: float
    reachable: bool = True
    fired: bool = False
    hit: bool = False
    laser_mm: tuple[float, float] | None = None
    aim_mm: tuple[float, float] | None = None


@dataclass
class MissionLog:
    events: list[LogEvent] = field(default_factory=list)
    targets: list[Target] = field(default_factory=list)
    detected: set[int] = field(default_factory=set)
    weed_count: int = 0
    follow_distance_m: float = 0.0
    follow_time_s: float = 0.0
    stop_time_s: float = 0.0
    crop_collisions: int = 0
    aborted: str | None = None
    modes: list[str] = field(default_factory=list)
    heading_errors: list[float] = field(default_factory=list)
    sharpness: list[float] = field(default_factory=list)
    distortion: list[float] = field(default_factory=list)
    # (len(heading_errors), len(distortion)) at each obstacle crossing
    crossings: list[tuple[int, int]] = field(default_factory=list)

    def log(self, robot: RobotState, event: str, detail: str = "", duration: float = 0.0,
            t: float | None = None) -> None:
        self.events.append(LogEvent(t=robot.clock_s if t is None else t, event=event,
                                    x=robot.position[0], y=robot.position[1],
                                    heading=math.degrees(robot.heading_rad),
                                    detail=detail, duration=duration))

    @property
    def total_time_s(self) -> float:
        return self.events[-1].t if self.events else 0.0

    @property
    def driving_time_s(self) -> float:
        return sum(e.duration for e in self.events if e.event in DRIVE_EVENTS)

    @property
    def weed_time_s(self) -> float:
        return sum(e.duration for e in self.events if e.event not in DRIVE_EVENTS)

    @property
    def detection_rate(self) -> float:
        return len(self.detected) / self.weed_count if self.weed_count else 0.0

    @property
    def fired(self) -> list[Target]:
        return [t for t in self.targets if t.fired]

    @property
    def hit_rate(self) -> float:
        fired = [t for t in self.targets if t.fired and t.weed_index is not None]
        return sum(t.hit for t in fired) / len(fired) if fired else 0.0

    @property
    def weeding_time_s_per_m(self) -> float:
        """Row time (driving along rows plus weed stops) per metre of row covered."""
        if self.follow_distance_m <= 0:
            return math.nan
        return (self.follow_time_s + self.stop_time_s) / self.follow_distance_m

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["t", "event", "x", "y", "heading", "detail"])
        for e in self.events:
            detail = e.detail
            if e.duration:
                detail = f"duration_s={e.duration:.6f}" + (";" + detail if detail else "")
            writer.writerow([f"{e.t:.6f}", e.event, f"{e.x:.6f}", f"{e.y:.6f}",
                             f"{e.heading:.6f}", detail])
        return buf.getvalue()


@dataclass(frozen=True)
class Disturbances:
    """How an obstacle crossing shows up in the simulation, per traversal effect."""
    heading_kick_deg: dict[str, float] = field(default_factory=lambda: {
        "none": 0.0, "light_deviation": 8.0, "significant_deviation": 20.0})
    shake_blur_px: dict[str, float] = field(default_factory=lambda: {
        "none": 0.0, "partial_distortion": 8.0, "unstable": 30.0})
    shake_frames: int = 3


@dataclass
class MissionSetup:
    """Everything a mission needs besides the field itself."""
    nav: NavConfig = field(default_factory=NavConfig)
    gantry: act.GantryConfig = field(default_factory=act.GantryConfig)
    vision: VisionConfig = field(default_factory=VisionConfig)
    suspension: SuspensionConfig = field(default_factory=SuspensionConfig)
    weed_cam: CameraModel = field(default_factory=weed_camera)
    row_cam: CameraModel = field(default_factory=row_camera)
    disturbances: Disturbances = field(default_factory=Disturbances)
    start_offset_m: float = 0.5
    start_lateral_m: float = 0.0
    start_heading_deg: float = 0.0
    check_crops: bool = True
    measure_sharpness: bool = False
    on_fire: Callable | None = None
    on_frame: Callable | None = None


def start_pose(world: FieldScenario, setup: MissionSetup) -> RobotState:
    row = world.rows[0]
    return RobotState(position=(row.start[0] - setup.start_offset_m, row.start[1] + setup.start_lateral_m),
                      heading_rad=math.radians(setup.start_heading_deg))


def _row_center_px(cam: CameraModel) -> tuple[float, float]:
    uv = cam.robot_to_pixel(np.array([[0.0, 0.0]]))[0]
    return float(uv[0]), float(uv[1])


class _Mission:
    def __init__(self, world: FieldScenario, setup: MissionSetup, rng: np.random.Generator):
        self.world = world
        self.s = setup
        self.cfg = setup.nav
        self.rng = rng
        self.log = MissionLog(weed_count=len(world.weeds))
        self.nav = NavState(turn_left=self.cfg.first_turn_left)
        self.robot = start_pose(world, setup)
        self.gantry = act.home()
        self.center_px = _row_center_px(setup.row_cam)
        self.spacing_m = world.row_spacing_m
        self.max_rows = self.cfg.max_rows or len(world.rows)
        self.pending_obstacles = list(world.obstacles)
        self.shake_px = 0.0
        self.shake_left = 0
        self.blocked_by: Obstacle | None = None
        self.last_progress = (0.0, 0.0)  # (odometer, clock)
        self.weed_xy = world.weed_positions()
        self.weed_r = np.array([w.stem_radius_m for w in world.weeds])

    # -- bookkeeping -------------------------------------------------------
    def set_mode(self, mode: str) -> None:
        self.nav.transition(mode)
        self.log.modes.append(mode)
        self.log.log(self.robot, "mode", mode)

    def check_crops(self) -> None:
        if self.s.check_crops:
            n = crop_collisions(self.robot, self.world)
            if n:
                self.log.crop_collisions += n
                self.log.log(self.robot, "crop_contact", f"crops={n}")

    def execute(self, cmd: Command, event: str) -> float:
        """Run a primitive, checking crop clearance along the way."""
        if self.s.check_crops and cmd.kind in ("turn", "advance") and cmd.amount != 0:
            pieces = max(1, int(math.ceil(abs(cmd.amount) / (5.0 if cmd.kind == "turn" else 0.05))))
            part = Command(cmd.kind, cmd.amount / pieces)
            total = 0.0
            for _ in range(pieces):
                self.robot, dt = apply_command(self.robot, part, self.cfg)
                total += dt
                self.check_crops()
        else:
            self.robot, total = apply_command(self.robot, cmd, self.cfg)
            self.check_crops()
        self.log.log(self.robot, event, f"{cmd.kind}={cmd.amount:.6f}", duration=total)
        return total

    # -- perception ----------------------------------------------------------
    def see_rows(self) -> list:
        img = render_view(self.world, self.robot, self.s.row_cam, self.rng, speed_cm_s=0.0)
        return detect_rows(img, center=self.center_px, config=self.s.vision)

    def weed_frame(self, speed: float) -> np.ndarray:
        clean = render_clean(self.world, self.robot, self.s.weed_cam)
        cam = self.s.weed_cam
        shake = 0.0
        if self.shake_left > 0:
            shake = self.shake_px
            if self.blocked_by is None:
                # a blocked robot keeps rocking against the obstacle
                self.shake_left -= 1
        img = finish(clean, cam, speed, self.rng, extra_blur_px=shake)
        if self.s.measure_sharpness:
            self.log.sharpness.append(sharpness(img))
            distortion = 0.0
            if shake:
                steady = sharpness(finish(clean, cam, speed, None))
                shaken = sharpness(finish(clean, cam, speed, None, extra_blur_px=shake))
                distortion = 1.0 - shaken / steady if steady > 0 else 0.0
            self.log.distortion.append(distortion)
        if self.s.on_frame is not None:
            self.s.on_frame(self, img)
        return img

    def match_weed(self, p: tuple[float, float]) -> int | None:
        if not len(self.weed_xy):
            return None
        d = np.hypot(self.weed_xy[:, 0] - p[0], self.weed_xy[:, 1] - p[1])
        ok = d <= self.weed_r + self.cfg.match_margin_mm / 1000.0
        if not ok.any():
            return None
        return int(np.argmin(np.where(ok, d, np.inf)))

    # -- weeding ------------------------------------------------------------
    def scan_weeds(self, speed: float) -> list[Target]:
        img = self.weed_frame(speed)
        det = detect_weeds(img, None, self.s.vision)
        if not det.centroids:
            return []
        pts = robot_to_world(self.s.weed_cam.pixel_to_robot(det.centroids), self.robot)
        new = []
        radius = self.cfg.dedup_radius_mm / 1000.0
        known = [t.position for t in self.log.targets]
        for p in pts:
            p = (float(p[0]), float(p[1]))
            if any(math.hypot(p[0] - q[0], p[1] - q[1]) <= radius for q in known):
                continue
            idx = self.match_weed(p)
            tgt = Target(position=p, weed_index=idx, t=self.robot.clock_s)
            if idx is not None:
                self.log.detected.add(idx)
            new.append(tgt)
            known.append(p)
            self.log.targets.append(tgt)
        return new

    def weed_near_axis(self, laser_xy) -> tuple[Weed | None, int | None, float]:
        if not len(self.weed_xy):
            return None, None, math.inf
        d = np.hypot(self.weed_xy[:, 0] - laser_xy[0], self.weed_xy[:, 1] - laser_xy[1]) - self.weed_r
        i = int(np.argmin(d))
        dist_mm = float(np.hypot(*(self.weed_xy[i] - laser_xy))) * 1000.0
        return self.world.weeds[i], i, dist_mm

    def service(self, targets: list[Target]) -> None:
        """Stop, then move, range, and fire at each target, nearest first."""
        g = self.s.gantry
        self.log.log(self.robot, "stop", f"targets={len(targets)}")
        start_clock = self.gantry.clock_s
        t0 = self.robot.clock_s
        todo = list(targets)
        while todo:
            cur = self.gantry.commanded
            aims = [act.world_to_gantry(t.position, self.robot, g) for t in todo]
            k = min(range(len(todo)), key=lambda i: (aims[i][0] - cur[0]) ** 2 + (aims[i][1] - cur[1]) ** 2)
            tgt, aim = todo.pop(k), aims[k]
            tgt.aim_mm = aim
            before = self.gantry.clock_s
            try:
                self.gantry = act.move_to(self.gantry, (aim[0], aim[1], 0.0), g, self.rng)
            except act.OutOfRangeError as exc:
                tgt.reachable = False
                self.log.log(self.robot, "unreachable", str(exc), t=t0 + (before - start_clock))
                continue
            laser_xy = act.gantry_to_world(self.gantry.position, self.robot, g)
            weed, idx, dist = self.weed_near_axis(laser_xy)
            self.gantry, found = act.descend_to_weed(self.gantry, weed, g, self.cfg.range_noise_mm,
                                                     self.rng, dist)
            hit = False
            if self.cfg.fire:
                if found and weed is not None:
                    self.gantry, hit = act.fire(self.gantry, weed, self.robot, g)
                else:
                    self.gantry = replace(self.gantry, clock_s=self.gantry.clock_s + g.laser.exposure_s)
            else:
                # marking pass: the pointer dwells as long as a real exposure
                self.gantry = replace(self.gantry, clock_s=self.gantry.clock_s + g.laser.exposure_s)
            tgt.fired = True
            tgt.hit = hit
            tgt.laser_mm = (self.gantry.position[0], self.gantry.position[1])
            if self.s.on_fire is not None:
                self.s.on_fire(self, tgt, weed if tgt.weed_index is not None else None)
            self.gantry = act.move_to(self.gantry, (self.gantry.commanded[0], self.gantry.commanded[1], 0.0), g)
            took = self.gantry.clock_s - before
            self.log.log(self.robot, "fire" if self.cfg.fire else "mark",
                         f"weed={idx if tgt.weed_index is not None else -1};hit={int(hit)};"
                         f"aim_mm={aim[0]:.3f}/{aim[1]:.3f}",
                         duration=took, t=t0 + (self.gantry.clock_s - start_clock))
        spent = self.gantry.clock_s - start_clock
        self.robot = replace(self.robot, clock_s=t0 + spent)
        self.log.stop_time_s += spent
        self.log.log(self.robot, "resume")

    # -- obstacles ------------------------------------------------------------
    def obstacle_ahead(self, distance_m: float) -> Obstacle | None:
        """First obstacle under a wheel within ``distance_m`` of travel."""
        c, s = math.cos(self.robot.heading_rad), math.sin(self.robot.heading_rad)
        best, best_d = None, math.inf
        for ob in self.pending_obstacles:
            dx = ob.position[0] - self.robot.position[0]
            dy = ob.position[1] - self.robot.position[1]
            along = c * dx + s * dy - ROBOT_LENGTH_M / 2
            lateral = -s * dx + c * dy
            if 0 <= along <= distance_m and abs(abs(lateral) - TRACK_WIDTH_M / 2) <= 0.06 and along < best_d:
                best, best_d = ob, along
        return best

    def cross(self, ob: Obstacle) -> TraversalOutcome:
        out = traversal_outcome(ob, self.s.suspension)
        self.log.crossings.append((len(self.log.heading_errors), len(self.log.distortion)))
        self.log.log(self.robot, "obstacle", f"kind={ob.kind};height_cm={ob.height_cm:g};"
                                             f"climb={out.climb};nav={out.nav_effect};image={out.image_effect}")
        blur = self.s.disturbances.shake_blur_px[out.image_effect]
        if blur:
            self.shake_px, self.shake_left = blur, self.s.disturbances.shake_frames
        if out.climb == "no":
            self.blocked_by = ob
            return out
        self.pending_obstacles.remove(ob)
        kick = self.s.disturbances.heading_kick_deg[out.nav_effect]
        if kick:
            # the climbing wheel lags, yawing the robot toward that side
            c, s = math.cos(self.robot.heading_rad), math.sin(self.robot.heading_rad)
            lateral = -s * (ob.position[0] - self.robot.position[0]) + c * (ob.position[1] - self.robot.position[1])
            sign = 1.0 if lateral > 0 else -1.0
            self.robot = replace(self.robot, heading_rad=normalize_angle(
                self.robot.heading_rad + sign * math.radians(kick)))
        return out

    # -- main loop ------------------------------------------------------------
    def align(self) -> None:
        rows = self.see_rows()
        crept = 0.0
        # the exit leaves room to turn, so the new row may start beyond the camera's reach
        while not rows and crept < self.cfg.exit_distance_m:
            self.execute(Command("advance", ALIGN_CREEP_M), "advance")
            crept += ALIGN_CREEP_M
            rows = self.see_rows()
        row = select_row(rows)
        if row is None:
            raise MissionError("no crop row visible to align with")
        # a row seen from far off is short in the frame and gives a poor heading; close in to
        # the same standoff the mission starts from before measuring
        gap = float(self.s.row_cam.pixel_to_robot(row.start)[0, 0]) - self.s.start_offset_m
        if gap > 0.05:
            self.execute(Command("advance", gap), "advance")
            row = select_row(self.see_rows()) or row
        self.nav.target_row = row
        if row.inter_row_spacing_px is not None:
            self.spacing_m = row.inter_row_spacing_px * self.s.row_cam.mm_per_px / 1000.0
        cmd = align_to_row(row, self.s.row_cam.mm_per_px)
        self.log.log(self.robot, "align", f"turn_deg={cmd.turn_deg:.4f};lateral_mm={cmd.lateral_mm:.4f}")
        if cmd.turn_deg:
            self.execute(Command("turn", cmd.turn_deg), "turn")
        if abs(cmd.lateral_mm) > self.cfg.lateral_tolerance_mm:
            side = 1.0 if cmd.lateral_mm > 0 else -1.0
            self.execute(Command("turn", 90.0 * side), "turn")
            self.execute(Command("advance", abs(cmd.lateral_mm) / 1000.0), "advance")
            self.execute(Command("turn", -90.0 * side), "turn")
        self.set_mode("following")

    def follow(self) -> None:
        cfg = self.cfg
        speed = cfg.speed_cm_s
        if self.blocked_by is None:
            new = self.scan_weeds(speed)
            if new:
                self.service(new)
        else:
            # stalled: the camera keeps streaming but nothing is worth targeting
            self.weed_frame(0.0)
        rows = self.see_rows()
        if not rows:
            self.set_mode("exiting")
            return
        row = select_row(rows)
        if row.inter_row_spacing_px is not None:
            self.spacing_m = row.inter_row_spacing_px * self.s.row_cam.mm_per_px / 1000.0
        cmd = follow_step(self.nav, row, cfg)
        self.log.heading_errors.append(self.nav.heading_error_deg)
        if cmd.kind == "turn":
            self.log.log(self.robot, "correct", f"heading_error_deg={self.nav.heading_error_deg:.4f}")
            self.execute(cmd, "turn")
            return
        travel = cmd.amount / 100.0 * cfg.frame_period_s
        ob = self.blocked_by or self.obstacle_ahead(travel)
        if ob is not None and self.blocked_by is None:
            self.cross(ob)
        if self.blocked_by is not None:
            # wheels spin against the obstacle: time passes, the robot does not move
            self.robot = replace(self.robot, clock_s=self.robot.clock_s + cfg.frame_period_s,
                                 linear_speed_cm_s=0.0)
            self.log.log(self.robot, "drive", "blocked=1", duration=cfg.frame_period_s)
            self.log.follow_time_s += cfg.frame_period_s
        else:
            before = self.robot.odometer_m
            dt = self.execute(cmd, "drive")
            self.log.follow_distance_m += self.robot.odometer_m - before
            self.log.follow_time_s += dt
        if self.robot.odometer_m > self.last_progress[0] + 1e-9:
            self.last_progress = (self.robot.odometer_m, self.robot.clock_s)
        elif self.robot.clock_s - self.last_progress[1] >= cfg.stuck_timeout_s:
            ob = self.blocked_by
            reason = (f"stuck for {cfg.stuck_timeout_s:g} s at obstacle kind={ob.kind} "
                      f"height_cm={ob.height_cm:g}" if ob else f"stuck for {cfg.stuck_timeout_s:g} s")
            self.log.aborted = reason
            self.log.log(self.robot, "abort", reason)
            self.set_mode("done")

    def clear_row(self, distance_m: float) -> None:
        """Drive the exit distance frame by frame, still weeding the end of the row."""
        per_cycle = self.cfg.speed_cm_s / 100.0 * self.cfg.frame_period_s
        remaining = distance_m
        while remaining > 1e-12:
            new = self.scan_weeds(self.cfg.speed_cm_s)
            if new:
                self.service(new)
            step = min(per_cycle, remaining)
            before = self.robot.odometer_m
            dt = self.execute(Command("advance", step), "advance")
            self.log.follow_distance_m += self.robot.odometer_m - before
            self.log.follow_time_s += dt
            remaining -= step

    def exit_row(self) -> None:
        self.nav.rows_completed += 1
        last = self.nav.rows_completed >= self.max_rows
        steps = end_of_row_maneuver(self.cfg.exit_distance_m, self.spacing_m, self.nav.turn_left)
        self.clear_row(steps[0].amount)
        if last:
            self.set_mode("done")
            return
        self.set_mode("turning")
        for cmd in steps[1:]:
            self.execute(cmd, cmd.kind)
        self.nav.turn_left = not self.nav.turn_left
        self.set_mode("aligning")

    def run(self) -> MissionLog:
        self.log.modes.append(self.nav.mode)
        self.log.log(self.robot, "start", f"weeds={len(self.world.weeds)}")
        self.check_crops()
        cycles = 0
        while self.nav.mode != "done":
            cycles += 1
            if cycles > self.cfg.max_cycles:
                raise MissionError("mission exceeded the cycle budget")
            if self.nav.mode == "aligning":
                self.align()
            elif self.nav.mode == "following":
                self.follow()
            elif self.nav.mode == "exiting":
                self.exit_row()
        self.log.log(self.robot, "end", f"rows={self.nav.rows_completed};"
                                        f"detected={len(self.log.detected)};"
                                        f"eliminated={sum(w.eliminated for w in self.world.weeds)}")
        return self.log


def run_mission(world: FieldScenario, setup: MissionSetup | None = None, seed: int = 0) -> MissionLog:
    """Weed ``world`` in place and return the event log.

    The mission mutates ``world`` (weeds get eliminated); pass a copy to keep
    the original. A stuck robot ends the mission early with ``log.aborted``
    set to a diagnostic.
    """
    if not world.rows:
        raise MissionError("scenario has no crop rows")
    rng = np.random.Generator(np.random.PCG64(seed))
    return _Mission(world, setup or MissionSetup(), rng).run()


def replay_modes(log: MissionLog) -> bool:
    """True if the logged mode sequence only uses allowed transitions."""
    modes = log.modes
    return bool(modes) and modes[0] == "aligning" and all(b in TRANSITIONS[a] for a, b in zip(modes, modes[1:]))
