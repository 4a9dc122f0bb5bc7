"""Laser positional error measured through a mirrored spot camera."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .. import actuation as act
from ..navigation import MissionSetup, run_mission
from ..vision.pipeline import Calibration, detect_laser_spot, gantry_to_pixel, mirror_transform, pixel_to_gantry
from ..vision.render import draw_spot, finish, render_clean
from ..world import ScenarioSpec, generate_scenario
from .stats import Histogram, histogram, mean_std

HIST_BIN_MM = 0.5


@dataclass(frozen=True)
class ShotError:
    """One fired target: where vision put the weed and where the spot camera saw the laser."""
    weed_index: int
    aim_mm: tuple[float, float]
    spot_mm: tuple[float, float]
    ex_mm: float
    ey_mm: float
    e_mm: float
    truth_ex_mm: float
    truth_ey_mm: float
    hit: bool


@dataclass
class AccuracyReport:
    speed_cm_s: float
    seed: int
    weeds: int
    detected: int
    eliminated: int
    shots: list[ShotError] = field(default_factory=list)
    spots_missed: int = 0

    @property
    def detection_rate(self) -> float:
        return self.detected / self.weeds if self.weeds else 0.0

    @property
    def hit_rate(self) -> float:
        return self.eliminated / self.detected if self.detected else 0.0

    def stats(self, which: str) -> tuple[float, float]:
        """Mean and std of |ex|, |ey| or e (``which`` in x, y, e)."""
        return mean_std(self.values(which))

    def values(self, which: str) -> list[float]:
        if which == "x":
            return [abs(s.ex_mm) for s in self.shots]
        if which == "y":
            return [abs(s.ey_mm) for s in self.shots]
        if which == "e":
            return [s.e_mm for s in self.shots]
        raise ValueError(f"unknown error component {which!r}")

    def histogram(self, which: str) -> Histogram:
        return histogram(self.values(which), HIST_BIN_MM, start=0.0)


def perfect_setup(setup: MissionSetup) -> MissionSetup:
    """No repeatability error, continuous steps, no ranging or pixel noise."""
    gantry = replace(setup.gantry.noiseless(), quantized=False)
    return replace(setup, gantry=gantry, nav=replace(setup.nav, range_noise_mm=0.0),
                   weed_cam=replace(setup.weed_cam, pixel_noise_sigma=0.0))


class SpotCamera:
    """Secondary camera facing the weed camera: same footprint, image flipped top to bottom."""

    def __init__(self, camera, calibration: Calibration, spot_radius_mm: float,
                 rng: np.random.Generator | None):
        self.camera = camera
        self.calibration = calibration
        self.radius_px = spot_radius_mm / camera.mm_per_px
        self.rng = rng

    def frames(self, world, robot, laser_mm) -> tuple[np.ndarray, np.ndarray]:
        """(laser off, laser on) frames with the laser at gantry ``laser_mm``."""
        mirrored = render_clean(world, robot, self.camera)[::-1]
        u, v = gantry_to_pixel(laser_mm, self.calibration)
        lit = mirrored.copy()
        h = mirrored.shape[0]
        draw_spot(lit, mirror_transform((u, v), h), self.radius_px)
        off = finish(mirrored, self.camera, 0.0, self.rng)
        on = finish(lit, self.camera, 0.0, self.rng)
        return off, on

    def locate(self, off: np.ndarray, on: np.ndarray) -> tuple[float, float] | None:
        """Spot centre in gantry mm, or None when no spot is visible."""
        px = detect_laser_spot(on, reference=off)
        if px is None:
            return None
        x, y, _ = pixel_to_gantry(mirror_transform(px, on.shape[0]), self.calibration)
        return x, y


def run_accuracy_study(spec: ScenarioSpec = ScenarioSpec(), speed_cm_s: float = 42.5, seed: int = 0,
                       setup: MissionSetup | None = None, perfect: bool = False,
                       spot_radius_mm: float = 1.0) -> AccuracyReport:
    """Weed a fresh field and measure every laser shot with the spot camera.

    The error of a shot is the spot centre minus the weed centre that the
    vision pipeline reported (the aim point), both in gantry mm. The error
    against the true weed centre is recorded alongside.
    """
    setup = setup or MissionSetup()
    if perfect:
        setup = perfect_setup(setup)
    setup = replace(setup, nav=replace(setup.nav, speed_cm_s=float(speed_cm_s), fire=True))
    world = generate_scenario(spec, seed)
    cal = Calibration(mm_per_px=setup.weed_cam.mm_per_px)
    spot_rng = np.random.Generator(np.random.PCG64([seed, 1]))
    cam = SpotCamera(setup.weed_cam, cal, spot_radius_mm, spot_rng)
    shots: list[ShotError] = []
    missed = [0]

    def on_fire(mission, target, weed):
        if weed is None or target.aim_mm is None:
            return
        off, on = cam.frames(mission.world, mission.robot, mission.gantry.position[:2])
        spot = cam.locate(off, on)
        if spot is None:
            missed[0] += 1
            return
        ax, ay = target.aim_mm
        ex, ey = spot[0] - ax, spot[1] - ay
        tx, ty = act.world_to_gantry(weed.position, mission.robot, mission.s.gantry)
        shots.append(ShotError(weed_index=int(target.weed_index), aim_mm=(ax, ay), spot_mm=spot,
                               ex_mm=ex, ey_mm=ey, e_mm=math.hypot(ex, ey),
                               truth_ex_mm=spot[0] - tx, truth_ey_mm=spot[1] - ty, hit=target.hit))

    log = run_mission(world, replace(setup, on_fire=on_fire), seed=seed)
    return AccuracyReport(speed_cm_s=float(speed_cm_s), seed=seed, weeds=log.weed_count,
                          detected=len(log.detected),
                          eliminated=sum(w.eliminated for w in world.weeds),
                          shots=shots, spots_missed=missed[0])
