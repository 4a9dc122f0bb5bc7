"""Synthetic top-down camera views of the field.

A camera is an affine map between image pixels and the robot frame
(x forward, y left, metres). Pixel (u, v) has its centre at
``origin + (u + 0.5) * scale * u_axis + (v + 0.5) * scale * v_axis``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from statistics import NormalDist

import numpy as np

from ..world import FieldScenario, RobotState
from .filters import box_blur

SOIL_RGB = (120, 72, 48)
CROP_RGB = (45, 140, 35)
WEED_RGB = (40, 160, 60)
BURNT_RGB = (40, 30, 25)
LASER_RGB = (0, 70, 255)


@dataclass(frozen=True)
class CameraModel:
    origin_m: tuple[float, float]
    u_axis: tuple[float, float]
    v_axis: tuple[float, float]
    footprint_m: tuple[float, float]
    resolution_px: tuple[int, int]
    pixel_noise_sigma: float = 2.0
    motion_blur_px_per_cmps: float = 0.45

    def __post_init__(self):
        if min(self.footprint_m) <= 0 or min(self.resolution_px) <= 0:
            raise ValueError("camera footprint and resolution must be positive")

    @property
    def mm_per_px(self) -> float:
        return 1000.0 * self.footprint_m[0] / self.resolution_px[0]

    @property
    def scale_m(self) -> float:
        return self.footprint_m[0] / self.resolution_px[0]

    def robot_to_pixel(self, pts: np.ndarray) -> np.ndarray:
        """Robot-frame points (N, 2) in metres to continuous pixel coords (u, v)."""
        d = np.asarray(pts, dtype=float).reshape(-1, 2) - np.asarray(self.origin_m)
        s = self.scale_m
        u = (d @ np.asarray(self.u_axis)) / s - 0.5
        v = (d @ np.asarray(self.v_axis)) / s - 0.5
        return np.column_stack([u, v])

    def pixel_to_robot(self, uv) -> np.ndarray:
        uv = np.asarray(uv, dtype=float).reshape(-1, 2)
        s = self.scale_m
        return (np.asarray(self.origin_m)
                + np.outer((uv[:, 0] + 0.5) * s, self.u_axis)
                + np.outer((uv[:, 1] + 0.5) * s, self.v_axis))

    def travel_axis(self) -> int:
        """Image axis (0 = rows/v, 1 = columns/u) most aligned with forward motion."""
        return 1 if abs(self.u_axis[0]) >= abs(self.v_axis[0]) else 0


def weed_camera(**kw) -> CameraModel:
    """Downward camera under the gantry: 400 x 300 mm at 640 x 480, x forward in the image."""
    params = dict(origin_m=(-0.50, 0.15), u_axis=(1.0, 0.0), v_axis=(0.0, -1.0),
                  footprint_m=(0.40, 0.30), resolution_px=(640, 480))
    params.update(kw)
    return CameraModel(**params)


def row_camera(**kw) -> CameraModel:
    """Forward view ahead of the robot rendered top-down, forward pointing up the image."""
    params = dict(origin_m=(1.30, 0.60), u_axis=(0.0, -1.0), v_axis=(-1.0, 0.0),
                  footprint_m=(1.20, 1.00), resolution_px=(240, 200),
                  pixel_noise_sigma=2.0, motion_blur_px_per_cmps=0.0)
    params.update(kw)
    return CameraModel(**params)


def world_to_robot(points: np.ndarray, robot: RobotState) -> np.ndarray:
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    d = p - np.asarray(robot.position)
    c, s = math.cos(robot.heading_rad), math.sin(robot.heading_rad)
    return np.column_stack([c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1]])


def robot_to_world(points: np.ndarray, robot: RobotState) -> np.ndarray:
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    c, s = math.cos(robot.heading_rad), math.sin(robot.heading_rad)
    return np.column_stack([robot.position[0] + c * p[:, 0] - s * p[:, 1],
                            robot.position[1] + s * p[:, 0] + c * p[:, 1]])


def draw_disc(canvas: np.ndarray, center_uv, radius_px: float, color) -> None:
    """Fill pixels whose centres lie within ``radius_px`` of ``center_uv``."""
    h, w = canvas.shape[:2]
    cu, cv = center_uv
    u0, u1 = max(0, int(math.floor(cu - radius_px))), min(w - 1, int(math.ceil(cu + radius_px)))
    v0, v1 = max(0, int(math.floor(cv - radius_px))), min(h - 1, int(math.ceil(cv + radius_px)))
    if u0 > u1 or v0 > v1:
        return
    uu, vv = np.meshgrid(np.arange(u0, u1 + 1), np.arange(v0, v1 + 1))
    inside = (uu - cu) ** 2 + (vv - cv) ** 2 <= radius_px * radius_px
    canvas[v0:v1 + 1, u0:u1 + 1][inside] = color


@lru_cache(maxsize=1)
def _normal_table() -> np.ndarray:
    nd = NormalDist()
    return np.array([nd.inv_cdf((k + 0.5) / 65536.0) for k in range(65536)], dtype=np.float32)


def pixel_noise(rng: np.random.Generator, shape, sigma: float) -> np.ndarray:
    """Gaussian noise by inverse-CDF lookup over 65536 equiprobable levels.

    Much cheaper than exact normal draws; tails are cut at about 4.3 sigma,
    which is immaterial once the result is rounded to 8 bits.
    """
    idx = rng.integers(0, 65536, size=shape, dtype=np.uint16)
    out = _normal_table()[idx]
    out *= np.float32(sigma)
    return out


def motion_blur_length(speed_cm_s: float, camera: CameraModel) -> float:
    return camera.motion_blur_px_per_cmps * abs(speed_cm_s)


def _visible(uv: np.ndarray, r_px: np.ndarray, w: int, h: int) -> np.ndarray:
    return ((uv[:, 0] + r_px >= -1) & (uv[:, 0] - r_px <= w) &
            (uv[:, 1] + r_px >= -1) & (uv[:, 1] - r_px <= h))


def render_clean(world: FieldScenario, robot: RobotState, camera: CameraModel) -> np.ndarray:
    """Noise- and blur-free float32 RGB view."""
    w, h = camera.resolution_px
    canvas = np.empty((h, w, 3), dtype=np.float32)
    canvas[:] = SOIL_RGB
    scale = camera.scale_m
    crops = world.crop_positions()
    if len(crops):
        radii = np.concatenate([np.full(len(r.plant_positions()), r.plant_radius_m) for r in world.rows])
        uv = camera.robot_to_pixel(world_to_robot(crops, robot))
        rpx = radii / scale
        for k in np.nonzero(_visible(uv, rpx, w, h))[0]:
            draw_disc(canvas, uv[k], rpx[k], CROP_RGB)
    if world.weeds:
        pos = world.weed_positions()
        uv = camera.robot_to_pixel(world_to_robot(pos, robot))
        rpx = np.array([wd.stem_radius_m for wd in world.weeds]) / scale
        for k in np.nonzero(_visible(uv, rpx, w, h))[0]:
            color = BURNT_RGB if world.weeds[k].eliminated else WEED_RGB
            draw_disc(canvas, uv[k], rpx[k], color)
    return canvas


def finish(canvas: np.ndarray, camera: CameraModel, speed_cm_s: float,
           rng: np.random.Generator | None, extra_blur_px: float = 0.0) -> np.ndarray:
    """Apply motion blur along the travel axis, additive noise, and 8-bit quantisation.

    ``extra_blur_px`` lengthens the blur beyond what the speed causes, e.g.
    for a platform shaking on an obstacle.
    """
    length = motion_blur_length(speed_cm_s, camera) + extra_blur_px
    canvas = canvas.astype(np.float32)  # always a private copy
    if length > 1.0:
        axis = camera.travel_axis()
        # lines that are constant along the travel axis are unchanged by the blur
        lines = np.moveaxis(canvas, axis, 1)
        varying = np.nonzero((lines != lines[:, :1]).any(axis=(1, 2)))[0]
        if len(varying):
            lines[varying] = box_blur(lines[varying], length, axis=1)
    if rng is not None and camera.pixel_noise_sigma > 0:
        canvas += pixel_noise(rng, canvas.shape, camera.pixel_noise_sigma)
    canvas += np.float32(0.5)
    np.floor(canvas, out=canvas)
    np.clip(canvas, 0, 255, out=canvas)
    return canvas.astype(np.uint8)


def render_view(world: FieldScenario, robot: RobotState, camera: CameraModel,
                rng: np.random.Generator | None = None, speed_cm_s: float | None = None) -> np.ndarray:
    """RGB frame of ``world`` seen from ``camera`` on ``robot``.

    ``speed_cm_s`` defaults to the robot's current linear speed; ``rng``
    drives the pixel noise (``None`` disables noise).
    """
    speed = robot.linear_speed_cm_s if speed_cm_s is None else speed_cm_s
    return finish(render_clean(world, robot, camera), camera, speed, rng)


def spot_profile(t: np.ndarray, radius_px: float) -> np.ndarray:
    """1-D box of width 2*radius convolved with a unit tent.

    Sampling this at integer offsets reproduces linear functions, so the
    intensity-weighted centroid of a rendered spot equals its true centre.
    """
    def tent_cdf(z):
        z = np.clip(z, -1.0, 1.0)
        return np.where(z <= 0, 0.5 * (1 + z) ** 2, 1.0 - 0.5 * (1 - z) ** 2)
    return tent_cdf(t + radius_px) - tent_cdf(t - radius_px)


def draw_spot(canvas: np.ndarray, center_uv, radius_px: float, color=LASER_RGB) -> None:
    """Alpha-composite a laser spot with a separable box-tent profile."""
    h, w = canvas.shape[:2]
    cu, cv = center_uv
    reach = radius_px + 1.0
    u0, u1 = max(0, int(math.floor(cu - reach))), min(w - 1, int(math.ceil(cu + reach)))
    v0, v1 = max(0, int(math.floor(cv - reach))), min(h - 1, int(math.ceil(cv + reach)))
    if u0 > u1 or v0 > v1:
        return
    au = spot_profile(np.arange(u0, u1 + 1) - cu, radius_px)
    av = spot_profile(np.arange(v0, v1 + 1) - cv, radius_px)
    alpha = np.minimum(np.outer(av, au), 1.0)[..., None]
    region = canvas[v0:v1 + 1, u0:u1 + 1]
    canvas[v0:v1 + 1, u0:u1 + 1] = (1 - alpha) * region + alpha * np.asarray(color, dtype=float)
