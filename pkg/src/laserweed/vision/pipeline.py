"""Weed detection, row detection, and laser-spot measurement pipelines."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .color import color_band_mask, hsv_threshold, rgb_to_hsv
from .contours import ClassifierThresholds, Contour, classify_contours, find_contours, label
from .filters import canny, closing, gaussian_blur, rect_kernel
from .hough import DetectedRow, hough_lines
from .image import crop, to_gray
from .render import LASER_RGB

# Green band on a 0-255 hue scale: hue 35-85 in 0-180 units, i.e. 70-170 degrees.
GREEN_LO = (50, 60, 40)
GREEN_HI = (120, 255, 255)


@dataclass(frozen=True)
class VisionConfig:
    hsv_lo: tuple[int, int, int] = GREEN_LO
    hsv_hi: tuple[int, int, int] = GREEN_HI
    blur_sigma: float = 1.4
    blur_kernel: int = 5
    canny_low: float = 50.0
    canny_high: float = 150.0
    close_kernel: int = 3
    thresholds: ClassifierThresholds = field(default_factory=ClassifierThresholds)
    drop_border_contours: bool = True
    # row detection
    rho_res_px: float = 1.0
    theta_res_deg: float = 1.0
    row_votes_min: int = 60
    row_min_area_px: int = 40
    row_bridge_gap_px: float = 80.0
    row_bridge_deg: float = 40.0
    row_merge_px: float = 25.0
    row_merge_deg: float = 6.0
    row_relative_votes: float = 0.5
    row_partner_votes_min: int = 30
    # laser spot
    spot_tolerance: int = 12


@dataclass(frozen=True)
class WeedDetections:
    centroids: list[tuple[float, float]]
    contours: list[Contour]

    @property
    def count(self) -> int:
        return len(self.centroids)


_MASK_TABLES: dict = {}


def _mask_table(lo, hi) -> np.ndarray:
    """Boolean answer of the HSV band test for every 24-bit colour, built once per band."""
    key = (tuple(lo), tuple(hi))
    if key not in _MASK_TABLES:
        table = np.empty(1 << 24, dtype=bool)
        rg = np.arange(1 << 16)
        chunk = np.empty((1 << 16, 256, 3), dtype=np.uint8)
        chunk[..., 0] = (rg >> 8)[:, None]
        chunk[..., 1] = (rg & 255)[:, None]
        chunk[..., 2] = np.arange(256)[None, :]
        step = 1 << 12
        for i in range(0, 1 << 16, step):
            part = hsv_threshold(rgb_to_hsv(chunk[i:i + step]), lo, hi)
            table[i * 256:(i + step) * 256] = part.ravel() > 0
        _MASK_TABLES[key] = table
    return _MASK_TABLES[key]


def green_mask(img: np.ndarray, config: VisionConfig = VisionConfig()) -> np.ndarray:
    """``hsv_threshold(rgb_to_hsv(img))`` through a per-colour lookup table."""
    table = _mask_table(config.hsv_lo, config.hsv_hi)
    code = (img[..., 0].astype(np.int32) << 16) | (img[..., 1].astype(np.int32) << 8) | img[..., 2]
    return np.where(table[code], 255, 0).astype(np.uint8)


def weed_stages(img: np.ndarray, rect=None, config: VisionConfig = VisionConfig()) -> dict[str, np.ndarray]:
    """Intermediate images of the weed pipeline, keyed by stage name."""
    cropped = crop(img, rect)
    mask = green_mask(cropped, config)
    blurred = gaussian_blur(mask, config.blur_sigma, config.blur_kernel)
    edges = canny(blurred, config.canny_low, config.canny_high)
    closed = closing(edges, rect_kernel(config.close_kernel))
    return {"crop": cropped, "mask": mask, "blur": blurred, "canny": edges, "closed": closed}


def detect_weeds(img: np.ndarray, rect=None, config: VisionConfig = VisionConfig()) -> WeedDetections:
    """Centroids (full-image px) of contours classified as weeds.

    ``rect`` is the laser working area as (x, y, w, h); ``None`` uses the
    whole frame. Contours cut by the crop boundary are partial objects: an
    open edge arc traced on both sides has an inflated perimeter and no
    meaningful centroid. They are kept out of classification and returned
    unclassified.
    """
    stages = weed_stages(img, rect, config)
    found = find_contours(stages["closed"])
    if config.drop_border_contours:
        inner = classify_contours([c for c in found if not c.touches_border], config.thresholds)
        by_label = {c.label: c for c in inner}
        contours = [by_label.get(c.label, c) for c in found]
    else:
        contours = classify_contours(found, config.thresholds)
    ox, oy = (0, 0) if rect is None else (rect[0], rect[1])
    cents = [(c.centroid[0] + ox, c.centroid[1] + oy) for c in contours if c.cls == "weed"]
    return WeedDetections(centroids=cents, contours=contours)


def fill_capsule(mask: np.ndarray, a, b, radius: float) -> None:
    """Set pixels whose centres lie within ``radius`` of segment ``a``-``b`` (x, y order)."""
    h, w = mask.shape
    x0, x1 = max(0, int(np.floor(min(a[0], b[0]) - radius))), min(w - 1, int(np.ceil(max(a[0], b[0]) + radius)))
    y0, y1 = max(0, int(np.floor(min(a[1], b[1]) - radius))), min(h - 1, int(np.ceil(max(a[1], b[1]) + radius)))
    if x0 > x1 or y0 > y1:
        return
    yy, xx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    dx, dy = b[0] - a[0], b[1] - a[1]
    den = dx * dx + dy * dy
    t = np.zeros(xx.shape) if den == 0 else np.clip(((xx - a[0]) * dx + (yy - a[1]) * dy) / den, 0.0, 1.0)
    d2 = (xx - a[0] - t * dx) ** 2 + (yy - a[1] - t * dy) ** 2
    mask[y0:y1 + 1, x0:x1 + 1] |= d2 <= radius * radius


def bridge_plants(labels: np.ndarray, keep: np.ndarray, max_gap_px: float,
                  max_angle_deg: float) -> np.ndarray:
    """Join each kept plant to its nearest neighbour further up the image.

    Neighbours must lie within ``max_gap_px`` and ``max_angle_deg`` of the
    image vertical. The bridge is a capsule as wide as the narrower plant,
    so a row of separate plants becomes one strip with straight sides at
    any row angle.
    """
    ids = np.nonzero(keep)[0]
    ids = ids[ids > 0]
    out = keep[labels]
    if len(ids) < 2:
        return out
    ys, xs = np.nonzero(out)
    lab = labels[ys, xs]
    area = np.bincount(lab, minlength=len(keep)).astype(float)
    cx = np.bincount(lab, weights=xs, minlength=len(keep))[ids] / area[ids]
    cy = np.bincount(lab, weights=ys, minlength=len(keep))[ids] / area[ids]
    radius = np.sqrt(area[ids] / np.pi)
    tan_max = np.tan(np.radians(max_angle_deg))
    for i in range(len(ids)):
        dx, dy = cx - cx[i], cy[i] - cy  # dy > 0: further up the image
        dist = np.hypot(dx, dy)
        ok = (dy > 0) & (np.abs(dx) <= tan_max * dy) & (dist <= max_gap_px)
        if ok.any():
            j = int(np.argmin(np.where(ok, dist, np.inf)))
            fill_capsule(out, (cx[i], cy[i]), (cx[j], cy[j]), min(radius[i], radius[j]))
    return out


def row_stages(img: np.ndarray, config: VisionConfig = VisionConfig()) -> dict[str, np.ndarray]:
    mask = green_mask(img, config)
    labels, n = label(mask > 0)
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    big = sizes >= config.row_min_area_px
    big[0] = False
    plants = np.where(big[labels], 255, 0).astype(np.uint8)
    strip = bridge_plants(labels, big, config.row_bridge_gap_px, config.row_bridge_deg)
    strips = np.where(strip, 255, 0).astype(np.uint8)
    edges = canny(strips, config.canny_low, config.canny_high)
    return {"mask": mask, "plants": plants, "strips": strips, "canny": edges}


def detect_rows(img: np.ndarray, center=None, config: VisionConfig = VisionConfig()) -> list[DetectedRow]:
    """Crop rows in a forward frame; an empty list signals the end of the row."""
    edges = row_stages(img, config)["canny"]
    return hough_lines(edges, config.rho_res_px, config.theta_res_deg, config.row_votes_min,
                       center=center, merge_rho_px=config.row_merge_px,
                       merge_theta_deg=config.row_merge_deg,
                       min_relative_votes=config.row_relative_votes,
                       partner_votes_min=config.row_partner_votes_min)


def detect_laser_spot(img: np.ndarray, reference: np.ndarray | None = None,
                      color=LASER_RGB, tolerance: int = 12) -> tuple[float, float] | None:
    """Centre (x, y) in px of the laser-coloured blob, or None.

    Pixels within ``tolerance`` of ``color`` on every channel form the
    blob; the largest blob wins. Given a laser-off ``reference`` frame the
    centre is refined by weighting each pixel near the blob with its
    estimated spot coverage, which recovers sub-pixel positions.
    """
    mask = color_band_mask(img, color, tolerance)
    if not mask.any():
        return None
    labels, n = label(mask)
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    sizes[0] = 0
    blob = labels == int(np.argmax(sizes))
    ys, xs = np.nonzero(blob)
    if reference is None:
        return float(xs.mean()), float(ys.mean())
    h, w = mask.shape
    pad = 3
    y0, y1 = max(0, ys.min() - pad), min(h, ys.max() + pad + 1)
    x0, x1 = max(0, xs.min() - pad), min(w, xs.max() + pad + 1)
    img_w = img[y0:y1, x0:x1].astype(np.float64)
    ref_w = reference[y0:y1, x0:x1].astype(np.float64)
    span = np.asarray(color, dtype=np.float64) - ref_w
    denom = np.sum(span * span, axis=-1)
    alpha = np.sum((img_w - ref_w) * span, axis=-1) / np.where(denom > 0, denom, 1.0)
    alpha = np.clip(np.where(denom > 0, alpha, 0.0), 0.0, 1.0)
    total = alpha.sum()
    gy, gx = np.mgrid[y0:y1, x0:x1]
    return float((alpha * gx).sum() / total), float((alpha * gy).sum() / total)


def mirror_transform(point_px, height: int) -> tuple[float, float]:
    """Vertical mirror: (x, y) -> (x, height - 1 - y)."""
    x, y = point_px
    return x, height - 1 - y


@dataclass(frozen=True)
class Calibration:
    """Pixel-to-gantry map: gantry mm = (px + 0.5) * mm_per_px + offset."""
    mm_per_px: float = 0.625
    offset_mm: tuple[float, float] = (0.0, 0.0)


def pixel_to_gantry(point_px, calibration: Calibration = Calibration(),
                    z_mm: float = 0.0) -> tuple[float, float, float]:
    x, y = point_px
    s = calibration.mm_per_px
    return ((x + 0.5) * s + calibration.offset_mm[0],
            (y + 0.5) * s + calibration.offset_mm[1], z_mm)


def gantry_to_pixel(point_mm, calibration: Calibration = Calibration()) -> tuple[float, float]:
    s = calibration.mm_per_px
    return ((point_mm[0] - calibration.offset_mm[0]) / s - 0.5,
            (point_mm[1] - calibration.offset_mm[1]) / s - 0.5)


def sharpness(img: np.ndarray) -> float:
    """Mean squared horizontal-plus-vertical gray difference; drops as blur grows."""
    g = to_gray(img).astype(np.float64) if img.ndim == 3 else img.astype(np.float64)
    return float(np.mean(np.diff(g, axis=0) ** 2) + np.mean(np.diff(g, axis=1) ** 2))
