from __future__ import annotations

import numpy as np


def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    """Hexcone RGB to HSV with all three channels on a 0-255 scale.

    Hue degrees are mapped with ``h * 255 / 360`` and rounded half up; the
    hue of an achromatic pixel is 0.
    """
    r, g, b = (img[..., k].astype(np.float64) for k in range(3))
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    delta = mx - mn
    safe = np.where(delta > 0, delta, 1.0)

    hue = np.zeros_like(mx)
    is_r = (mx == r) & (delta > 0)
    is_g = (mx == g) & (delta > 0) & ~is_r
    is_b = (delta > 0) & ~is_r & ~is_g
    hue = np.where(is_r, np.mod((g - b) / safe, 6.0), hue)
    hue = np.where(is_g, (b - r) / safe + 2.0, hue)
    hue = np.where(is_b, (r - g) / safe + 4.0, hue)
    hue_deg = 60.0 * hue

    sat = np.where(mx > 0, delta / np.where(mx > 0, mx, 1.0), 0.0)
    out = np.empty(img.shape, dtype=np.uint8)
    out[..., 0] = np.clip(np.floor(hue_deg * 255.0 / 360.0 + 0.5), 0, 255)
    out[..., 1] = np.clip(np.floor(sat * 255.0 + 0.5), 0, 255)
    out[..., 2] = mx.astype(np.uint8)
    return out


def hsv_threshold(hsv: np.ndarray, lo, hi) -> np.ndarray:
    """255 where every channel lies within [lo, hi] inclusive, else 0."""
    inside = np.ones(hsv.shape[:2], dtype=bool)
    for k in range(hsv.shape[-1]):
        ch = hsv[..., k]
        inside &= (ch >= int(lo[k])) & (ch <= int(hi[k]))
    return np.where(inside, 255, 0).astype(np.uint8)


def color_band_mask(img: np.ndarray, color, tolerance: int) -> np.ndarray:
    """Boolean mask of RGB pixels within ``tolerance`` of ``color`` on every channel."""
    diff = np.abs(img.astype(np.int16) - np.asarray(color, dtype=np.int16))
    return np.all(diff <= tolerance, axis=-1)
