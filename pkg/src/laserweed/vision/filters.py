"""Blur, gradient, Canny, and binary morphology kernels.

Border policy: convolutions mirror the image without repeating the edge
pixel (``dcba|abcd|dcba`` becomes ``cb|abcd|cb``). Dilation treats the
outside as background and erosion treats it as foreground, which keeps
closing extensive.
"""
from __future__ import annotations

import math

import numpy as np

from .contours import label


def gaussian_kernel(sigma: float, size: int) -> np.ndarray:
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be a positive odd integer")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def convolve1d(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    """Correlate ``img`` with a 1-D kernel along ``axis`` using reflect borders.

    Float32 input is filtered in float32, anything else in float64.
    """
    half = len(kernel) // 2
    if half == 0:
        return img * kernel[0]
    n = img.shape[axis]
    if n == 1:
        return img * kernel.sum()
    pad = [(0, 0)] * img.ndim
    pad[axis] = (half, half)
    if half >= n:
        padded = np.pad(img, pad, mode="symmetric")
    else:
        padded = np.pad(img, pad, mode="reflect")
    dtype = np.float32 if img.dtype == np.float32 else np.float64
    out = np.zeros(img.shape, dtype=dtype)
    for i, w in enumerate(kernel):
        if w == 0:
            continue
        sl = [slice(None)] * img.ndim
        sl[axis] = slice(i, i + n)
        out += dtype(w) * padded[tuple(sl)]
    return out


def _to_uint8(arr: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(arr + 0.5), 0, 255).astype(np.uint8)


def _smooth_lines(f: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    """``convolve1d`` for a normalised kernel, skipping lines that are constant along ``axis``.

    A constant line is a fixed point of a kernel that sums to one, so only
    the varying lines are filtered; sparse masks get much cheaper.
    """
    lines = np.moveaxis(f, axis, 0)
    flat = lines.reshape(lines.shape[0], -1)
    varying = np.nonzero((flat != flat[:1]).any(axis=0))[0]
    if len(varying) == flat.shape[1]:
        return convolve1d(f, kernel, axis)
    out = flat.copy()
    if len(varying):
        out[:, varying] = convolve1d(flat[:, varying], kernel, axis=0)
    return np.moveaxis(out.reshape(lines.shape), 0, axis)


def gaussian_blur(img: np.ndarray, sigma: float = 1.4, kernel_size: int = 5) -> np.ndarray:
    """Separable Gaussian blur; 8-bit images are filtered in float32 and rounded back."""
    k = gaussian_kernel(sigma, kernel_size)
    f = img.astype(np.float32 if img.dtype == np.uint8 else np.float64)
    out = _smooth_lines(_smooth_lines(f, k, axis=0), k, axis=1)
    return _to_uint8(out) if img.dtype == np.uint8 else out


def sobel(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Raw 3x3 Sobel derivatives (x = columns, y = rows) with reflect borders."""
    h, w = gray.shape
    if h < 2 or w < 2:
        f = gray.astype(np.float64)
        smooth = np.array([1.0, 2.0, 1.0])
        diff = np.array([-1.0, 0.0, 1.0])
        return (convolve1d(convolve1d(f, smooth, axis=0), diff, axis=1),
                convolve1d(convolve1d(f, diff, axis=0), smooth, axis=1))
    p = np.pad(gray.astype(np.int32), 1, mode="reflect")
    rows = p[:-2] + 2 * p[1:-1] + p[2:]          # vertical smoothing, shape (h, w + 2)
    gx = rows[:, 2:] - rows[:, :-2]
    cols = p[:, :-2] + 2 * p[:, 1:-1] + p[:, 2:]  # horizontal smoothing, shape (h + 2, w)
    gy = cols[2:] - cols[:-2]
    return gx.astype(np.float64), gy.astype(np.float64)


_TAN_22_5 = math.tan(math.radians(22.5))
_TAN_67_5 = math.tan(math.radians(67.5))


def gradient_sector(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Gradient direction modulo 180 degrees, quantised to 0/45/90/135 (codes 0-3).

    Sector k covers directions within 22.5 degrees of k * 45, with y pointing
    down the image; decided by slope comparisons instead of arctan.
    """
    ax, ay = np.abs(gx), np.abs(gy)
    sector = np.where(gx * gy > 0, 1, 3).astype(np.int8)
    sector[ay < _TAN_22_5 * ax] = 0
    sector[ay >= _TAN_67_5 * ax] = 2
    sector[(ax == 0) & (ay == 0)] = 0
    return sector


def non_max_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Thin gradient ridges to one pixel.

    The gradient direction is quantised to 0/45/90/135 degrees. A pixel
    survives if it is strictly greater than its neighbour on the negative
    side and at least equal to the one on the positive side, so plateaus of
    width two keep exactly one pixel.
    """
    h, w = mag.shape
    sector = gradient_sector(gx, gy)
    padded = np.pad(mag, 1, mode="constant")
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros((h, w), dtype=bool)
    for s, (dr, dc) in offsets.items():
        pos = padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
        neg = padded[1 - dr:1 - dr + h, 1 - dc:1 - dc + w]
        sel = sector == s
        keep |= sel & (mag > neg) & (mag >= pos)
    return np.where(keep & (mag > 0), mag, mag.dtype.type(0))


def canny(gray: np.ndarray, low_thresh: float = 50.0, high_thresh: float = 150.0) -> np.ndarray:
    """Binary (0/255) Canny edge map of an 8-bit grayscale image.

    Thresholds apply to the raw Sobel gradient magnitude. Weak pixels are
    kept when 8-connected to a strong pixel.
    """
    if low_thresh > high_thresh:
        raise ValueError("low threshold above high threshold")
    gx, gy = sobel(gray)
    gx, gy = gx.astype(np.float32), gy.astype(np.float32)
    # Sobel sums of 8-bit pixels are exact in float32
    mag = np.hypot(gx, gy)
    thin = non_max_suppression(mag, gx, gy)
    weak = thin >= low_thresh
    strong = thin >= high_thresh
    if not strong.any():
        return np.zeros(gray.shape, dtype=np.uint8)
    labels, n = label(weak, connectivity=8)
    good = np.zeros(n + 1, dtype=bool)
    good[np.unique(labels[strong])] = True
    good[0] = False
    return np.where(good[labels], 255, 0).astype(np.uint8)


def rect_kernel(height: int, width: int | None = None) -> np.ndarray:
    return np.ones((height, height if width is None else width), dtype=bool)


def _morph(mask: np.ndarray, kernel: np.ndarray, dilate_op: bool) -> np.ndarray:
    kernel = np.asarray(kernel, dtype=bool)
    kh, kw = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError("structuring element must have odd dimensions")
    ch, cw = kh // 2, kw // 2
    h, w = mask.shape
    padded = np.pad(mask, ((ch, ch), (cw, cw)), mode="constant", constant_values=not dilate_op)
    out = np.zeros((h, w), dtype=bool) if dilate_op else np.ones((h, w), dtype=bool)
    for i in range(kh):
        for j in range(kw):
            if not kernel[i, j]:
                continue
            if dilate_op:
                # reflected element for dilation
                out |= padded[kh - 1 - i:kh - 1 - i + h, kw - 1 - j:kw - 1 - j + w]
            else:
                out &= padded[i:i + h, j:j + w]
    return out


def dilate(binary: np.ndarray, kernel: np.ndarray | None = None) -> np.ndarray:
    kernel = rect_kernel(3) if kernel is None else kernel
    return np.where(_morph(np.asarray(binary) > 0, kernel, True), 255, 0).astype(np.uint8)


def erode(binary: np.ndarray, kernel: np.ndarray | None = None) -> np.ndarray:
    kernel = rect_kernel(3) if kernel is None else kernel
    return np.where(_morph(np.asarray(binary) > 0, kernel, False), 255, 0).astype(np.uint8)


def closing(binary: np.ndarray, kernel: np.ndarray | None = None) -> np.ndarray:
    return erode(dilate(binary, kernel), kernel)


def box_kernel(length: float) -> np.ndarray:
    """Centred box of fractional ``length`` taps whose end taps carry the fraction."""
    if length <= 1.0:
        return np.array([1.0])
    half = (length - 1.0) / 2.0
    k = int(math.ceil(half - 1e-12))
    idx = np.abs(np.arange(-k, k + 1, dtype=np.float64))
    w = np.clip(half - idx + 1.0, 0.0, 1.0)
    return w / w.sum()


def box_blur(img: np.ndarray, length: float, axis: int) -> np.ndarray:
    """Correlate with ``box_kernel(length)`` along ``axis`` in O(1) per pixel.

    Same kernel and border policy as ``convolve1d``, computed from a
    running sum so long kernels stay cheap. Float32 input stays float32.
    """
    kernel = box_kernel(length)
    half = len(kernel) // 2
    n = img.shape[axis]
    if half == 0 or n == 1 or half >= n:
        return convolve1d(img.astype(np.float64), kernel, axis)
    dtype = np.float32 if img.dtype == np.float32 else np.float64
    pad = [(0, 0)] * img.ndim
    pad[axis] = (half, half)
    padded = np.pad(img.astype(dtype, copy=False), pad, mode="reflect")
    csum = np.cumsum(padded, axis=axis, dtype=dtype)

    def sl(start, stop):
        idx = [slice(None)] * img.ndim
        idx[axis] = slice(start, stop)
        return tuple(idx)

    # taps 1 .. 2*half-1 carry the full weight, the two end taps the fraction
    inner = csum[sl(2 * half - 1, 2 * half - 1 + n)] - csum[sl(0, n)]
    out = inner + (kernel[0] / kernel[half]) * (padded[sl(0, n)] + padded[sl(2 * half, 2 * half + n)])
    out *= dtype(kernel[half])
    return out
