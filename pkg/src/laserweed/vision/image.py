"""8-bit raster images as numpy arrays, plus binary PPM (P6) / PGM (P5) I/O.

An image is a C-contiguous ``uint8`` array of shape (height, width) for
grayscale/binary data or (height, width, 3) for RGB.
"""
from __future__ import annotations

import os

import numpy as np


def as_image(arr) -> np.ndarray:
    img = np.ascontiguousarray(arr)
    if img.dtype != np.uint8:
        raise TypeError(f"expected uint8 pixels, got {img.dtype}")
    if img.ndim == 3 and img.shape[2] not in (1, 3):
        raise ValueError(f"unsupported channel count {img.shape[2]}")
    if img.ndim not in (2, 3):
        raise ValueError(f"expected 2-D or 3-D array, got shape {img.shape}")
    return img


def channels(img: np.ndarray) -> int:
    return 1 if img.ndim == 2 else img.shape[2]


def to_bytes(img: np.ndarray) -> bytes:
    return as_image(img).tobytes()


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        if data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif data[pos:pos + 1].isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def decode_pnm(data: bytes) -> np.ndarray:
    magic, pos = _read_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"not a binary PGM/PPM file (magic {magic!r})")
    fields = []
    for _ in range(3):
        tok, pos = _read_token(data, pos)
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError("only 8-bit images (maxval 255) are supported")
    pos += 1  # single whitespace byte after maxval
    nch = 3 if magic == b"P6" else 1
    size = width * height * nch
    raw = data[pos:pos + size]
    if len(raw) != size:
        raise ValueError("truncated image data")
    arr = np.frombuffer(raw, dtype=np.uint8)
    shape = (height, width, 3) if nch == 3 else (height, width)
    return arr.reshape(shape).copy()


def encode_pnm(img: np.ndarray) -> bytes:
    img = as_image(img)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    magic = b"P6" if img.ndim == 3 else b"P5"
    h, w = img.shape[:2]
    return magic + b"\n%d %d\n255\n" % (w, h) + img.tobytes()


def read_pnm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_pnm(fh.read())


def write_pnm(path: str | os.PathLike, img: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pnm(img))


def crop(img: np.ndarray, rect: tuple[int, int, int, int] | None) -> np.ndarray:
    """Crop to ``(x, y, width, height)``; ``None`` keeps the whole image."""
    if rect is None:
        return img
    x, y, w, h = rect
    if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > img.shape[1] or y + h > img.shape[0]:
        raise ValueError(f"crop rectangle {rect} outside image {img.shape[1]}x{img.shape[0]}")
    return img[y:y + h, x:x + w]


def to_gray(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        return img
    rgb = img.astype(np.float64)
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.floor(gray + 0.5).astype(np.uint8)
