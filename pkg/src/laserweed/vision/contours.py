"""Connected-component labelling and contour measurement.

Foreground uses 8-connectivity, background 4-connectivity. A contour's area
and centroid are taken over its *filled* region: the component plus every
pixel it encloses. The perimeter is the length of the outer boundary chain
traced with Moore-neighbour tracing, counting axis steps as 1 and diagonal
steps as sqrt(2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# clockwise from west, as (drow, dcol)
_MOORE = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Contour:
    boundary: tuple[tuple[int, int], ...]
    area_px2: float
    perimeter_px: float
    centroid: tuple[float, float]
    label: int = 0
    touches_border: bool = False
    bbox: tuple[int, int, int, int] = (0, 0, 0, 0)
    cls: str = "unclassified"

    def with_class(self, cls: str) -> "Contour":
        return replace(self, cls=cls)


def _row_runs(mask: np.ndarray):
    h, w = mask.shape
    padded = np.zeros((h, w + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    d = np.diff(padded, axis=1)
    sr, sc = np.nonzero(d == 1)
    _, ec = np.nonzero(d == -1)
    return sr, sc, ec


def label(mask: np.ndarray, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Label connected components of a boolean mask.

    Horizontal runs are the graph nodes; runs on consecutive rows that touch
    (sharing a column, or a corner under 8-connectivity) are joined, and
    components are found by min-label propagation with pointer jumping.
    Labels are 1..n in raster order of each component's first pixel.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    rows, starts, ends = _row_runs(mask)
    n_runs = len(rows)
    if n_runs == 0:
        return labels, 0
    reach = 1 if connectivity == 8 else 0
    stride = w + 2
    start_key = rows * stride + starts
    end_key = rows * stride + ends
    # for each run, the block of runs on the row above that it touches
    child = np.nonzero(rows > 0)[0]
    above = (rows[child] - 1) * stride
    lo = np.searchsorted(end_key, above + starts[child] - reach, side="right")
    hi = np.searchsorted(start_key, above + ends[child] + reach, side="left")
    count = np.maximum(hi - lo, 0)
    a = np.repeat(child, count)
    b = np.repeat(lo - np.cumsum(count) + count, count) + np.arange(count.sum())

    parent = np.arange(n_runs)
    if len(a):
        while True:
            m = np.minimum(parent[a], parent[b])
            nxt = parent.copy()
            np.minimum.at(nxt, a, m)
            np.minimum.at(nxt, b, m)
            nxt = nxt[nxt]
            while True:
                jumped = nxt[nxt]
                if np.array_equal(jumped, nxt):
                    break
                nxt = jumped
            if np.array_equal(nxt, parent):
                break
            parent = nxt
    _, ids = np.unique(parent, return_inverse=True)
    ids = ids.astype(np.int32) + 1
    lengths = ends - starts
    flat_start = rows * w + starts
    offsets = np.repeat(flat_start - np.cumsum(lengths) + lengths, lengths) + np.arange(lengths.sum())
    labels.ravel()[offsets] = np.repeat(ids, lengths)
    return labels, int(ids.max())


def fill_holes(component: np.ndarray) -> np.ndarray:
    """Component plus all pixels not 4-reachable from outside without crossing it."""
    h, w = component.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = component
    bg_labels, _ = label(~padded, connectivity=4)
    outside = bg_labels == bg_labels[0, 0]
    return ~outside[1:-1, 1:-1]


def trace_boundary(component: np.ndarray) -> list[tuple[int, int]]:
    """Outer boundary of a single 8-connected component, clockwise, as (row, col)."""
    rr, cc = np.nonzero(component)
    if len(rr) == 0:
        return []
    h, w = component.shape
    start = (int(rr[0]), int(cc[0]))

    def fg(r, c):
        return 0 <= r < h and 0 <= c < w and component[r, c]

    boundary = [start]
    cur = start
    back = 0  # west of the first raster pixel is background
    first_move = None
    while True:
        nxt = None
        for k in range(1, 9):
            d = (back + k) % 8
            r, c = cur[0] + _MOORE[d][0], cur[1] + _MOORE[d][1]
            if fg(r, c):
                nxt = (r, c)
                prev = (back + k - 1) % 8
                pr, pc = cur[0] + _MOORE[prev][0], cur[1] + _MOORE[prev][1]
                break
        if nxt is None:
            return boundary  # isolated pixel
        move = (cur, nxt)
        if first_move is None:
            first_move = move
        elif move == first_move:
            boundary.pop()
            return boundary
        # direction from nxt towards the last background pixel examined
        back = _MOORE.index((pr - nxt[0], pc - nxt[1]))
        boundary.append(nxt)
        cur = nxt


def chain_length(boundary: list[tuple[int, int]]) -> float:
    if len(boundary) < 2:
        return 0.0
    total = 0.0
    pts = boundary + [boundary[0]]
    for (r0, c0), (r1, c1) in zip(pts[:-1], pts[1:]):
        total += _SQRT2 if (r0 != r1 and c0 != c1) else 1.0
    return total


def find_contours(binary: np.ndarray) -> list[Contour]:
    """Outer contours of every 8-connected foreground component, in raster order."""
    mask = np.asarray(binary) > 0
    labels, n = label(mask, connectivity=8)
    if n == 0:
        return []
    h, w = mask.shape
    rr, cc = np.nonzero(labels)
    lab = labels[rr, cc]
    order = np.argsort(lab, kind="stable")
    lab_sorted = lab[order]
    splits = np.searchsorted(lab_sorted, np.arange(1, n + 2))
    out = []
    for k in range(1, n + 1):
        idx = order[splits[k - 1]:splits[k]]
        r, c = rr[idx], cc[idx]
        r0, r1, c0, c1 = int(r.min()), int(r.max()), int(c.min()), int(c.max())
        sub = labels[r0:r1 + 1, c0:c1 + 1] == k
        filled = fill_holes(sub)
        fr, fc = np.nonzero(filled)
        m00 = len(fr)
        # integer moments in image coordinates, one rounding in the division
        centroid = (int(fc.sum() + c0 * m00) / m00, int(fr.sum() + r0 * m00) / m00)
        boundary = [(p[0] + r0, p[1] + c0) for p in trace_boundary(sub)]
        out.append(Contour(boundary=tuple(boundary), area_px2=float(m00),
                           perimeter_px=chain_length(boundary), centroid=centroid,
                           label=k, touches_border=(r0 == 0 or c0 == 0 or r1 == h - 1 or c1 == w - 1),
                           bbox=(c0, r0, c1 - c0 + 1, r1 - r0 + 1)))
    return out


@dataclass(frozen=True)
class ClassifierThresholds:
    noise_frac: float = 0.02
    crop_frac: float = 0.6

    def __post_init__(self):
        if not 0 < self.noise_frac < self.crop_frac < 1:
            raise ValueError("need 0 < noise_frac < crop_frac < 1")


def classify_contours(contours: list[Contour],
                      thresholds: ClassifierThresholds = ClassifierThresholds()) -> list[Contour]:
    """Label contours noise/weed/crop relative to the largest area and perimeter present."""
    if not contours:
        return []
    max_area = max(c.area_px2 for c in contours)
    max_perim = max(c.perimeter_px for c in contours)
    out = []
    for c in contours:
        if c.area_px2 < thresholds.noise_frac * max_area and c.perimeter_px < thresholds.noise_frac * max_perim:
            cls = "noise"
        elif c.area_px2 > thresholds.crop_frac * max_area and c.perimeter_px > thresholds.crop_frac * max_perim:
            cls = "crop"
        elif c.area_px2 >= max_area and c.perimeter_px >= max_perim:
            cls = "crop"
        else:
            cls = "weed"
        out.append(c.with_class(cls))
    return out
