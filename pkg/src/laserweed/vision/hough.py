"""(rho, theta) Hough line transform and conversion of peaks to crop rows.

Lines are ``rho = x cos(theta) + y sin(theta)`` in pixel coordinates
(x = column, y = row, y pointing down). A row's ``angle_deg`` is measured
from the image vertical, positive counter-clockwise as seen with the top
of the image pointing forward: a row leaning to the left going up the
image has a positive angle. ``distance_from_center_px`` is positive when
the row passes to the left of the reference point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DetectedRow:
    start: tuple[float, float]
    angle_deg: float
    distance_from_center_px: float
    inter_row_spacing_px: float | None
    votes: int = 0
    rho: float = 0.0
    theta_deg: float = 0.0


def _signed_line(rho: float, theta_deg: float) -> tuple[float, float]:
    """Re-express a line with theta in (-90, 90]."""
    if theta_deg > 90.0:
        return -rho, theta_deg - 180.0
    return rho, theta_deg


def accumulate(edges: np.ndarray, rho_res_px: float, theta_res_deg: float):
    ys, xs = np.nonzero(np.asarray(edges) > 0)
    h, w = edges.shape
    diag = float(math.ceil(math.hypot(w, h)))
    n_theta = int(round(180.0 / theta_res_deg))
    thetas = np.arange(n_theta) * theta_res_deg
    n_rho = int(math.ceil(2 * diag / rho_res_px)) + 1
    acc = np.zeros((n_rho, n_theta), dtype=np.int64)
    if len(xs):
        t = np.radians(thetas)
        rho = np.outer(xs, np.cos(t)) + np.outer(ys, np.sin(t))
        ri = np.floor((rho + diag) / rho_res_px + 0.5).astype(np.int64)
        flat = ri * n_theta + np.arange(n_theta)[None, :]
        acc = np.bincount(flat.ravel(), minlength=n_rho * n_theta).reshape(n_rho, n_theta)
    return acc, thetas, diag, xs, ys


def _refine(acc: np.ndarray, i: int, j: int) -> tuple[float, float]:
    """Sub-bin offsets of a peak from a parabola through its neighbours."""
    n_rho, n_theta = acc.shape

    def vertex(a, b, c):
        den = a - 2 * b + c
        return 0.0 if den >= 0 else max(-0.5, min(0.5, 0.5 * (a - c) / den))

    c = float(acc[i, j])
    di = vertex(float(acc[i - 1, j]), c, float(acc[i + 1, j])) if 0 < i < n_rho - 1 else 0.0
    # theta wraps at 180 degrees with rho negated (mirror index n_rho - 1 - i)
    mirror = n_rho - 1 - i
    prev = acc[i, j - 1] if j > 0 else acc[mirror, n_theta - 1]
    nxt = acc[i, j + 1] if j < n_theta - 1 else acc[mirror, 0]
    dj = vertex(float(prev), c, float(nxt))
    return di, dj


def _near(a, b, rho_win, theta_win) -> bool:
    (ra, ta), (rb, tb) = a, b
    dt = abs(ta - tb)
    if dt > 90.0:
        rb, dt = -rb, 180.0 - dt
    return dt <= theta_win and abs(ra - rb) <= rho_win


def hough_peaks(edges: np.ndarray, rho_res_px: float = 1.0, theta_res_deg: float = 1.0,
                votes_min: int = 50, nms_rho_px: float = 6.0, nms_theta_deg: float = 6.0,
                refine: bool = True):
    """Accumulator peaks as (rho, theta_deg, votes), strongest first."""
    acc, thetas, diag, _, _ = accumulate(edges, rho_res_px, theta_res_deg)
    cand = np.argwhere(acc >= votes_min)
    if not len(cand):
        return []
    votes = acc[cand[:, 0], cand[:, 1]]
    order = np.lexsort((cand[:, 1], cand[:, 0], -votes))
    peaks = []
    for idx in order:
        i, j = int(cand[idx, 0]), int(cand[idx, 1])
        rho = i * rho_res_px - diag
        theta = float(thetas[j])
        if any(_near((rho, theta), (p[0], p[1]), nms_rho_px, nms_theta_deg) for p in peaks):
            continue
        peaks.append((rho, theta, int(acc[i, j]), i, j))
    out = []
    for rho, theta, v, i, j in peaks:
        if refine:
            di, dj = _refine(acc, i, j)
            rho += di * rho_res_px
            theta += dj * theta_res_deg
        out.append((rho, theta, v))
    return out


def _merge(lines, rho_px: float, theta_deg: float, seed_min: int = 0):
    """Collapse near-parallel lines closer than ``rho_px`` (a strip's two borders).

    Lines are grouped greedily, strongest first, against each group's
    seed line; members with under half the seed's votes are discarded, and
    so are groups whose seed has fewer than ``seed_min`` votes.
    """
    signed = [(*_signed_line(r, t), v) for r, t, v in lines]
    groups: list[list[tuple[float, float, int]]] = []
    for line in signed:
        for g in groups:
            if abs(g[0][1] - line[1]) <= theta_deg and abs(g[0][0] - line[0]) <= rho_px:
                g.append(line)
                break
        else:
            groups.append([line])
    merged = []
    for g in groups:
        if g[0][2] < seed_min:
            continue
        # weak partial borders would drag the angle; keep the strong members
        top = max(v for _, _, v in g)
        g = [line for line in g if 2 * line[2] >= top]
        total = sum(v for _, _, v in g)
        rho = sum(r * v for r, _, v in g) / total
        theta = sum(t * v for _, t, v in g) / total
        merged.append((rho, theta, total))
    return merged


def hough_lines(edges: np.ndarray, rho_res_px: float = 1.0, theta_res_deg: float = 1.0,
                votes_min: int = 50, center: tuple[float, float] | None = None,
                merge_rho_px: float = 0.0, merge_theta_deg: float = 3.0,
                parallel_tol_deg: float = 3.0, nms_rho_px: float = 6.0,
                nms_theta_deg: float = 6.0, min_relative_votes: float = 0.0,
                partner_votes_min: int | None = None) -> list[DetectedRow]:
    """Detect straight rows in a binary edge map.

    ``center`` is the reference point for the signed distance (default: the
    image centre). Lines whose (merged) votes fall below
    ``min_relative_votes`` times the strongest line are dropped. Rows come
    back sorted by distance from left to right.
    With merging on, ``partner_votes_min`` lets weaker peaks join a line
    that already has ``votes_min`` votes, so a strip whose second border is
    short still gets centred between both borders.
    An empty list means nothing straight enough was seen.
    """
    h, w = edges.shape
    if center is None:
        center = ((w - 1) / 2.0, (h - 1) / 2.0)
    merging = merge_rho_px > 0
    floor = min(votes_min, partner_votes_min) if merging and partner_votes_min is not None else votes_min
    peaks = hough_peaks(edges, rho_res_px, theta_res_deg, floor, nms_rho_px, nms_theta_deg)
    if not any(v >= votes_min for _, _, v in peaks):
        return []
    lines = _merge(peaks, merge_rho_px, merge_theta_deg, seed_min=votes_min) if merging else \
        [(*_signed_line(r, t), v) for r, t, v in peaks]
    strongest = max(v for _, _, v in lines)
    lines = [line for line in lines if line[2] >= min_relative_votes * strongest]

    ys, xs = np.nonzero(np.asarray(edges) > 0)
    cx, cy = center
    rows = []
    for rho, theta, votes in lines:
        t = math.radians(theta)
        ct, st = math.cos(t), math.sin(t)
        offset = rho - (cx * ct + cy * st)
        angle = -theta
        if angle <= -90.0:
            angle += 180.0
        # supporting pixels: the one lowest in the image is where the row starts
        d = np.abs(xs * ct + ys * st - rho)
        support = np.nonzero(d <= max(rho_res_px, merge_rho_px / 2.0 + 1.0))[0]
        if len(support):
            k = support[np.argmax(ys[support])]
            start = (float(xs[k]), float(ys[k]))
        else:
            start = (rho * ct, rho * st)
        rows.append(dict(rho=rho, theta=theta, angle=angle, dist=-offset, votes=votes, start=start))

    rows.sort(key=lambda r: -r["dist"])
    out = []
    for i, r in enumerate(rows):
        gaps = [abs(r["dist"] - o["dist"]) for j, o in enumerate(rows)
                if j != i and abs(r["angle"] - o["angle"]) <= parallel_tol_deg]
        out.append(DetectedRow(start=r["start"], angle_deg=r["angle"],
                               distance_from_center_px=r["dist"],
                               inter_row_spacing_px=min(gaps) if gaps else None,
                               votes=int(r["votes"]), rho=r["rho"], theta_deg=r["theta"]))
    return out


def select_row(rows: list[DetectedRow], image_center=None) -> DetectedRow | None:
    """Row nearest the robot centre; ties go to the smaller absolute angle."""
    if not rows:
        return None
    return min(rows, key=lambda r: (abs(r.distance_from_center_px), abs(r.angle_deg)))
