"""Least-squares fits, line intersection, and summary statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DegenerateFitError(ValueError):
    pass


@dataclass(frozen=True)
class LinearModel:
    slope: float
    intercept: float
    r_squared: float

    def __call__(self, x):
        return self.slope * np.asarray(x, dtype=float) + self.intercept


def linear_fit(points: Sequence[tuple[float, float]]) -> LinearModel:
    """Ordinary least squares line through ``points``.

    Computed from centred sums, which keeps the slope accurate when x is
    large relative to its spread. R^2 is 1 when y has no variance.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        raise DegenerateFitError("need at least two points")
    x, y = pts[:, 0], pts[:, 1]
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise DegenerateFitError("all x values are equal")
    slope = float(np.sum((x - xm) * (y - ym))) / sxx
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return LinearModel(slope, intercept, min(1.0, max(0.0, r2)))


def optimal_speed(model_a: LinearModel, model_b: LinearModel) -> float:
    """x where the two fitted lines cross."""
    ds = model_a.slope - model_b.slope
    if ds == 0.0:
        raise DegenerateFitError("parallel lines never cross")
    return (model_b.intercept - model_a.intercept) / ds


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation (two-pass); NaN for no data."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    m = float(v.mean())
    return m, float(math.sqrt(np.mean((v - m) ** 2)))


@dataclass(frozen=True)
class Histogram:
    edges: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)


def histogram(values: Sequence[float], bin_width: float = 0.5, start: float | None = None) -> Histogram:
    """Fixed-width bins ``[start + k*w, start + (k+1)*w)`` covering every value.

    ``start`` defaults to the largest multiple of ``bin_width`` not above
    the minimum, so bin edges sit on round numbers.
    """
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return Histogram(edges=(), counts=())
    lo = math.floor(v.min() / bin_width) * bin_width if start is None else start
    if v.min() < lo:
        raise ValueError("values below the first bin edge")
    idx = np.floor((v - lo) / bin_width).astype(np.int64)
    nbins = int(idx.max()) + 1
    counts = np.bincount(idx, minlength=nbins)
    edges = tuple(float(lo + k * bin_width) for k in range(nbins + 1))
    return Histogram(edges=edges, counts=tuple(int(c) for c in counts))
