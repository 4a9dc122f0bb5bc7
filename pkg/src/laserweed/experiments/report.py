"""CSV tables and SVG plots for the three studies.

Output is a pure function of the report: fixed float formatting, CRLF
line ends and minimal quoting per RFC 4180, no timestamps.
"""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .accuracy import AccuracyReport
from .stability import StabilityReport
from .stats import Histogram, LinearModel
from .sweep import SweepResult


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6f}"
    if v is None:
        return ""
    return str(v)


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


# -- SVG -----------------------------------------------------------------

_W, _H, _PAD = 480, 320, 48


def _scale(lo: float, hi: float, a: float, b: float):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _frame(title: str, xlabel: str, ylabel: str, xlo, xhi, ylo, yhi) -> list[str]:
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<text x="{_W / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
             f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD / 2}" y2="{_H - _PAD}" stroke="black"/>',
             f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_PAD}" y2="{_PAD / 2}" stroke="black"/>',
             f'<text x="{_W / 2:.1f}" y="{_H - 10}" text-anchor="middle">{xlabel}</text>',
             f'<text x="14" y="{_H / 2:.1f}" text-anchor="middle" '
             f'transform="rotate(-90 14 {_H / 2:.1f})">{ylabel}</text>']
    sx = _scale(xlo, xhi, _PAD, _W - _PAD / 2)
    sy = _scale(ylo, yhi, _H - _PAD, _PAD / 2)
    for k in range(5):
        xv = xlo + (xhi - xlo) * k / 4
        yv = ylo + (yhi - ylo) * k / 4
        parts.append(f'<text x="{sx(xv):.1f}" y="{_H - _PAD + 14}" text-anchor="middle">{xv:.4g}</text>')
        parts.append(f'<text x="{_PAD - 4}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.4g}</text>')
    return parts


def scatter_fit_svg(title: str, xlabel: str, ylabel: str, points, model: LinearModel | None) -> str:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    if model is not None:
        ylo = min(ylo, float(model(xlo)), float(model(xhi)))
        yhi = max(yhi, float(model(xlo)), float(model(xhi)))
    margin = 0.05 * (yhi - ylo) if yhi > ylo else 1.0
    ylo, yhi = ylo - margin, yhi + margin
    parts = _frame(title, xlabel, ylabel, xlo, xhi, ylo, yhi)
    sx = _scale(xlo, xhi, _PAD, _W - _PAD / 2)
    sy = _scale(ylo, yhi, _H - _PAD, _PAD / 2)
    for x, y in points:
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3.5" fill="#1f77b4"/>')
    if model is not None:
        parts.append(f'<line x1="{sx(xlo):.2f}" y1="{sy(float(model(xlo))):.2f}" '
                     f'x2="{sx(xhi):.2f}" y2="{sy(float(model(xhi))):.2f}" stroke="#d62728"/>')
        parts.append(f'<text x="{_W - _PAD / 2}" y="{_PAD / 2 + 12}" text-anchor="end">'
                     f'y = {model.slope:.4f}x + {model.intercept:.4f}, R2 = {model.r_squared:.4f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def histogram_svg(title: str, xlabel: str, hist: Histogram) -> str:
    if not hist.counts:
        parts = _frame(title, xlabel, "count", 0.0, 1.0, 0.0, 1.0)
        parts.append("</svg>")
        return "\n".join(parts) + "\n"
    xlo, xhi = hist.edges[0], hist.edges[-1]
    yhi = float(max(hist.counts))
    parts = _frame(title, xlabel, "count", xlo, xhi, 0.0, yhi)
    sx = _scale(xlo, xhi, _PAD, _W - _PAD / 2)
    sy = _scale(0.0, yhi, _H - _PAD, _PAD / 2)
    for k, c in enumerate(hist.counts):
        x0, x1 = sx(hist.edges[k]), sx(hist.edges[k + 1])
        parts.append(f'<rect x="{x0:.2f}" y="{sy(c):.2f}" width="{x1 - x0:.2f}" '
                     f'height="{sy(0.0) - sy(c):.2f}" fill="#2ca02c" stroke="white"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- per study -------------------------------------------------------------

SWEEP_FIELDS = ["speed_cm_s", "trial", "seed", "weeds", "detected", "detection_pct",
                "weeding_time_s_per_m", "row_distance_m", "row_time_s", "stop_time_s",
                "total_time_s", "false_targets", "crop_collisions"]

REPORTED_OPTIMUM_CM_S = 42.5


def sweep_tables(result: SweepResult) -> dict[str, str]:
    raw = csv_text(SWEEP_FIELDS, [[getattr(r, f) for f in SWEEP_FIELDS] for r in result.rows])
    m = result.model
    summary = []
    if m is not None:
        for name, lm in (("detection_pct", m.detection), ("weeding_time_s_per_m", m.weeding_time)):
            summary += [[f"{name}_slope", lm.slope], [f"{name}_intercept", lm.intercept],
                        [f"{name}_r_squared", lm.r_squared]]
        summary.append(["optimal_speed_cm_s", m.optimal_speed_cm_s])
    summary.append(["reported_optimal_speed_cm_s", REPORTED_OPTIMUM_CM_S])
    return {"raw.csv": raw, "summary.csv": csv_text(["metric", "value"], summary)}


def sweep_plots(result: SweepResult) -> dict[str, str]:
    m = result.model
    det = [(r.speed_cm_s, r.detection_pct) for r in result.rows]
    wt = [(r.speed_cm_s, r.weeding_time_s_per_m) for r in result.rows]
    return {
        "detection.svg": scatter_fit_svg("Weed detection vs speed", "speed (cm/s)", "detection (%)",
                                         det, m.detection if m else None),
        "weeding_time.svg": scatter_fit_svg("Weeding time vs speed", "speed (cm/s)", "time (s/m)",
                                            wt, m.weeding_time if m else None),
    }


ACCURACY_FIELDS = ["weed_index", "aim_x_mm", "aim_y_mm", "spot_x_mm", "spot_y_mm", "ex_mm", "ey_mm",
                   "e_mm", "truth_ex_mm", "truth_ey_mm", "hit"]


def accuracy_tables(report: AccuracyReport) -> dict[str, str]:
    raw = csv_text(ACCURACY_FIELDS, [[s.weed_index, s.aim_mm[0], s.aim_mm[1], s.spot_mm[0], s.spot_mm[1],
                                      s.ex_mm, s.ey_mm, s.e_mm, s.truth_ex_mm, s.truth_ey_mm, s.hit]
                                     for s in report.shots])
    summary = [["speed_cm_s", report.speed_cm_s], ["seed", report.seed], ["weeds", report.weeds],
               ["detected", report.detected], ["eliminated", report.eliminated],
               ["shots_measured", len(report.shots)], ["spots_missed", report.spots_missed],
               ["detection_rate", report.detection_rate], ["hit_rate", report.hit_rate]]
    for which, name in (("x", "abs_ex_mm"), ("y", "abs_ey_mm"), ("e", "e_mm")):
        mean, std = report.stats(which)
        summary += [[f"mean_{name}", mean], [f"std_{name}", std]]
    for which in ("x", "y", "e"):
        h = report.histogram(which)
        for k, c in enumerate(h.counts):
            summary.append([f"hist_{which}_{h.edges[k]:.1f}_{h.edges[k + 1]:.1f}", c])
    return {"raw.csv": raw, "summary.csv": csv_text(["metric", "value"], summary)}


def accuracy_plots(report: AccuracyReport) -> dict[str, str]:
    labels = {"x": "|ex| (mm)", "y": "|ey| (mm)", "e": "resultant e (mm)"}
    return {f"error_{w}.svg": histogram_svg(f"Positional error {labels[w]}", labels[w], report.histogram(w))
            for w in ("x", "y", "e")}


STABILITY_FIELDS = ["obstacle", "kind", "height_cm", "climb", "nav_effect", "image_effect",
                    "expected_climb", "expected_nav_effect", "expected_image_effect",
                    "max_deviation_deg", "distorted_frames", "stuck", "match"]


def stability_tables(report: StabilityReport) -> dict[str, str]:
    raw = csv_text(STABILITY_FIELDS, [[r.case.label, r.case.kind, r.case.height_cm, r.climb, r.nav_effect,
                                       r.image_effect, r.case.climb, r.case.nav_effect, r.case.image_effect,
                                       r.max_deviation_deg, r.distorted_frames, r.stuck, r.matches]
                                      for r in report.rows])
    summary = csv_text(["metric", "value"], [["obstacles", len(report.rows)], ["matches", report.matches]])
    return {"raw.csv": raw, "summary.csv": summary}


def stability_plots(report: StabilityReport) -> dict[str, str]:
    if not report.rows:
        return {}
    pts = [(r.case.height_cm, r.max_deviation_deg) for r in report.rows]
    return {"deviation.svg": scatter_fit_svg("Heading deviation after crossing", "obstacle height (cm)",
                                             "max deviation (deg)", pts, None)}


def export_report(report, path) -> list[Path]:
    """Write ``raw.csv``, ``summary.csv`` and ``plots/*.svg`` under directory ``path``."""
    out = Path(path)
    if isinstance(report, SweepResult):
        tables, plots = sweep_tables(report), sweep_plots(report)
    elif isinstance(report, AccuracyReport):
        tables, plots = accuracy_tables(report), accuracy_plots(report)
    elif isinstance(report, StabilityReport):
        tables, plots = stability_tables(report), stability_plots(report)
    else:
        raise TypeError(f"no exporter for {type(report).__name__}")
    written = [_write(out / name, text) for name, text in tables.items()]
    written += [_write(out / "plots" / name, text) for name, text in sorted(plots.items())]
    return written
