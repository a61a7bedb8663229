"""Deterministic SVG plot emitters: value-by-time, two series by time, and
histogram with an asymptotic (normal-approximation) confidence interval.

Output is plain SVG 1.1 with fixed-precision coordinates, so identical inputs
give identical bytes (golden-file friendly).  The data viewport is the
rectangle from (MARGIN_LEFT, MARGIN_TOP) to (WIDTH - MARGIN_RIGHT,
HEIGHT - MARGIN_BOTTOM); data maps into it by the usual affine transform with
y inverted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm

from ..errors import BadPoint, EmptySeries, InsufficientSamples

WIDTH = 640.0
HEIGHT = 400.0
MARGIN_LEFT = 50.0
MARGIN_RIGHT = 15.0
MARGIN_TOP = 15.0
MARGIN_BOTTOM = 35.0

SERIES_COLORS = ("#1f77b4", "#d62728")


@dataclass(frozen=True)
class PlotSpec:
    kind: str = "x_by_time"  # "x_by_time" | "xy_by_time" | "hist_ci"
    bins: int = 20
    ci_level: float = 0.95
    title: str = ""

    def __post_init__(self):
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if not (0.0 < self.ci_level < 1.0):
            raise ValueError("ci_level must be in (0, 1)")


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _expand(lo: float, hi: float) -> tuple[float, float]:
    if lo == hi:
        return lo - 0.5, hi + 0.5
    return lo, hi


def data_to_pixel(x: float, y: float, xr: tuple[float, float],
                  yr: tuple[float, float]) -> tuple[float, float]:
    """The documented affine transform from data space to SVG coordinates."""
    px = MARGIN_LEFT + (x - xr[0]) / (xr[1] - xr[0]) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    py = HEIGHT - MARGIN_BOTTOM - (y - yr[0]) / (yr[1] - yr[0]) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    return px, py


def _check_series(series: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    if len(series) == 0:
        raise EmptySeries("series is empty")
    clean = []
    for t, x in series:
        if not (math.isfinite(t) and math.isfinite(x)):
            raise BadPoint(f"non-finite point ({t}, {x})")
        clean.append((float(t), float(x)))
    return clean


def _svg_open(title: str) -> list[str]:
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(WIDTH)}" height="{_fmt(HEIGHT)}" '
        f'viewBox="0 0 {_fmt(WIDTH)} {_fmt(HEIGHT)}">',
        f'<rect x="0" y="0" width="{_fmt(WIDTH)}" height="{_fmt(HEIGHT)}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(f'<text x="{_fmt(WIDTH / 2)}" y="12" text-anchor="middle" '
                     f'font-size="12">{title}</text>')
    return parts


def _axes(xr: tuple[float, float], yr: tuple[float, float]) -> list[str]:
    x0, y0 = MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM
    x1, y1 = WIDTH - MARGIN_RIGHT, MARGIN_TOP
    parts = [
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y0)}" stroke="#000000"/>',
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x0)}" y2="{_fmt(y1)}" stroke="#000000"/>',
        f'<text x="{_fmt(x0)}" y="{_fmt(y0 + 16)}" font-size="10">{_fmt(xr[0])}</text>',
        f'<text x="{_fmt(x1)}" y="{_fmt(y0 + 16)}" text-anchor="end" font-size="10">{_fmt(xr[1])}</text>',
        f'<text x="{_fmt(x0 - 4)}" y="{_fmt(y0)}" text-anchor="end" font-size="10">{_fmt(yr[0])}</text>',
        f'<text x="{_fmt(x0 - 4)}" y="{_fmt(y1 + 8)}" text-anchor="end" font-size="10">{_fmt(yr[1])}</text>',
    ]
    return parts


def _polyline(series: list[tuple[float, float]], xr, yr, color: str) -> list[str]:
    pts = " ".join(_fmt(px) + "," + _fmt(py)
                   for px, py in (data_to_pixel(t, x, xr, yr) for t, x in series))
    parts = []
    if len(series) > 1:
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    for t, x in series:
        px, py = data_to_pixel(t, x, xr, yr)
        parts.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="2" fill="{color}"/>')
    return parts


def plot_x_by_time(series: Sequence[tuple[float, float]], spec: PlotSpec = PlotSpec()) -> str:
    """One series of (t, x) against time."""
    pts = _check_series(series)
    xr = _expand(min(t for t, _ in pts), max(t for t, _ in pts))
    yr = _expand(min(x for _, x in pts), max(x for _, x in pts))
    parts = _svg_open(spec.title)
    parts += _axes(xr, yr)
    parts += _polyline(pts, xr, yr, SERIES_COLORS[0])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_xy_by_time(series_a: Sequence[tuple[float, float]],
                    series_b: Sequence[tuple[float, float]],
                    spec: PlotSpec = PlotSpec(),
                    labels: tuple[str, str] = ("a", "b")) -> str:
    """Two styled series on a shared (union) time axis, with a legend."""
    a = _check_series(series_a)
    b = _check_series(series_b)
    ts = [t for t, _ in a] + [t for t, _ in b]
    xs = [x for _, x in a] + [x for _, x in b]
    xr = _expand(min(ts), max(ts))
    yr = _expand(min(xs), max(xs))
    parts = _svg_open(spec.title)
    parts += _axes(xr, yr)
    parts += _polyline(a, xr, yr, SERIES_COLORS[0])
    parts += _polyline(b, xr, yr, SERIES_COLORS[1])
    lx = WIDTH - MARGIN_RIGHT - 120
    for i, label in enumerate(labels):
        ly = MARGIN_TOP + 12 + 14 * i
        parts.append(f'<rect x="{_fmt(lx)}" y="{_fmt(ly - 8)}" width="10" height="10" '
                     f'fill="{SERIES_COLORS[i]}"/>')
        parts.append(f'<text x="{_fmt(lx + 14)}" y="{_fmt(ly)}" font-size="10">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def hist_ci_stats(samples: Sequence[float], spec: PlotSpec) -> dict:
    """Bin counts plus the asymptotic CI: mean +/- z * s / sqrt(n)."""
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < 2:
        raise InsufficientSamples(f"histogram needs >= 2 samples, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise BadPoint("non-finite sample")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        counts = np.zeros(spec.bins, dtype=int)
        counts[0] = len(x)
        edges = np.linspace(lo - 0.5, hi + 0.5, spec.bins + 1)
    else:
        counts, edges = np.histogram(x, bins=spec.bins, range=(lo, hi))
    mean = float(x.mean())
    s = float(x.std(ddof=1))
    z = float(norm.ppf(0.5 + spec.ci_level / 2.0))
    half_width = z * s / math.sqrt(len(x))
    return {"counts": counts.tolist(), "edges": edges.tolist(),
            "mean": mean, "ci_half_width": half_width, "n": len(x), "z": z}


def plot_hist_ci(samples: Sequence[float], spec: PlotSpec = PlotSpec(kind="hist_ci")) -> str:
    """Equal-width histogram with a shaded asymptotic CI around the mean."""
    stats = hist_ci_stats(samples, spec)
    counts = stats["counts"]
    edges = stats["edges"]
    xr = _expand(edges[0], edges[-1])
    yr = (0.0, float(max(counts)) * 1.05 or 1.0)
    parts = _svg_open(spec.title)
    parts += _axes(xr, yr)
    for i, count in enumerate(counts):
        if count == 0:
            continue
        x0, y0 = data_to_pixel(edges[i], 0.0, xr, yr)
        x1, y1 = data_to_pixel(edges[i + 1], float(count), xr, yr)
        parts.append(f'<rect x="{_fmt(x0)}" y="{_fmt(y1)}" width="{_fmt(x1 - x0)}" '
                     f'height="{_fmt(y0 - y1)}" fill="#1f77b4" stroke="#ffffff" stroke-width="0.5"/>')
    ci_lo = stats["mean"] - stats["ci_half_width"]
    ci_hi = stats["mean"] + stats["ci_half_width"]
    px_lo, _ = data_to_pixel(ci_lo, 0.0, xr, yr)
    px_hi, _ = data_to_pixel(ci_hi, 0.0, xr, yr)
    px_mean, _ = data_to_pixel(stats["mean"], 0.0, xr, yr)
    parts.append(f'<rect id="ci-band" x="{_fmt(px_lo)}" y="{_fmt(MARGIN_TOP)}" '
                 f'width="{_fmt(px_hi - px_lo)}" height="{_fmt(HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)}" '
                 f'fill="#d62728" fill-opacity="0.15"/>')
    parts.append(f'<line id="ci-mean" x1="{_fmt(px_mean)}" y1="{_fmt(MARGIN_TOP)}" '
                 f'x2="{_fmt(px_mean)}" y2="{_fmt(HEIGHT - MARGIN_BOTTOM)}" '
                 f'stroke="#d62728" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
