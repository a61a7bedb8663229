"""Predefined neural metrics, user-defined (band, channel-set) metrics, and
baseline-anchored 0-1 remapping.

A metric is the sum of one band's power over a set of channels.  Calibration
records the metric during two reference mental states; the two anchors then
fix a linear remap onto [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path as FsPath
from typing import Sequence

import numpy as np

from .datatree import DataTree
from .dsp import DEFAULT_BANDS, BandSpec
from .errors import DegenerateBaseline, InsufficientBaseline, UnknownBand
from .layout import ChannelLayout, DEFAULT_LAYOUT

MIN_BASELINE_SAMPLES = 8
_DEGENERATE_EPS = 1e-12

_BANDS_BY_NAME = {b.name: b for b in DEFAULT_BANDS}


@dataclass(frozen=True)
class MetricDefinition:
    """Sum of ``band`` power over ``channels``."""

    name: str
    band: BandSpec
    channels: tuple[str, ...]

    def __post_init__(self):
        if not self.channels:
            raise ValueError(f"metric {self.name}: channel set must be non-empty")
        object.__setattr__(self, "channels", tuple(self.channels))


@dataclass(frozen=True)
class Baseline:
    metric_name: str
    low_anchor: float
    high_anchor: float
    n_low: int
    n_high: int
    captured_at: str | None = None


@dataclass(frozen=True)
class MetricReading:
    name: str
    raw: float
    remapped: float
    timestamp_ms: int


def builtin_metrics() -> list[MetricDefinition]:
    """The six predefined indicators.

    Relaxation uses O1/O2: the default layout has no O3/O4 electrodes, only
    the standard occipital pair.
    """
    alpha = _BANDS_BY_NAME["alpha"]
    beta = _BANDS_BY_NAME["beta"]
    theta = _BANDS_BY_NAME["theta"]
    return [
        MetricDefinition("Attention", beta, ("F3", "F4")),
        MetricDefinition("Relaxation", alpha, ("O1", "O2")),
        MetricDefinition("IntentionToMove", alpha, ("C3", "C4")),
        MetricDefinition("Workload", theta, ("F3", "F4")),
        MetricDefinition("Navigation", theta, ("O1", "O2")),
        MetricDefinition("Creativity", alpha, ("F3", "F4")),
    ]


def eval_metric(
    definition: MetricDefinition,
    bands_tree: DataTree,
    layout: ChannelLayout = DEFAULT_LAYOUT,
    band_order: Sequence[str] = tuple(b.name for b in DEFAULT_BANDS),
) -> float:
    """Sum the metric's band power over its channels.

    ``bands_tree`` is a channels x bands tree from ``dsp.band_matrix``;
    ``band_order`` names its columns.
    """
    try:
        col = list(band_order).index(definition.band.name)
    except ValueError:
        raise UnknownBand(
            f"band {definition.band.name!r} not among computed bands {list(band_order)}"
        ) from None
    total = 0.0
    for ch in definition.channels:
        row = bands_tree.get_branch((layout.index(ch),))
        total += row[col]
    return total


def calibrate(
    low_samples: Sequence[float],
    high_samples: Sequence[float],
    metric_name: str = "",
    min_samples: int = MIN_BASELINE_SAMPLES,
    statistic: str = "mean",
    captured_at: str | None = None,
) -> Baseline:
    """Fix the 0/1 anchors from two recorded reference periods.

    ``statistic`` is "mean" (default) or "percentile" (10th of the low phase,
    90th of the high phase, robust to outliers).  Anchors may come out in
    either order; a metric is allowed to decrease toward the "1" condition.
    """
    if len(low_samples) < min_samples or len(high_samples) < min_samples:
        raise InsufficientBaseline(
            f"need >= {min_samples} samples per phase, got {len(low_samples)}/{len(high_samples)}"
        )
    low = np.asarray(low_samples, dtype=np.float64)
    high = np.asarray(high_samples, dtype=np.float64)
    if statistic == "mean":
        lo, hi = float(low.mean()), float(high.mean())
    elif statistic == "percentile":
        lo, hi = float(np.percentile(low, 10)), float(np.percentile(high, 90))
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    if abs(hi - lo) <= _DEGENERATE_EPS:
        raise DegenerateBaseline(f"anchors coincide at {lo}")
    return Baseline(
        metric_name=metric_name,
        low_anchor=lo,
        high_anchor=hi,
        n_low=len(low_samples),
        n_high=len(high_samples),
        captured_at=captured_at,
    )


def remap(value: float, baseline: Baseline, clamp: bool = True) -> float:
    """Linear map of the raw metric onto the calibrated 0-1 range."""
    out = (value - baseline.low_anchor) / (baseline.high_anchor - baseline.low_anchor)
    if clamp:
        out = min(1.0, max(0.0, out))
    return out


def save_baseline(baseline: Baseline, path: FsPath | str) -> None:
    """Canonical JSON serialization: identical baselines give identical bytes."""
    data = asdict(baseline)
    text = json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"
    FsPath(path).write_text(text, encoding="utf-8")


def load_baseline(path: FsPath | str) -> Baseline:
    data = json.loads(FsPath(path).read_text(encoding="utf-8"))
    return Baseline(**data)
