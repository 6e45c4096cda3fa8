"""Displacement decomposition and growth / orientation time series.

A per-step displacement is resolved into a horizontal component dx and
a growth-positive vertical component dy_growth = -(y2 - y1) (image y
points down, growth points up).  The motion angle theta is measured
from the vertical growth axis: theta = atan2(dx, dy_growth), so purely
vertical growth has theta = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import SequenceCalibration, Track

__all__ = [
    "DisplacementVector",
    "Region",
    "GrowthPoint",
    "GrowthSeries",
    "decompose",
    "track_displacements",
    "growth_series",
    "regional_growth_series",
    "orientation_series",
]


@dataclass(frozen=True)
class DisplacementVector:
    track_id: int
    frame_index: int  # frame at which the step ends
    dx: float
    dy_growth: float
    l: float
    theta_deg: float
    start_x: float  # position at frame_index - 1, for regional assignment
    start_y: float


def decompose(track_id: int, frame_index: int,
              p1: tuple[float, float], p2: tuple[float, float]) -> DisplacementVector:
    """Resolve the step p1 (frame t-1) -> p2 (frame t) into components."""
    x1, y1 = p1
    x2, y2 = p2
    dx = x2 - x1
    dy_growth = -(y2 - y1)
    l = math.hypot(dx, dy_growth)
    theta = math.degrees(math.atan2(dx, dy_growth))
    return DisplacementVector(
        track_id=track_id,
        frame_index=frame_index,
        dx=dx,
        dy_growth=dy_growth,
        l=l,
        theta_deg=theta,
        start_x=x1,
        start_y=y1,
    )


def track_displacements(tracks: list[Track], min_track_len: int = 2):
    """All per-step displacement vectors of tracks meeting min_track_len."""
    out = []
    for trk in tracks:
        if len(trk) < min_track_len:
            continue
        for (f0, x0, y0), (f1, x1, y1) in zip(trk.points, trk.points[1:]):
            out.append(decompose(trk.id, f1, (x0, y0), (x1, y1)))
    return out


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle; membership is half-open: [min, max)."""

    name: str
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"region {self.name!r} is degenerate")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x < self.x_max and self.y_min <= y < self.y_max


@dataclass(frozen=True)
class GrowthPoint:
    frame_index: int
    mean_dy_px: float
    count: int
    rate_um_per_s: float | None


@dataclass(frozen=True)
class GrowthSeries:
    """Per-frame mean growth; frames with no displacements are absent."""

    points: dict[int, GrowthPoint]

    def frames(self):
        return sorted(self.points)

    def total_growth_px(self) -> float:
        return sum(p.mean_dy_px for p in self.points.values())


def growth_series(displacements, calibration: SequenceCalibration | None = None
                  ) -> GrowthSeries:
    by_frame: dict[int, list[float]] = {}
    for d in displacements:
        by_frame.setdefault(d.frame_index, []).append(d.dy_growth)
    points = {}
    for frame, vals in by_frame.items():
        mean_dy = float(np.mean(vals))
        rate = None
        if calibration is not None and calibration.pixel_scale is not None:
            rate = mean_dy * calibration.pixel_scale / calibration.frame_interval
        points[frame] = GrowthPoint(frame, mean_dy, len(vals), rate)
    return GrowthSeries(points=points)


def regional_growth_series(displacements, regions: list[Region],
                           calibration: SequenceCalibration | None = None
                           ) -> dict[str, GrowthSeries]:
    """Per-region series; a step belongs to every region containing its
    start point, so overlapping regions each receive it."""
    if not regions:
        raise ValueError("regions must be non-empty")
    out = {}
    for region in regions:
        members = [d for d in displacements if region.contains(d.start_x, d.start_y)]
        out[region.name] = growth_series(members, calibration)
    return out


def orientation_series(displacements) -> dict[int, tuple[float, float, int]]:
    """Per-frame arithmetic mean and population std of theta_deg.

    Returns {frame_index: (mean_deg, std_deg, count)}; frames with no
    displacements are absent.
    """
    by_frame: dict[int, list[float]] = {}
    for d in displacements:
        by_frame.setdefault(d.frame_index, []).append(d.theta_deg)
    out = {}
    for frame, vals in by_frame.items():
        arr = np.asarray(vals)
        out[frame] = (float(arr.mean()), float(arr.std()), arr.size)
    return out
