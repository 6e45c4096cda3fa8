"""2-D pillar morphology reconstruction.

Accumulated structure is treated as a rigid body: each frame the whole
point cloud is translated by that frame's mean displacement (growth up,
drift sideways), then the first points of tracks born in that frame are
stacked at the base (y_pillar = 0).  Points born earlier therefore end
up higher in the pillar.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import track_displacements
from .types import SequenceCalibration, Track

__all__ = ["PillarShape", "SeriesPoint", "reconstruct_step", "reconstruct_sequence"]


@dataclass
class PillarShape:
    # each point is [x_pillar, y_pillar, birth_frame]
    points: list[list[float]] = field(default_factory=list)
    cumulative_drift: float = 0.0
    cumulative_height: float = 0.0


@dataclass(frozen=True)
class SeriesPoint:
    frame_index: int
    height_px: float
    drift_px: float
    height_um: float | None
    drift_um: float | None


def _mean_vector(frame_displacements, trim_fraction: float):
    if not frame_displacements:
        return 0.0, 0.0
    dx = np.asarray([d.dx for d in frame_displacements])
    dy = np.asarray([d.dy_growth for d in frame_displacements])
    if trim_fraction > 0 and dx.size > 2:
        k = int(np.floor(trim_fraction * dx.size))
        if k > 0:
            dx = np.sort(dx)[k:-k]
            dy = np.sort(dy)[k:-k]
    return float(dx.mean()), float(dy.mean())


def reconstruct_step(shape: PillarShape, frame_displacements, new_track_points,
                     frame_index: int, center_x: float = 0.0,
                     trim_fraction: float = 0.0) -> PillarShape:
    """One frame of reconstruction.

    frame_displacements: displacement vectors of tracks extended into this
    frame (may be empty: the pillar pauses).  new_track_points: (x, y)
    image positions of tracks born in this frame; their x enters the
    pillar relative to center_x and their y_pillar is 0.
    """
    mean_dx, mean_dy = _mean_vector(frame_displacements, trim_fraction)
    for p in shape.points:
        p[0] += mean_dx
        p[1] += mean_dy
    shape.cumulative_drift += mean_dx
    shape.cumulative_height += mean_dy
    for x, _y in new_track_points:
        shape.points.append([x - center_x, 0.0, float(frame_index)])
    return shape


def reconstruct_sequence(tracks: list[Track],
                         calibration: SequenceCalibration | None = None,
                         center_x: float | None = None,
                         trim_fraction: float = 0.0):
    """Fold reconstruct_step over all frames of one tracker run.

    Returns (PillarShape, [SeriesPoint per frame]).  center_x defaults
    to the midrange of all observed x positions (the tracks file does
    not carry the frame width).
    """
    if not tracks:
        return PillarShape(), []

    if center_x is None:
        xs = [x for trk in tracks for _, x, _ in trk.points]
        center_x = (min(xs) + max(xs)) / 2.0

    displacements = track_displacements(tracks, min_track_len=2)
    by_frame: dict[int, list] = {}
    for d in displacements:
        by_frame.setdefault(d.frame_index, []).append(d)
    births: dict[int, list[tuple[float, float]]] = {}
    for trk in tracks:
        f0, x0, y0 = trk.points[0]
        births.setdefault(f0, []).append((x0, y0))

    first = min(trk.first_frame for trk in tracks)
    last = max(trk.last_frame for trk in tracks)

    shape = PillarShape()
    series = []
    scale = calibration.pixel_scale if calibration is not None else None
    for frame in range(first, last + 1):
        reconstruct_step(
            shape,
            by_frame.get(frame, []),
            births.get(frame, []),
            frame,
            center_x=center_x,
            trim_fraction=trim_fraction,
        )
        series.append(
            SeriesPoint(
                frame_index=frame,
                height_px=shape.cumulative_height,
                drift_px=shape.cumulative_drift,
                height_um=shape.cumulative_height * scale if scale else None,
                drift_um=shape.cumulative_drift * scale if scale else None,
            )
        )
    return shape, series
