"""Shared domain types and the track data model.

Coordinates follow the image convention: origin at the top-left corner,
x to the right, y increasing downward.  Growth-positive quantities are
derived in :mod:`vftrack.kinematics` by flipping the sign of dy; raw
tracks always stay in image coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Keypoint",
    "Descriptor",
    "MatchPair",
    "Track",
    "TrackerConfig",
    "SequenceCalibration",
    "new_track",
    "write_tracks_csv",
    "read_tracks_csv",
]


@dataclass(frozen=True)
class Keypoint:
    """A detected image feature at sub-pixel position.

    Identity is (frame_index, local_index); positions are never compared
    for equality.
    """

    frame_index: int
    x: float
    y: float
    response: float
    local_index: int

    def __post_init__(self):
        if self.frame_index < 0 or self.local_index < 0:
            raise ValueError("frame_index and local_index must be non-negative")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("keypoint position must be finite")
        if not math.isfinite(self.response):
            raise ValueError("keypoint response must be finite")

    @property
    def key(self) -> tuple[int, int]:
        return (self.frame_index, self.local_index)


class Descriptor:
    """Fixed-length appearance vector, unit Euclidean norm after construction."""

    __slots__ = ("values",)

    def __init__(self, values):
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("descriptor must be a non-empty 1-D vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("descriptor entries must be finite")
        n = float(np.linalg.norm(v))
        if n < 1e-12:
            raise ValueError("descriptor norm is zero")
        v = v / n
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __setattr__(self, name, value):
        raise AttributeError("Descriptor is immutable")

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"Descriptor(dim={self.values.size})"


@dataclass(frozen=True)
class MatchPair:
    """A correspondence between a keypoint in frame t-1 and one in frame t."""

    prev: Keypoint
    curr: Keypoint
    score: float

    def __post_init__(self):
        if self.prev.frame_index + 1 != self.curr.frame_index:
            raise ValueError(
                "match must join consecutive frames "
                f"({self.prev.frame_index} -> {self.curr.frame_index})"
            )
        if not math.isfinite(self.score):
            raise ValueError("match score must be finite")

    @property
    def distance(self) -> float:
        return math.hypot(self.curr.x - self.prev.x, self.curr.y - self.prev.y)


ACTIVE = "active"
TERMINATED = "terminated"


@dataclass
class Track:
    """Per-frame trajectory of one feature.

    ``points`` is an ordered list of (frame_index, x, y) with strictly
    consecutive frame indices.
    """

    id: int
    points: list[tuple[int, float, float]] = field(default_factory=list)
    state: str = ACTIVE

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("track id must be non-negative")
        if not self.points:
            raise ValueError("track must have at least one point")
        for (f0, _, _), (f1, _, _) in zip(self.points, self.points[1:]):
            if f1 != f0 + 1:
                raise ValueError("track frame indices must be consecutive")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def head(self) -> tuple[int, float, float]:
        return self.points[-1]

    @property
    def first_frame(self) -> int:
        return self.points[0][0]

    @property
    def last_frame(self) -> int:
        return self.points[-1][0]

    def append(self, frame_index: int, x: float, y: float):
        if frame_index != self.last_frame + 1:
            raise ValueError(
                f"track {self.id}: cannot append frame {frame_index} "
                f"after frame {self.last_frame}"
            )
        self.points.append((frame_index, float(x), float(y)))


def new_track(track_id: int, kp: Keypoint) -> Track:
    """Start a single-point active track from a keypoint."""
    return Track(id=track_id, points=[(kp.frame_index, kp.x, kp.y)], state=ACTIVE)


@dataclass(frozen=True)
class TrackerConfig:
    dist_th: float = 40.0
    max_keypoints: int = 2048
    ratio_threshold: float = 0.8

    def __post_init__(self):
        if self.dist_th <= 0:
            raise ValueError("dist_th must be > 0")
        if self.max_keypoints <= 0:
            raise ValueError("max_keypoints must be positive")
        if not (0 < self.ratio_threshold <= 1):
            raise ValueError("ratio_threshold must be in (0, 1]")


@dataclass(frozen=True)
class SequenceCalibration:
    """Physical calibration: seconds per frame and micrometers per pixel."""

    frame_interval: float = 2.0
    pixel_scale: float | None = None

    def __post_init__(self):
        if self.frame_interval <= 0:
            raise ValueError("frame_interval must be positive")
        if self.pixel_scale is not None and self.pixel_scale <= 0:
            raise ValueError("pixel_scale must be positive")


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def write_tracks_csv(tracks, path):
    """Write tracks in the interchange format: track_id,frame,x,y."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("track_id,frame,x,y\n")
        for trk in tracks:
            for frame, x, y in trk.points:
                f.write(f"{trk.id},{frame},{_fmt(x)},{_fmt(y)}\n")


def read_tracks_csv(path) -> list[Track]:
    """Read tracks from the interchange CSV; rows may arrive in any order."""
    by_id: dict[int, list[tuple[int, float, float]]] = {}
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header.split(",")[:4] != ["track_id", "frame", "x", "y"]:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields")
            try:
                tid, frame = int(parts[0]), int(parts[1])
                x, y = float(parts[2]), float(parts[3])
            except ValueError as e:
                raise ValueError(f"{path}:{lineno}: {e}") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"{path}:{lineno}: non-finite position")
            by_id.setdefault(tid, []).append((frame, x, y))
    tracks = []
    for tid in sorted(by_id):
        pts = sorted(by_id[tid])
        tracks.append(Track(id=tid, points=pts, state=TERMINATED))
    return tracks
