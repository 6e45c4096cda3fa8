"""vftrack: detector-agnostic real-time particle feature tracking."""

from .types import (
    Descriptor,
    Keypoint,
    MatchPair,
    SequenceCalibration,
    Track,
    TrackerConfig,
)

__version__ = "0.1.0"

__all__ = [
    "Descriptor",
    "Keypoint",
    "MatchPair",
    "SequenceCalibration",
    "Track",
    "TrackerConfig",
    "__version__",
]
