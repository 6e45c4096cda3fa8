"""Shared helpers for building small keypoint/track fixtures."""

import numpy as np
import pytest

from vftrack.types import Descriptor, Keypoint, MatchPair


def make_kp(frame, x, y, local_index, response=1.0):
    return Keypoint(frame_index=frame, x=float(x), y=float(y),
                    response=float(response), local_index=local_index)


def make_features(frame, positions):
    """[(Keypoint, None)] for positions; descriptors unused by the tracker."""
    return [
        (make_kp(frame, x, y, i), None) for i, (x, y) in enumerate(positions)
    ]


def make_pair(prev_kp, curr_kp, score=1.0):
    return MatchPair(prev=prev_kp, curr=curr_kp, score=score)


def random_descriptor(rng, dim=8):
    return Descriptor(rng.standard_normal(dim))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
