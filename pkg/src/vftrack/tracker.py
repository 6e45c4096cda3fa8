"""Track lifecycle engine: prune, extend, terminate, spawn.

Per frame the pipeline runs Detect -> Match -> Prune -> Extend ->
Terminate in that order.  A single missed match terminates its track
(no gap closing, no coasting); unmatched current-frame keypoints spawn
fresh tracks.  Terminated tracks are retained in the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .kinematics import DisplacementVector, decompose
from .types import ACTIVE, TERMINATED, Keypoint, MatchPair, Track, TrackerConfig, new_track

__all__ = [
    "TrackerState",
    "InternalConsistencyError",
    "prune",
    "extend",
    "terminate_and_spawn",
    "track_features",
    "track_sequence",
]


class InternalConsistencyError(RuntimeError):
    """Pipeline invariant violated; indicates a bug, processing must abort."""


@dataclass
class TrackerState:
    tracks: dict[int, Track] = field(default_factory=dict)
    head_map: dict[tuple[int, int], int] = field(default_factory=dict)
    next_id: int = 0
    prev_keypoints: list[Keypoint] = field(default_factory=list)

    def spawn(self, kp: Keypoint) -> Track:
        tid = self.next_id
        if tid in self.tracks:
            raise InternalConsistencyError(f"track id {tid} already issued")
        trk = new_track(tid, kp)
        self.tracks[tid] = trk
        self.head_map[kp.key] = tid
        self.next_id += 1
        return trk


def prune(matches: list[MatchPair], dist_th: float) -> list[MatchPair]:
    """Drop pairs whose endpoint distance is strictly greater than dist_th."""
    if dist_th <= 0:
        raise ValueError("dist_th must be > 0")
    return [m for m in matches if m.distance <= dist_th]


def extend(state: TrackerState, matches: list[MatchPair]) -> list[DisplacementVector]:
    """Append each match's current keypoint to its track; rebind heads."""
    records = []
    for m in matches:
        tid = state.head_map.pop(m.prev.key, None)
        if tid is None:
            raise InternalConsistencyError(
                f"match prev keypoint {m.prev.key} is not a track head"
            )
        trk = state.tracks[tid]
        trk.append(m.curr.frame_index, m.curr.x, m.curr.y)
        state.head_map[m.curr.key] = tid
        records.append(
            decompose(tid, m.curr.frame_index, (m.prev.x, m.prev.y), (m.curr.x, m.curr.y))
        )
    return records


def terminate_and_spawn(state: TrackerState, matches: list[MatchPair],
                        curr_keypoints: list[Keypoint]):
    """End tracks whose head went unmatched; start tracks for unmatched keypoints.

    Must run after extend() for the same frame: extended tracks already
    have their heads rebound to current-frame keypoints.
    """
    matched_curr = {m.curr.key for m in matches}
    frame_index = curr_keypoints[0].frame_index if curr_keypoints else None
    # heads still bound to a previous frame were not extended
    stale = [key for key in state.head_map
             if frame_index is None or key[0] != frame_index]
    for key in stale:
        tid = state.head_map.pop(key)
        state.tracks[tid].state = TERMINATED
    for kp in curr_keypoints:
        if kp.key not in matched_curr:
            state.spawn(kp)


def track_features(features_by_frame, matcher, config: TrackerConfig,
                   frame_callback=None):
    """Run the lifecycle over pre-computed per-frame feature lists.

    features_by_frame: iterable of lists of (Keypoint, Descriptor); the
    matcher is called as matcher(prev_features, curr_features, frame_index).
    frame_callback, when given, is called with the frame index after each
    frame's state update (used for latency logging).
    Returns (tracks sorted by id, displacement records).
    """
    state = TrackerState()
    records: list[DisplacementVector] = []
    prev_features = None
    n_frames = 0
    for frame_index, feats in enumerate(features_by_frame):
        n_frames += 1
        kpts = [kp for kp, _ in feats]
        if frame_index == 0:
            for kp in kpts:
                state.spawn(kp)
        else:
            matches = matcher(prev_features, feats, frame_index)
            matches = prune(matches, config.dist_th)
            records.extend(extend(state, matches))
            terminate_and_spawn(state, matches, kpts)
        state.prev_keypoints = kpts
        prev_features = feats
        if frame_callback is not None:
            frame_callback(frame_index)
    if n_frames == 0:
        raise ValueError("at least one frame is required")
    tracks = [state.tracks[tid] for tid in sorted(state.tracks)]
    return tracks, records


def track_sequence(frames, detector, matcher, config: TrackerConfig):
    """Full pipeline over a frame source.

    frames: iterable of Frame; detector(frame) -> [(Keypoint, Descriptor)];
    matcher(prev_features, curr_features, frame_index) -> [MatchPair].
    """
    return track_features((detector(f) for f in frames), matcher, config)
