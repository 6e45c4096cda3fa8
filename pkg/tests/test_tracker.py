"""Track lifecycle tests: literal-transcription oracle, prune boundaries,
termination/spawn behavior, and the survival-length statistic."""

import math

import numpy as np
import pytest

from vftrack import tracker
from vftrack.types import ACTIVE, TERMINATED, MatchPair, TrackerConfig
from tests.conftest import make_features, make_kp


# --- oracle: a direct, independent transcription of the lifecycle rules ----

def oracle_track(frames_positions, scripted_matches, dist_th):
    """frames_positions: [[(x, y), ...] per frame]; scripted_matches:
    {frame: [(prev_idx, curr_idx)]}.  Returns [(points, state)] by id."""
    tracks = []  # {'points': [...], 'head': (frame, idx) | None}
    for idx, (x, y) in enumerate(frames_positions[0]):
        tracks.append({"points": [(0, x, y)], "head": (0, idx), "state": ACTIVE})
    for t in range(1, len(frames_positions)):
        prev_pts = frames_positions[t - 1]
        curr_pts = frames_positions[t]
        # Prune: drop pairs moving strictly farther than dist_th
        kept = []
        for pi, ci in scripted_matches.get(t, []):
            d = math.dist(prev_pts[pi], curr_pts[ci])
            if d <= dist_th:
                kept.append((pi, ci))
        # Extend: append matched keypoints, move the head forward
        matched_curr = set()
        for pi, ci in kept:
            for trk in tracks:
                if trk["state"] == ACTIVE and trk["head"] == (t - 1, pi):
                    x, y = curr_pts[ci]
                    trk["points"].append((t, x, y))
                    trk["head"] = (t, ci)
                    matched_curr.add(ci)
                    break
            else:
                raise AssertionError("scripted match does not hit a head")
        # Terminate: heads left behind in frame t-1 end their tracks
        for trk in tracks:
            if trk["state"] == ACTIVE and trk["head"][0] != t:
                trk["state"] = TERMINATED
                trk["head"] = None
        # Spawn: unmatched current keypoints start new tracks
        for ci, (x, y) in enumerate(curr_pts):
            if ci not in matched_curr:
                tracks.append(
                    {"points": [(t, x, y)], "head": (t, ci), "state": ACTIVE}
                )
    return [(trk["points"], trk["state"]) for trk in tracks]


def run_production(frames_positions, scripted_matches, dist_th):
    feats = [make_features(t, pos) for t, pos in enumerate(frames_positions)]

    def matcher(prev, curr, frame_index):
        return [
            MatchPair(prev=prev[pi][0], curr=curr[ci][0], score=1.0)
            for pi, ci in scripted_matches.get(frame_index, [])
        ]

    cfg = TrackerConfig(dist_th=dist_th)
    tracks, _ = tracker.track_features(feats, matcher, cfg)
    return [
        ([(f, x, y) for f, x, y in trk.points], trk.state) for trk in tracks
    ]


def random_instance(rng):
    n_frames = int(rng.integers(1, 6))
    frames_positions = [
        [tuple(rng.uniform(0, 100, 2)) for _ in range(int(rng.integers(0, 11)))]
        for _ in range(n_frames)
    ]
    scripted = {}
    for t in range(1, n_frames):
        np_, nc = len(frames_positions[t - 1]), len(frames_positions[t])
        k = int(rng.integers(0, min(np_, nc) + 1))
        pis = rng.permutation(np_)[:k]
        cis = rng.permutation(nc)[:k]
        scripted[t] = list(zip(pis.tolist(), cis.tolist()))
    return frames_positions, scripted


class TestOracleEquivalence:
    def test_thousand_randomized_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            frames_positions, scripted = random_instance(rng)
            want = oracle_track(frames_positions, scripted, 40.0)
            got = run_production(frames_positions, scripted, 40.0)
            assert got == want


class TestPruneBoundary:
    def test_distance_exactly_dist_th_is_kept(self):
        a = make_kp(0, 0, 0, 0)
        b = make_kp(1, 0, 40, 0)
        kept = tracker.prune([MatchPair(prev=a, curr=b, score=1.0)], 40.0)
        assert len(kept) == 1

    def test_distance_over_dist_th_is_removed(self):
        a = make_kp(0, 0, 0, 0)
        b = make_kp(1, 0, 41, 0)
        assert tracker.prune([MatchPair(prev=a, curr=b, score=1.0)], 40.0) == []

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            tracker.prune([], 0.0)


class TestLifecycle:
    def test_jump_splits_into_two_tracks(self):
        # a 50 px jump between frames 1 and 2 ends the track (length 2)
        # and spawns a fresh one covering the same feature
        frames = [[(10.0, 10.0)], [(12.0, 10.0)], [(62.0, 10.0)]]
        scripted = {1: [(0, 0)], 2: [(0, 0)]}
        out = run_production(frames, scripted, 40.0)
        assert out == [
            ([(0, 10.0, 10.0), (1, 12.0, 10.0)], TERMINATED),
            ([(2, 62.0, 10.0)], ACTIVE),
        ]

    def test_ids_are_contiguous_from_zero(self):
        frames = [[(0.0, 0.0), (5.0, 5.0)], [(1.0, 0.0)], [(1.0, 1.0), (9.0, 9.0)]]
        scripted = {1: [(0, 0)], 2: []}
        feats = [make_features(t, pos) for t, pos in enumerate(frames)]

        def matcher(prev, curr, frame_index):
            return [
                MatchPair(prev=prev[pi][0], curr=curr[ci][0], score=1.0)
                for pi, ci in scripted.get(frame_index, [])
            ]

        tracks, _ = tracker.track_features(feats, matcher, TrackerConfig())
        assert [t.id for t in tracks] == [0, 1, 2, 3]

    def test_terminated_tracks_are_retained(self):
        frames = [[(0.0, 0.0)], [(100.0, 100.0)]]
        out = run_production(frames, {1: []}, 40.0)
        assert out == [
            ([(0, 0.0, 0.0)], TERMINATED),
            ([(1, 100.0, 100.0)], ACTIVE),
        ]

    def test_empty_frame_terminates_everything(self):
        frames = [[(0.0, 0.0), (10.0, 10.0)], []]
        out = run_production(frames, {1: []}, 40.0)
        assert all(state == TERMINATED for _, state in out)

    def test_no_frames_raises(self):
        with pytest.raises(ValueError):
            tracker.track_features([], lambda p, c, i: [], TrackerConfig())

    def test_displacement_records_come_from_extensions(self):
        frames = [[(0.0, 10.0)], [(3.0, 6.0)]]
        feats = [make_features(t, pos) for t, pos in enumerate(frames)]

        def matcher(prev, curr, frame_index):
            return [MatchPair(prev=prev[0][0], curr=curr[0][0], score=1.0)]

        _, records = tracker.track_features(feats, matcher, TrackerConfig())
        (rec,) = records
        assert rec.dx == pytest.approx(3.0)
        assert rec.dy_growth == pytest.approx(4.0)  # y decreased by 4


class TestInternalConsistency:
    def test_match_not_on_head_raises(self):
        frames = [[(0.0, 0.0)], [(1.0, 1.0)]]
        feats = [make_features(t, pos) for t, pos in enumerate(frames)]

        def matcher(prev, curr, frame_index):
            rogue = make_kp(0, 2.0, 2.0, 9)  # never seen by the tracker
            return [MatchPair(prev=rogue, curr=curr[0][0], score=1.0)]

        with pytest.raises(tracker.InternalConsistencyError):
            tracker.track_features(feats, matcher, TrackerConfig())


class TestSurvivalStatistics:
    def test_mean_length_converges_to_geometric(self):
        # with match survival probability p, track length is geometric
        # with mean 1/(1-p)
        p, n_frames, n_kpts = 0.9, 1000, 100
        rng = np.random.default_rng(42)
        positions = [(float(i), 0.0) for i in range(n_kpts)]
        feats = [make_features(t, positions) for t in range(n_frames)]

        def matcher(prev, curr, frame_index):
            return [
                MatchPair(prev=prev[i][0], curr=curr[i][0], score=1.0)
                for i in range(n_kpts)
                if rng.uniform() < p
            ]

        tracks, _ = tracker.track_features(feats, matcher, TrackerConfig())
        assert len(tracks) >= 10_000
        mean_len = np.mean([len(t) for t in tracks])
        assert mean_len == pytest.approx(1.0 / (1.0 - p), rel=0.10)
