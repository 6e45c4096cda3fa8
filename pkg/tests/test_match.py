"""Matcher oracle tests: mutual-NN + two-sided ratio against brute force."""

import json

import numpy as np
import pytest

from vftrack import match
from vftrack.types import Descriptor, TrackerConfig
from tests.conftest import make_kp


def features(frame, descs):
    return [
        (make_kp(frame, i, 0, i), Descriptor(d)) for i, d in enumerate(descs)
    ]


def ref_match(prev_descs, curr_descs, threshold):
    """Brute-force mutual NN with a two-sided Lowe ratio test."""
    a = np.stack([Descriptor(d).values for d in prev_descs]) if prev_descs else None
    b = np.stack([Descriptor(d).values for d in curr_descs]) if curr_descs else None
    if a is None or b is None:
        return set()
    dist = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)

    def ratio_ok(row, j):
        if row.size < 2:
            return True
        srt = np.sort(row)
        if row[j] > srt[0]:
            return False  # j is not the nearest on this side
        d1, d2 = row[j], srt[1]
        if d2 <= 0:
            return False
        return d1 / d2 < threshold

    out = set()
    for i in range(len(prev_descs)):
        j = int(np.argmin(dist[i]))
        if int(np.argmin(dist[:, j])) != i:
            continue
        if ratio_ok(dist[i, :], j) and ratio_ok(dist[:, j], i):
            out.add((i, j))
    return out


class TestMatchNative:
    def test_matches_brute_force_oracle(self, rng):
        cfg = TrackerConfig()
        for _ in range(50):
            np_, nc = int(rng.integers(0, 9)), int(rng.integers(0, 9))
            pd = [rng.standard_normal(6) for _ in range(np_)]
            cd = [rng.standard_normal(6) for _ in range(nc)]
            got = {
                (m.prev.local_index, m.curr.local_index)
                for m in match.match_native(features(0, pd), features(1, cd), cfg)
            }
            assert got == ref_match(pd, cd, cfg.ratio_threshold)

    def test_empty_sides(self):
        cfg = TrackerConfig()
        assert match.match_native([], features(1, [[1, 0]]), cfg) == []
        assert match.match_native(features(0, [[1, 0]]), [], cfg) == []

    def test_symmetry(self, rng):
        cfg = TrackerConfig()
        pd = [rng.standard_normal(5) for _ in range(7)]
        cd = [rng.standard_normal(5) for _ in range(7)]
        fwd = {
            (m.prev.local_index, m.curr.local_index)
            for m in match.match_native(features(0, pd), features(1, cd), cfg)
        }
        # swapping the roles must produce the same pair set, transposed
        rev = {
            (m.curr.local_index, m.prev.local_index)
            for m in match.match_native(features(0, cd), features(1, pd), cfg)
        }
        assert fwd == rev

    def test_duplicate_descriptors_are_ambiguous(self):
        cfg = TrackerConfig()
        prev = features(0, [[1.0, 0.0]])
        curr = features(1, [[1.0, 0.0], [1.0, 0.0]])
        # two equidistant candidates: ratio = 1 >= 0.8, no pair
        assert match.match_native(prev, curr, cfg) == []

    def test_single_candidate_is_vacuous(self):
        cfg = TrackerConfig()
        prev = features(0, [[1.0, 0.0]])
        curr = features(1, [[0.9, 0.1]])
        pairs = match.match_native(prev, curr, cfg)
        assert len(pairs) == 1

    def test_score_formula(self):
        cfg = TrackerConfig()
        prev = features(0, [[1.0, 0.0]])
        curr = features(1, [[0.0, 1.0]])
        (pair,) = match.match_native(prev, curr, cfg)
        assert pair.score == pytest.approx(1.0 - np.sqrt(2.0) / 2.0)

    def test_dimension_mismatch_raises(self):
        cfg = TrackerConfig()
        with pytest.raises(ValueError, match="dimension"):
            match.match_native(
                features(0, [[1, 0]]), features(1, [[1, 0, 0]]), cfg
            )

    def test_identity_preserved_under_small_noise(self, rng):
        # perturbing well-separated descriptors by eps per component keeps
        # the identity matching (statistical, fixed generator)
        cfg = TrackerConfig()
        dim, eps = 16, 0.01
        for _ in range(100):
            base = rng.standard_normal((10, dim))
            base /= np.linalg.norm(base, axis=1, keepdims=True)
            d = np.linalg.norm(base[:, None] - base[None, :], axis=2)
            np.fill_diagonal(d, np.inf)
            if d.min() <= 10 * eps * np.sqrt(dim):
                continue
            noisy = base + rng.uniform(-eps, eps, size=base.shape)
            got = {
                (m.prev.local_index, m.curr.local_index)
                for m in match.match_native(
                    features(0, list(base)), features(1, list(noisy)), cfg
                )
            }
            assert got == {(i, i) for i in range(10)}


class TestMatchImport:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            json.dumps({"frame": 1, "prev_index": 0, "curr_index": 2, "score": 0.9})
            + "\n"
            + json.dumps({"frame": 2, "prev_index": 1, "curr_index": 0})
            + "\n"
        )
        recs = match.import_matches(path)
        assert recs[1] == [(0, 2, 0.9, 1)]
        assert recs[2] == [(1, 0, 1.0, 2)]

    def test_frame_zero_rejected(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"frame": 0, "prev_index": 0, "curr_index": 0}\n')
        with pytest.raises(match.MatchImportError, match=">= 1"):
            match.import_matches(path)

    def test_build_validates_ranges_and_duplicates(self):
        prev = [make_kp(0, 0, 0, 0), make_kp(0, 1, 0, 1)]
        curr = [make_kp(1, 0, 0, 0), make_kp(1, 1, 0, 1)]
        pairs = match.build_match_pairs([(0, 1, 1.0, 1)], prev, curr)
        assert len(pairs) == 1
        with pytest.raises(match.MatchImportError, match="out of range"):
            match.build_match_pairs([(5, 0, 1.0, 1)], prev, curr)
        with pytest.raises(match.MatchImportError, match="duplicate"):
            match.build_match_pairs(
                [(0, 0, 1.0, 1), (0, 1, 1.0, 2)], prev, curr
            )
