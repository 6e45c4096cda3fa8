"""Descriptor matching between consecutive frames: native mutual-NN with a
two-sided Lowe ratio test, or JSON-lines import of external matches."""

from __future__ import annotations

import json
import math

import numpy as np

from .types import Keypoint, MatchPair

__all__ = ["match_native", "import_matches", "build_match_pairs", "MatchImportError"]


class MatchImportError(ValueError):
    pass


def _ratio_ok(dist_row, j, threshold):
    """Lowe ratio test for the row's candidate j; vacuous with one candidate."""
    if dist_row.size < 2:
        return True
    d1 = dist_row[j]
    best2 = np.partition(dist_row, 1)[:2]
    if d1 > best2[0]:
        return False  # j is not the nearest neighbor on this side
    d2 = best2[1]
    if d2 <= 0.0:
        return False  # duplicate descriptors, ambiguous
    return d1 / d2 < threshold


def match_native(prev, curr, config) -> list[MatchPair]:
    """Mutual nearest neighbors under Euclidean descriptor distance.

    A pair survives only if the ratio test passes in both directions;
    each keypoint appears in at most one pair.  Score is 1 - dist/2
    clamped to [0, 1].
    """
    if not prev or not curr:
        return []
    a = np.stack([d.values for _, d in prev])
    b = np.stack([d.values for _, d in curr])
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"descriptor dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    d2 = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    dist = np.sqrt(np.maximum(d2, 0.0))

    nn_ab = np.argmin(dist, axis=1)
    nn_ba = np.argmin(dist, axis=0)

    pairs = []
    for i in range(len(prev)):
        j = int(nn_ab[i])
        if int(nn_ba[j]) != i:
            continue
        if not _ratio_ok(dist[i, :], j, config.ratio_threshold):
            continue
        if not _ratio_ok(dist[:, j], i, config.ratio_threshold):
            continue
        score = min(max(1.0 - dist[i, j] / 2.0, 0.0), 1.0)
        pairs.append(MatchPair(prev=prev[i][0], curr=curr[j][0], score=float(score)))
    return pairs


def import_matches(path) -> dict[int, list[tuple[int, int, float, int]]]:
    """Parse a JSON-lines match file.

    Each record is {"frame": t, "prev_index": i, "curr_index": j,
    "score": s} describing a pair between frame t-1 and frame t.
    Returns {t: [(prev_index, curr_index, score, lineno), ...]}.
    Index-range and one-to-one validation happens in build_match_pairs
    once the keypoint sets are known.
    """
    by_frame: dict[int, list[tuple[int, int, float, int]]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise MatchImportError(f"{path}:{lineno}: invalid JSON: {e}") from None
            try:
                frame = int(rec["frame"])
                pi = int(rec["prev_index"])
                ci = int(rec["curr_index"])
                score = float(rec.get("score", 1.0))
            except (KeyError, TypeError, ValueError):
                raise MatchImportError(
                    f"{path}:{lineno}: record must have frame, prev_index, curr_index"
                ) from None
            if frame < 1:
                raise MatchImportError(f"{path}:{lineno}: frame must be >= 1")
            if pi < 0 or ci < 0:
                raise MatchImportError(f"{path}:{lineno}: negative index")
            if not math.isfinite(score):
                raise MatchImportError(f"{path}:{lineno}: non-finite score")
            by_frame.setdefault(frame, []).append((pi, ci, score, lineno))
    return by_frame


def build_match_pairs(records, prev_kpts: list[Keypoint], curr_kpts: list[Keypoint],
                      path="matches") -> list[MatchPair]:
    """Validate imported match records for one frame transition."""
    seen_prev: set[int] = set()
    seen_curr: set[int] = set()
    pairs = []
    for pi, ci, score, lineno in records:
        if pi >= len(prev_kpts):
            raise MatchImportError(
                f"{path}:{lineno}: prev_index {pi} out of range "
                f"({len(prev_kpts)} keypoints)"
            )
        if ci >= len(curr_kpts):
            raise MatchImportError(
                f"{path}:{lineno}: curr_index {ci} out of range "
                f"({len(curr_kpts)} keypoints)"
            )
        if pi in seen_prev:
            raise MatchImportError(f"{path}:{lineno}: duplicate prev_index {pi}")
        if ci in seen_curr:
            raise MatchImportError(f"{path}:{lineno}: duplicate curr_index {ci}")
        seen_prev.add(pi)
        seen_curr.add(ci)
        pairs.append(
            MatchPair(prev=prev_kpts[pi], curr=curr_kpts[ci], score=score)
        )
    return pairs
