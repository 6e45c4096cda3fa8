"""Track scoring against ground truth: gated trajectory distance, optimal
one-to-one pairing, alpha similarity, precision/recall/F1, length stats.

The gated distance between two tracks sums, over the union of their
frame ranges, min(point distance, gate) where both have a point and the
full gate where only one does.  alpha = 1 - d(X,Y)/d(X,empty) where the
unpaired-ground-truth penalty is gate per point; spurious estimated
tracks are excluded from d(X,Y) (they are penalized through precision)
so alpha stays in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .types import Track

__all__ = [
    "EvalConfig",
    "EvalReport",
    "gated_track_distance",
    "pair_tracks",
    "alpha_score",
    "prf_report",
    "length_stats",
    "evaluate_tracks",
]

GREEDY_AUTO_LIMIT = 5000  # per side; above this, optimal mode falls back to greedy


@dataclass(frozen=True)
class EvalConfig:
    gate: float = 5.0
    pairing_mode: str = "optimal"  # optimal | greedy
    min_track_len: int = 2

    def __post_init__(self):
        if self.gate <= 0:
            raise ValueError("gate must be > 0")
        if self.pairing_mode not in ("optimal", "greedy"):
            raise ValueError(f"unknown pairing mode {self.pairing_mode!r}")


@dataclass(frozen=True)
class EvalReport:
    alpha: float
    precision: float
    recall: float
    f1: float
    paired: int
    missed: int
    spurious: int
    mean_track_length: float | None
    std_track_length: float | None
    degenerate_precision: bool  # true when no estimated tracks existed

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "paired": self.paired,
            "missed": self.missed,
            "spurious": self.spurious,
            "mean_track_length": self.mean_track_length,
            "std_track_length": self.std_track_length,
            "degenerate_precision": self.degenerate_precision,
        }


def _points_by_frame(trk: Track) -> dict[int, tuple[float, float]]:
    return {f: (x, y) for f, x, y in trk.points}


def gated_track_distance(gt: Track, est: Track, gate: float) -> float:
    a = _points_by_frame(gt)
    b = _points_by_frame(est)
    total = 0.0
    for frame in a.keys() | b.keys():
        pa = a.get(frame)
        pb = b.get(frame)
        if pa is None or pb is None:
            total += gate
        else:
            total += min(math.hypot(pa[0] - pb[0], pa[1] - pb[1]), gate)
    return total


def _candidate_cost(gt: Track, est: Track, gate: float):
    """(gated distance, candidate?) - a pair is a pairing candidate when
    the tracks overlap in time and their mean gated distance over the
    overlap is below the gate."""
    a = _points_by_frame(gt)
    b = _points_by_frame(est)
    overlap = a.keys() & b.keys()
    if not overlap:
        return None
    s = 0.0
    for frame in overlap:
        pa, pb = a[frame], b[frame]
        s += min(math.hypot(pa[0] - pb[0], pa[1] - pb[1]), gate)
    if s / len(overlap) >= gate:
        return None
    extra = (len(a) - len(overlap)) + (len(b) - len(overlap))
    return s + gate * extra


def _filtered(tracks, min_len):
    return [t for t in tracks if len(t) >= min_len]


def _bounds(tracks):
    """(t0, t1, xmin, xmax, ymin, ymax) row per track; tracks are
    frame-consecutive so the time span is an interval."""
    out = np.empty((len(tracks), 6))
    for i, t in enumerate(tracks):
        xs = [p[1] for p in t.points]
        ys = [p[2] for p in t.points]
        out[i] = (t.points[0][0], t.points[-1][0],
                  min(xs), max(xs), min(ys), max(ys))
    return out


def _candidate_pairs(gt, est, gate):
    """Indices of (gt, est) pairs that could be pairing candidates.

    Candidacy needs at least one common frame with point distance below
    the gate, so time spans must intersect and bounding boxes must come
    within the gate.  This filter is exact (necessary condition), only
    a speedup over testing every pair.
    """
    bg = _bounds(gt)
    be = _bounds(est)
    time_ok = (bg[:, 0][:, None] <= be[:, 1][None, :]) & (
        be[:, 0][None, :] <= bg[:, 1][:, None]
    )
    x_ok = (bg[:, 2][:, None] <= be[:, 3][None, :] + gate) & (
        be[:, 2][None, :] <= bg[:, 3][:, None] + gate
    )
    y_ok = (bg[:, 4][:, None] <= be[:, 5][None, :] + gate) & (
        be[:, 4][None, :] <= bg[:, 5][:, None] + gate
    )
    rows, cols = np.nonzero(time_ok & x_ok & y_ok)
    return zip(rows.tolist(), cols.tolist())


def pair_tracks(gt: list[Track], est: list[Track], config: EvalConfig
                ) -> list[tuple[int, int, float]]:
    """One-to-one pairing minimizing total gated distance over candidates.

    Returns [(gt_index, est_index, cost), ...] with indices into the
    min_track_len-filtered inputs passed in.  Optimal mode maximizes the
    number of candidate pairs, then minimizes total cost (exact
    assignment); greedy mode picks candidates in ascending cost order.
    """
    if not gt or not est:
        return []
    costs: dict[tuple[int, int], float] = {}
    for i, j in _candidate_pairs(gt, est, config.gate):
        c = _candidate_cost(gt[i], est[j], config.gate)
        if c is not None:
            costs[(i, j)] = c
    if not costs:
        return []

    mode = config.pairing_mode
    if mode == "optimal" and (len(gt) > GREEDY_AUTO_LIMIT or len(est) > GREEDY_AUTO_LIMIT):
        mode = "greedy"

    if mode == "greedy":
        order = sorted(costs.items(), key=lambda kv: (kv[1], kv[0]))
        used_g: set[int] = set()
        used_e: set[int] = set()
        pairs = []
        for (i, j), c in order:
            if i in used_g or j in used_e:
                continue
            used_g.add(i)
            used_e.add(j)
            pairs.append((i, j, c))
        return sorted(pairs)

    big = config.gate * sum(len(t) for t in gt + est) + 1e6
    cost_matrix = np.full((len(gt), len(est)), big)
    for (i, j), c in costs.items():
        cost_matrix[i, j] = c
    rows, cols = linear_sum_assignment(cost_matrix)
    return [
        (int(i), int(j), costs[(i, j)])
        for i, j in zip(rows, cols)
        if (int(i), int(j)) in costs
    ]


def alpha_score(gt: list[Track], est: list[Track], config: EvalConfig,
                pairing=None) -> float:
    """Jaccard-style trajectory similarity in [0, 1]."""
    gt = _filtered(gt, config.min_track_len)
    est = _filtered(est, config.min_track_len)
    if not gt:
        raise ValueError("alpha score undefined for empty ground truth")
    if pairing is None:
        pairing = pair_tracks(gt, est, config)
    paired_gt = {i for i, _, _ in pairing}
    d_xy = sum(c for _, _, c in pairing)
    d_xy += config.gate * sum(
        len(t) for i, t in enumerate(gt) if i not in paired_gt
    )
    d_x0 = config.gate * sum(len(t) for t in gt)
    alpha = 1.0 - d_xy / d_x0
    return min(max(alpha, 0.0), 1.0)


def prf_report(n_paired: int, n_est: int, n_gt: int):
    """(precision, recall, f1, degenerate_precision_flag)."""
    degenerate = n_est == 0
    precision = n_paired / n_est if n_est else 0.0
    recall = n_paired / n_gt if n_gt else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1, degenerate


def length_stats(tracks: list[Track], min_track_len: int = 2):
    """Mean and population std of track lengths in frames, or (None, None)."""
    lengths = [len(t) for t in _filtered(tracks, min_track_len)]
    if not lengths:
        return None, None
    arr = np.asarray(lengths, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def evaluate_tracks(gt: list[Track], est: list[Track], config: EvalConfig
                    ) -> EvalReport:
    gt_f = _filtered(gt, config.min_track_len)
    est_f = _filtered(est, config.min_track_len)
    if not gt_f:
        raise ValueError("no ground-truth tracks meet min_track_len")
    pairing = pair_tracks(gt_f, est_f, config)
    alpha = alpha_score(gt_f, est_f, config, pairing=pairing)
    precision, recall, f1, degenerate = prf_report(
        len(pairing), len(est_f), len(gt_f)
    )
    mean_len, std_len = length_stats(est_f, config.min_track_len)
    return EvalReport(
        alpha=alpha,
        precision=precision,
        recall=recall,
        f1=f1,
        paired=len(pairing),
        missed=len(gt_f) - len(pairing),
        spurious=len(est_f) - len(pairing),
        mean_track_length=mean_len,
        std_track_length=std_len,
        degenerate_precision=degenerate,
    )
