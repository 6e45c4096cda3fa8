"""Displacement decomposition, growth/orientation series, regions."""

import math

import numpy as np
import pytest

from vftrack.kinematics import (
    Region,
    decompose,
    growth_series,
    orientation_series,
    regional_growth_series,
    track_displacements,
)
from vftrack.types import SequenceCalibration, Track


class TestDecompose:
    def test_three_four_five(self):
        d = decompose(0, 1, (0.0, 0.0), (3.0, -4.0))
        assert d.dx == 3.0
        assert d.dy_growth == 4.0
        assert d.l == pytest.approx(5.0)
        assert d.theta_deg == pytest.approx(36.8699, abs=1e-4)

    def test_pure_vertical_growth_has_zero_theta(self):
        d = decompose(0, 1, (5.0, 10.0), (5.0, 7.0))
        assert d.theta_deg == 0.0
        assert d.dy_growth == 3.0

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            dx, dy = rng.uniform(-50, 50, 2)
            d = decompose(0, 1, (0.0, 0.0), (dx, dy))
            theta = math.radians(d.theta_deg)
            assert d.l * math.sin(theta) == pytest.approx(d.dx, rel=1e-9, abs=1e-12)
            assert d.l * math.cos(theta) == pytest.approx(
                d.dy_growth, rel=1e-9, abs=1e-12
            )

    def test_start_point_recorded(self):
        d = decompose(4, 7, (1.0, 2.0), (3.0, 4.0))
        assert (d.track_id, d.frame_index) == (4, 7)
        assert (d.start_x, d.start_y) == (1.0, 2.0)


class TestTrackDisplacements:
    def test_short_tracks_skipped(self):
        tracks = [
            Track(id=0, points=[(0, 0.0, 0.0)]),
            Track(id=1, points=[(0, 0.0, 10.0), (1, 1.0, 8.0), (2, 2.0, 5.0)]),
        ]
        out = track_displacements(tracks, min_track_len=2)
        assert [(d.track_id, d.frame_index) for d in out] == [(1, 1), (1, 2)]
        assert [d.dy_growth for d in out] == [2.0, 3.0]


class TestGrowthSeries:
    def test_constant_growth_sums_exactly(self):
        # 3 px/frame over 100 steps: total growth 300 px
        pts = [(f, 0.0, 1000.0 - 3.0 * f) for f in range(101)]
        series = growth_series(track_displacements([Track(id=0, points=pts)]))
        assert series.total_growth_px() == pytest.approx(300.0, abs=1e-6)
        assert all(p.count == 1 for p in series.points.values())

    def test_rate_uses_calibration(self):
        pts = [(0, 0.0, 10.0), (1, 0.0, 7.0)]
        cal = SequenceCalibration(frame_interval=2.0, pixel_scale=0.1)
        series = growth_series(track_displacements([Track(id=0, points=pts)]), cal)
        assert series.points[1].rate_um_per_s == pytest.approx(3.0 * 0.1 / 2.0)

    def test_no_calibration_means_no_rate(self):
        pts = [(0, 0.0, 10.0), (1, 0.0, 7.0)]
        series = growth_series(track_displacements([Track(id=0, points=pts)]))
        assert series.points[1].rate_um_per_s is None

    def test_frames_without_displacements_are_absent(self):
        a = Track(id=0, points=[(0, 0.0, 5.0), (1, 0.0, 4.0)])
        b = Track(id=1, points=[(5, 0.0, 9.0), (6, 0.0, 7.0)])
        series = growth_series(track_displacements([a, b]))
        assert series.frames() == [1, 6]

    def test_drift_ramp_closed_form(self):
        # dx(t) = 0.1 t per frame; cumulative drift is 0.1 N(N+1)/2
        n = 50
        xs = np.concatenate([[0.0], np.cumsum(0.1 * np.arange(1, n + 1))])
        pts = [(f, float(xs[f]), 0.0) for f in range(n + 1)]
        disp = track_displacements([Track(id=0, points=pts)])
        total_dx = sum(d.dx for d in disp)
        assert total_dx == pytest.approx(0.1 * n * (n + 1) / 2, abs=1e-6)


class TestRegions:
    def test_degenerate_region_rejected(self):
        with pytest.raises(ValueError):
            Region("bad", 0.0, 0.0, 0.0, 10.0)

    def test_membership_is_half_open(self):
        r = Region("r", 0.0, 0.0, 10.0, 10.0)
        assert r.contains(0.0, 0.0)
        assert not r.contains(10.0, 5.0)
        assert not r.contains(5.0, 10.0)

    def test_quadrant_rates_recovered(self):
        # per-quadrant growth {1,2,3,4} px/frame; regional means must be exact
        rates = {"q1": 1.0, "q2": 2.0, "q3": 3.0, "q4": 4.0}
        centers = {"q1": (25, 25), "q2": (75, 25), "q3": (25, 75), "q4": (75, 75)}
        tracks = []
        tid = 0
        for name, rate in rates.items():
            cx, cy = centers[name]
            for k in range(5):
                pts = [(f, float(cx + k), cy - rate * f) for f in range(6)]
                tracks.append(Track(id=tid, points=pts))
                tid += 1
        regions = [
            Region("q1", 0, 0, 50, 50),
            Region("q2", 50, 0, 100, 50),
            Region("q3", 0, 50, 50, 100),
            Region("q4", 50, 50, 100, 100),
        ]
        disp = track_displacements(tracks)
        by_region = regional_growth_series(disp, regions)
        for name, rate in rates.items():
            series = by_region[name]
            for p in series.points.values():
                assert p.mean_dy_px == pytest.approx(rate, abs=1e-9)
                assert p.count == 5

    def test_overlapping_regions_both_receive(self):
        pts = [(0, 5.0, 10.0), (1, 5.0, 8.0)]
        disp = track_displacements([Track(id=0, points=pts)])
        regions = [Region("a", 0, 0, 10, 20), Region("b", 0, 0, 20, 20)]
        out = regional_growth_series(disp, regions)
        assert out["a"].points[1].count == 1
        assert out["b"].points[1].count == 1

    def test_empty_region_list_rejected(self):
        with pytest.raises(ValueError):
            regional_growth_series([], [])


class TestOrientationSeries:
    def test_mean_and_population_std(self):
        tracks = [
            Track(id=0, points=[(0, 0.0, 10.0), (1, 3.0, 6.0)]),   # theta 36.87
            Track(id=1, points=[(0, 0.0, 10.0), (1, -3.0, 6.0)]),  # theta -36.87
        ]
        series = orientation_series(track_displacements(tracks))
        mean, std, count = series[1]
        assert mean == pytest.approx(0.0, abs=1e-9)
        assert std == pytest.approx(36.8699, abs=1e-4)
        assert count == 2

    def test_normal_spread_recovered(self):
        # theta ~ Normal(0, 30 deg), 1e4 samples: std within +/- 1 degree
        rng = np.random.default_rng(3)
        thetas = np.radians(rng.normal(0.0, 30.0, 10_000))
        disp = [
            decompose(i, 1, (0.0, 0.0), (5 * math.sin(t), -5 * math.cos(t)))
            for i, t in enumerate(thetas)
        ]
        _, std, count = orientation_series(disp)[1]
        assert count == 10_000
        assert abs(std - 30.0) < 1.0
