"""Synthetic growth sequences with exact ground truth.

Particles climb the frame (image y decreases) at a configured growth
rate, drift sideways, and oscillate: each step's angle is perturbed by
a zero-mean normal whose std ramps linearly over the sequence.  The
generator emits ground-truth tracks, per-frame keypoint streams, true
match correspondences, and (optionally) rendered grayscale frames.

Rendered particles are a radially symmetric Gaussian core carrying a
per-particle random band-limited texture on a surrounding annulus.
The symmetric core keeps the corner-response peak unbiased at the
particle center; the annulus texture rides outside the response
window but inside the descriptor patch, making the blobs separable
by appearance, which identical Gaussians are not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .types import Descriptor, Keypoint, Track, TERMINATED

__all__ = ["SynthConfig", "SynthResult", "generate"]

_SPAWN_MARGIN = 12.0
_RETIRE_MARGIN = 10.0
_MIN_SPACING = 12.0  # Chebyshev, at spawn time
_STAMP_RADIUS = 7
_CORE_SIGMA = 1.4
_CORE_PEAK = 255.0
_TEX_COMPONENTS = 12
_TEX_AMPLITUDE = 90.0
_TEX_FREQ_LO = 0.9  # rad/px; much lower and the texture forms its own corners
_TEX_FREQ_HI = 1.6
_TEX_R_IN = 3.0  # annulus bounds keep texture off the response window
_TEX_R_OUT = 5.5
_DESCRIPTOR_DIM = 64


@dataclass(frozen=True)
class SynthConfig:
    n_frames: int = 100
    n_particles: int = 200
    growth_px_per_frame: float = 3.0
    drift_px_per_frame: float = 0.5
    oscillation_std_start_deg: float = 0.0
    oscillation_std_end_deg: float = 50.0
    position_noise_px: float = 0.5
    spawn_rate: float | None = None  # None: replenish back to n_particles
    survival_prob: float = 0.95
    seed: int = 0
    frame_width: int = 768
    frame_height: int = 768

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if not (0.0 <= self.survival_prob <= 1.0):
            raise ValueError("survival_prob must be in [0, 1]")
        if self.position_noise_px < 0:
            raise ValueError("position_noise_px must be >= 0")
        if self.frame_width < 64 or self.frame_height < 64:
            raise ValueError("frame must be at least 64x64")


@dataclass
class _Particle:
    track_id: int
    x: float  # true position
    y: float
    tex_fx: np.ndarray  # texture wave vectors, rigid with the particle
    tex_fy: np.ndarray
    tex_phase: np.ndarray
    descriptor: np.ndarray


@dataclass
class SynthResult:
    tracks: list[Track]
    keypoints_by_frame: list[list[tuple[Keypoint, Descriptor]]]
    matches_by_frame: dict[int, list[tuple[int, int]]]  # frame t -> (prev, curr) local indices
    frames: list[np.ndarray] | None  # rendered uint8 frames when requested


def _oscillation_std(config: SynthConfig, frame: int) -> float:
    if config.n_frames < 2:
        return config.oscillation_std_start_deg
    t = frame / (config.n_frames - 1)
    return (
        config.oscillation_std_start_deg
        + (config.oscillation_std_end_deg - config.oscillation_std_start_deg) * t
    )


def _spawn_position(rng, config, alive):
    w, h = config.frame_width, config.frame_height
    if alive:
        px = np.array([p.x for p in alive])
        py = np.array([p.y for p in alive])
    else:
        px = py = None
    for _ in range(200):
        x = rng.uniform(_SPAWN_MARGIN, w - _SPAWN_MARGIN)
        y = rng.uniform(_SPAWN_MARGIN, h - _SPAWN_MARGIN)
        if px is None or np.maximum(np.abs(px - x), np.abs(py - y)).min() >= _MIN_SPACING:
            return x, y
    return None


def _spawn_texture(rng):
    """Random wave vectors and phases for one particle's annulus texture."""
    freq = rng.uniform(_TEX_FREQ_LO, _TEX_FREQ_HI, _TEX_COMPONENTS)
    angle = rng.uniform(0.0, 2.0 * math.pi, _TEX_COMPONENTS)
    phase = rng.uniform(0.0, 2.0 * math.pi, _TEX_COMPONENTS)
    return freq * np.cos(angle), freq * np.sin(angle), phase


def _render(config: SynthConfig, positions, particles) -> np.ndarray:
    h, w = config.frame_height, config.frame_width
    img = np.zeros((h, w), dtype=np.float64)
    if not particles:
        return img.astype(np.uint8)
    side = 2 * _STAMP_RADIUS + 2
    cx = np.array([p[0] for p in positions])
    cy = np.array([p[1] for p in positions])
    x0 = np.floor(cx).astype(np.intp) - _STAMP_RADIUS
    y0 = np.floor(cy).astype(np.intp) - _STAMP_RADIUS
    grid = np.arange(side, dtype=np.float64)
    u = x0[:, None] + grid - cx[:, None]  # (n, side) offsets from center
    v = y0[:, None] + grid - cy[:, None]
    r = np.hypot(u[:, None, :], v[:, :, None])
    core = _CORE_PEAK * np.exp(-(r * r) / (2.0 * _CORE_SIGMA**2))
    taper = np.clip(np.minimum(r - _TEX_R_IN, _TEX_R_OUT - r), 0.0, 1.0)
    fx = np.array([p.tex_fx for p in particles])  # (n, K)
    fy = np.array([p.tex_fy for p in particles])
    phase = np.array([p.tex_phase for p in particles])
    arg = (
        u[:, None, :, None] * fx[:, None, None, :]
        + v[:, :, None, None] * fy[:, None, None, :]
        + phase[:, None, None, :]
    )
    s = np.cos(arg).sum(axis=3)
    norm = math.sqrt(_TEX_COMPONENTS)
    stamps = core + _TEX_AMPLITUDE * taper * (s / norm + 1.0) / 2.0
    for i in range(len(particles)):
        ax0, ay0 = max(x0[i], 0), max(y0[i], 0)
        ax1, ay1 = min(x0[i] + side, w), min(y0[i] + side, h)
        if ax0 < ax1 and ay0 < ay1:
            img[ay0:ay1, ax0:ax1] += stamps[
                i, ay0 - y0[i] : ay1 - y0[i], ax0 - x0[i] : ax1 - x0[i]
            ]
    return np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)


def generate(config: SynthConfig, render: bool = False) -> SynthResult:
    """Deterministic per seed: identical configs produce identical output."""
    rng = np.random.default_rng(config.seed)
    w, h = config.frame_width, config.frame_height
    theta_base = math.atan2(config.drift_px_per_frame, config.growth_px_per_frame)
    step_len = math.hypot(config.growth_px_per_frame, config.drift_px_per_frame)

    alive: list[_Particle] = []
    track_points: dict[int, list[tuple[int, float, float]]] = {}
    next_id = 0

    def spawn(frame: int):
        nonlocal next_id
        pos = _spawn_position(rng, config, alive)
        if pos is None:
            return False
        fx, fy, phase = _spawn_texture(rng)
        desc = rng.standard_normal(_DESCRIPTOR_DIM)
        p = _Particle(track_id=next_id, x=pos[0], y=pos[1],
                      tex_fx=fx, tex_fy=fy, tex_phase=phase,
                      descriptor=desc / np.linalg.norm(desc))
        next_id += 1
        alive.append(p)
        track_points[p.track_id] = []
        return True

    keypoints_by_frame: list[list[tuple[Keypoint, Descriptor]]] = []
    matches_by_frame: dict[int, list[tuple[int, int]]] = {}
    frames: list[np.ndarray] | None = [] if render else None

    for _ in range(config.n_particles):
        spawn(0)

    prev_local: dict[int, int] = {}
    for frame in range(config.n_frames):
        if frame > 0:
            sigma = math.radians(_oscillation_std(config, frame))
            survivors = []
            for p in alive:
                if rng.uniform() >= config.survival_prob:
                    continue  # particle no longer trackable
                theta = theta_base + rng.normal(0.0, sigma)
                p.x += step_len * math.sin(theta)
                p.y -= step_len * math.cos(theta)
                if (
                    p.x < _RETIRE_MARGIN
                    or p.x > w - _RETIRE_MARGIN
                    or p.y < _RETIRE_MARGIN
                    or p.y > h - _RETIRE_MARGIN
                ):
                    continue  # blob would leave the frame
                survivors.append(p)
            alive[:] = survivors
            if config.spawn_rate is None:
                while len(alive) < config.n_particles:
                    if not spawn(frame):
                        break
            else:
                for _ in range(rng.poisson(config.spawn_rate)):
                    spawn(frame)

        # observed = true + per-frame measurement jitter; ground truth,
        # keypoint stream and rendering all use the observed position
        feats = []
        curr_local: dict[int, int] = {}
        observed = []
        for local, p in enumerate(alive):
            ox = p.x + rng.normal(0.0, config.position_noise_px)
            oy = p.y + rng.normal(0.0, config.position_noise_px)
            observed.append((ox, oy))
            track_points[p.track_id].append((frame, ox, oy))
            kp = Keypoint(frame_index=frame, x=ox, y=oy, response=1.0,
                          local_index=local)
            feats.append((kp, Descriptor(p.descriptor)))
            curr_local[p.track_id] = local
        keypoints_by_frame.append(feats)
        if frame > 0:
            matches_by_frame[frame] = sorted(
                (prev_local[tid], curr_local[tid])
                for tid in curr_local
                if tid in prev_local
            )
        prev_local = curr_local
        if render:
            frames.append(_render(config, observed, alive))

    tracks = [
        Track(id=tid, points=pts, state=TERMINATED)
        for tid, pts in sorted(track_points.items())
        if pts
    ]
    return SynthResult(
        tracks=tracks,
        keypoints_by_frame=keypoints_by_frame,
        matches_by_frame=matches_by_frame,
        frames=frames,
    )
