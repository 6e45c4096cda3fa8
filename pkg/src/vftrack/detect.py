"""Per-frame keypoint production: native corner detector or JSON-lines import.

The native detector scores corners with the Shi-Tomasi minimum-eigenvalue
response (3x3 Sobel gradients, 5x5 window), refines maxima to sub-pixel
accuracy with a quadratic fit, suppresses neighbors within a 5 px
Chebyshev radius, and describes each keypoint by its bilinearly sampled
8x8 intensity patch (zero-mean, unit-norm, D=64).
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import kernels
from .images import Frame
from .types import Descriptor, Keypoint

__all__ = [
    "DESCRIPTOR_DIM",
    "BORDER_MARGIN",
    "NMS_RADIUS",
    "detect_native",
    "import_keypoints",
    "load_keypoints_file",
    "KeypointImportError",
]

DESCRIPTOR_DIM = 64
BORDER_MARGIN = 6
NMS_RADIUS = 5.0
_RESPONSE_FLOOR = 1e-9


class KeypointImportError(ValueError):
    pass


def _refine_subpixel(resp, ys, xs):
    """1-D quadratic peak interpolation in x and y, clamped to +/-0.5 px."""
    c = resp[ys, xs]
    lx = resp[ys, xs - 1]
    rx = resp[ys, xs + 1]
    uy = resp[ys - 1, xs]
    dy = resp[ys + 1, xs]
    den_x = lx - 2.0 * c + rx
    den_y = uy - 2.0 * c + dy
    with np.errstate(divide="ignore", invalid="ignore"):
        off_x = np.where(den_x < 0, 0.5 * (lx - rx) / den_x, 0.0)
        off_y = np.where(den_y < 0, 0.5 * (uy - dy) / den_y, 0.0)
    off_x = np.clip(np.nan_to_num(off_x), -0.5, 0.5)
    off_y = np.clip(np.nan_to_num(off_y), -0.5, 0.5)
    return xs + off_x, ys + off_y


def detect_native(frame: Frame, config) -> list[tuple[Keypoint, Descriptor]]:
    """Detect up to config.max_keypoints keypoints, strongest first."""
    gray = frame.intensities.astype(np.float64)
    h, w = gray.shape
    resp = kernels.corner_response(gray)

    mask = kernels.local_maxima(resp, _RESPONSE_FLOOR)
    # keypoints too close to the border cannot carry a full patch
    mask[:BORDER_MARGIN, :] = False
    mask[-BORDER_MARGIN:, :] = False
    mask[:, :BORDER_MARGIN] = False
    mask[:, -BORDER_MARGIN:] = False

    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return []
    scores = resp[ys, xs]
    # descending response; ties broken by (y, x) scan order
    order = np.lexsort((xs, ys, -scores))
    ys, xs, scores = ys[order], xs[order], scores[order]

    rx, ry = _refine_subpixel(resp, ys, xs)
    keep = kernels.greedy_nms(rx, ry, NMS_RADIUS, int(config.max_keypoints))
    rx, ry, scores = rx[keep], ry[keep], scores[keep]

    patches = kernels.sample_patches(gray, rx, ry)
    patches = patches - patches.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(patches, axis=1)

    out = []
    local_index = 0
    for i in range(rx.size):
        if norms[i] < 1e-9:
            continue  # featureless patch, cannot be described
        kp = Keypoint(
            frame_index=frame.index,
            x=float(rx[i]),
            y=float(ry[i]),
            response=float(scores[i]),
            local_index=local_index,
        )
        out.append((kp, Descriptor(patches[i] / norms[i])))
        local_index += 1
    return out


def _parse_keypoint_lines(path):
    records = []
    dim = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise KeypointImportError(f"{path}:{lineno}: invalid JSON: {e}") from None
            try:
                x = float(rec["x"])
                y = float(rec["y"])
                score = float(rec.get("score", 0.0))
                desc = [float(v) for v in rec["descriptor"]]
            except (KeyError, TypeError, ValueError):
                raise KeypointImportError(
                    f"{path}:{lineno}: record must have x, y, descriptor"
                ) from None
            if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(score)):
                raise KeypointImportError(f"{path}:{lineno}: non-finite value")
            if not all(math.isfinite(v) for v in desc):
                raise KeypointImportError(f"{path}:{lineno}: non-finite descriptor")
            if dim is None:
                dim = len(desc)
                if dim == 0:
                    raise KeypointImportError(f"{path}:{lineno}: empty descriptor")
            elif len(desc) != dim:
                raise KeypointImportError(
                    f"{path}:{lineno}: descriptor length {len(desc)} != {dim}"
                )
            frame = rec.get("frame")
            if frame is not None:
                frame = int(frame)
            records.append((frame, x, y, score, desc))
    return records


def load_keypoints_file(path, default_frame: int | None = None):
    """Load a JSON-lines keypoint file grouped by frame.

    Records without a ``frame`` field are assigned ``default_frame``.
    Returns {frame_index: [(Keypoint, Descriptor), ...]} with local
    indices assigned in file order within each frame.
    """
    by_frame: dict[int, list] = {}
    for frame, x, y, score, desc in _parse_keypoint_lines(path):
        if frame is None:
            if default_frame is None:
                raise KeypointImportError(
                    f"{path}: record lacks a frame field and no default frame given"
                )
            frame = default_frame
        feats = by_frame.setdefault(frame, [])
        kp = Keypoint(
            frame_index=frame,
            x=x,
            y=y,
            response=score,
            local_index=len(feats),
        )
        feats.append((kp, Descriptor(desc)))
    return by_frame


def import_keypoints(path, frame_index: int) -> list[tuple[Keypoint, Descriptor]]:
    """Import externally computed features for one frame."""
    by_frame = load_keypoints_file(path, default_frame=frame_index)
    return by_frame.get(frame_index, [])
