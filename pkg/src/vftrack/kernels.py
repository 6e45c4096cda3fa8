"""Hot numeric kernels for the native detector.

Every kernel has a pure-numpy implementation and a numba ``@njit``
twin.  The active path is chosen once at import time from the
``VFTRACK_NUMBA`` environment variable: set ``VFTRACK_NUMBA=0`` to
force the numpy fallback (numba is also skipped automatically when it
cannot be imported).  Both paths are kept behaviorally equivalent;
``benchmarks/bench_kernels.py`` compares them.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "corner_response",
    "local_maxima",
    "greedy_nms",
    "sample_patches",
]


def _numba_requested() -> bool:
    return os.environ.get("VFTRACK_NUMBA", "1") != "0"


try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f

        return deco if not (args and callable(args[0])) else args[0]


NUMBA_ENABLED = _HAVE_NUMBA and _numba_requested()


# ---------------------------------------------------------------------------
# Shi-Tomasi corner response: minimum eigenvalue of the 5x5-windowed
# structure tensor built from 3x3 Sobel gradients.  A 3-pixel border
# (1 Sobel + 2 window) is left at zero.
# ---------------------------------------------------------------------------

def corner_response_numpy(gray: np.ndarray) -> np.ndarray:
    g = np.asarray(gray, dtype=np.float64)
    h, w = g.shape
    gx = np.zeros_like(g)
    gy = np.zeros_like(g)
    gx[1:-1, 1:-1] = (
        (g[:-2, 2:] + 2.0 * g[1:-1, 2:] + g[2:, 2:])
        - (g[:-2, :-2] + 2.0 * g[1:-1, :-2] + g[2:, :-2])
    )
    gy[1:-1, 1:-1] = (
        (g[2:, :-2] + 2.0 * g[2:, 1:-1] + g[2:, 2:])
        - (g[:-2, :-2] + 2.0 * g[:-2, 1:-1] + g[:-2, 2:])
    )
    gxx = gx * gx
    gyy = gy * gy
    gxy = gx * gy

    def box5(a):
        # separable 5x5 box sum, valid region only
        s = a[:, :-4] + a[:, 1:-3] + a[:, 2:-2] + a[:, 3:-1] + a[:, 4:]
        return s[:-4] + s[1:-3] + s[2:-2] + s[3:-1] + s[4:]

    sxx = box5(gxx)
    syy = box5(gyy)
    sxy = box5(gxy)
    tr = sxx + syy
    det_disc = np.sqrt((sxx - syy) ** 2 + 4.0 * sxy * sxy)
    lam = 0.5 * (tr - det_disc)
    resp = np.zeros((h, w), dtype=np.float64)
    resp[2:-2, 2:-2] = lam
    # border rows/cols of lam include Sobel-invalid pixels; zero them too
    resp[:3, :] = 0.0
    resp[-3:, :] = 0.0
    resp[:, :3] = 0.0
    resp[:, -3:] = 0.0
    return resp


@njit(cache=True)
def _corner_response_nb(g):
    h, w = g.shape
    gx = np.zeros((h, w), dtype=np.float64)
    gy = np.zeros((h, w), dtype=np.float64)
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            gx[y, x] = (
                g[y - 1, x + 1] + 2.0 * g[y, x + 1] + g[y + 1, x + 1]
                - g[y - 1, x - 1] - 2.0 * g[y, x - 1] - g[y + 1, x - 1]
            )
            gy[y, x] = (
                g[y + 1, x - 1] + 2.0 * g[y + 1, x] + g[y + 1, x + 1]
                - g[y - 1, x - 1] - 2.0 * g[y - 1, x] - g[y - 1, x + 1]
            )
    resp = np.zeros((h, w), dtype=np.float64)
    for y in range(3, h - 3):
        for x in range(3, w - 3):
            sxx = 0.0
            syy = 0.0
            sxy = 0.0
            for dy in range(-2, 3):
                for dx in range(-2, 3):
                    a = gx[y + dy, x + dx]
                    b = gy[y + dy, x + dx]
                    sxx += a * a
                    syy += b * b
                    sxy += a * b
            tr = sxx + syy
            disc = np.sqrt((sxx - syy) ** 2 + 4.0 * sxy * sxy)
            resp[y, x] = 0.5 * (tr - disc)
    return resp


def corner_response_numba(gray: np.ndarray) -> np.ndarray:
    return _corner_response_nb(np.ascontiguousarray(gray, dtype=np.float64))


# ---------------------------------------------------------------------------
# Local maxima with deterministic plateau tie-breaking: on equal-valued
# plateaus the pixel earliest in (y, x) scan order wins.
# ---------------------------------------------------------------------------

def local_maxima_numpy(resp: np.ndarray, threshold: float) -> np.ndarray:
    r = resp
    h, w = r.shape
    c = r[1:-1, 1:-1]
    ok = c > threshold
    # strictly greater than neighbors earlier in scan order
    ok &= c > r[:-2, :-2]
    ok &= c > r[:-2, 1:-1]
    ok &= c > r[:-2, 2:]
    ok &= c > r[1:-1, :-2]
    # >= neighbors later in scan order
    ok &= c >= r[1:-1, 2:]
    ok &= c >= r[2:, :-2]
    ok &= c >= r[2:, 1:-1]
    ok &= c >= r[2:, 2:]
    mask = np.zeros((h, w), dtype=np.bool_)
    mask[1:-1, 1:-1] = ok
    return mask


@njit(cache=True)
def _local_maxima_nb(r, threshold):
    h, w = r.shape
    mask = np.zeros((h, w), dtype=np.bool_)
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            v = r[y, x]
            if v <= threshold:
                continue
            if (
                v > r[y - 1, x - 1]
                and v > r[y - 1, x]
                and v > r[y - 1, x + 1]
                and v > r[y, x - 1]
                and v >= r[y, x + 1]
                and v >= r[y + 1, x - 1]
                and v >= r[y + 1, x]
                and v >= r[y + 1, x + 1]
            ):
                mask[y, x] = True
    return mask


def local_maxima_numba(resp: np.ndarray, threshold: float) -> np.ndarray:
    return _local_maxima_nb(np.ascontiguousarray(resp, dtype=np.float64), threshold)


# ---------------------------------------------------------------------------
# Greedy non-max suppression on refined positions.  Candidates arrive in
# priority order (descending response); a candidate is accepted only if
# its Chebyshev distance to every accepted point exceeds `radius`.
# ---------------------------------------------------------------------------

def greedy_nms_numpy(xs, ys, radius: float, limit: int) -> np.ndarray:
    acc_x = np.empty(min(limit, xs.size))
    acc_y = np.empty(min(limit, xs.size))
    keep = []
    n_acc = 0
    for i in range(xs.size):
        if n_acc >= limit:
            break
        if n_acc:
            d = np.maximum(
                np.abs(acc_x[:n_acc] - xs[i]), np.abs(acc_y[:n_acc] - ys[i])
            )
            if d.min() <= radius:
                continue
        acc_x[n_acc] = xs[i]
        acc_y[n_acc] = ys[i]
        n_acc += 1
        keep.append(i)
    return np.asarray(keep, dtype=np.int64)


@njit(cache=True)
def _greedy_nms_nb(xs, ys, radius, limit):
    n = xs.size
    cap = limit if limit < n else n
    acc_x = np.empty(cap, dtype=np.float64)
    acc_y = np.empty(cap, dtype=np.float64)
    keep = np.empty(cap, dtype=np.int64)
    n_acc = 0
    for i in range(n):
        if n_acc >= limit:
            break
        ok = True
        for j in range(n_acc):
            dx = abs(acc_x[j] - xs[i])
            dy = abs(acc_y[j] - ys[i])
            d = dx if dx > dy else dy
            if d <= radius:
                ok = False
                break
        if ok:
            acc_x[n_acc] = xs[i]
            acc_y[n_acc] = ys[i]
            keep[n_acc] = i
            n_acc += 1
    return keep[:n_acc]


def greedy_nms_numba(xs, ys, radius: float, limit: int) -> np.ndarray:
    return _greedy_nms_nb(
        np.ascontiguousarray(xs, dtype=np.float64),
        np.ascontiguousarray(ys, dtype=np.float64),
        float(radius),
        int(limit),
    )


# ---------------------------------------------------------------------------
# Bilinear 8x8 patch sampling around sub-pixel centers (raw intensities;
# normalization happens in the caller).
# ---------------------------------------------------------------------------

_PATCH_OFFSETS = np.arange(8, dtype=np.float64) - 3.5


def sample_patches_numpy(gray: np.ndarray, xs, ys) -> np.ndarray:
    g = np.asarray(gray, dtype=np.float64)
    px = xs[:, None, None] + _PATCH_OFFSETS[None, None, :]
    py = ys[:, None, None] + _PATCH_OFFSETS[None, :, None]
    x0 = np.floor(px).astype(np.int64)
    y0 = np.floor(py).astype(np.int64)
    fx = px - x0
    fy = py - y0
    v = (
        g[y0, x0] * (1 - fy) * (1 - fx)
        + g[y0, x0 + 1] * (1 - fy) * fx
        + g[y0 + 1, x0] * fy * (1 - fx)
        + g[y0 + 1, x0 + 1] * fy * fx
    )
    return v.reshape(xs.size, 64)


@njit(cache=True)
def _sample_patches_nb(g, xs, ys, offsets):
    n = xs.size
    out = np.empty((n, 64), dtype=np.float64)
    for i in range(n):
        k = 0
        for r in range(8):
            py = ys[i] + offsets[r]
            y0 = int(np.floor(py))
            fy = py - y0
            for c in range(8):
                px = xs[i] + offsets[c]
                x0 = int(np.floor(px))
                fx = px - x0
                out[i, k] = (
                    g[y0, x0] * (1 - fy) * (1 - fx)
                    + g[y0, x0 + 1] * (1 - fy) * fx
                    + g[y0 + 1, x0] * fy * (1 - fx)
                    + g[y0 + 1, x0 + 1] * fy * fx
                )
                k += 1
    return out


def sample_patches_numba(gray: np.ndarray, xs, ys) -> np.ndarray:
    return _sample_patches_nb(
        np.ascontiguousarray(gray, dtype=np.float64),
        np.ascontiguousarray(xs, dtype=np.float64),
        np.ascontiguousarray(ys, dtype=np.float64),
        _PATCH_OFFSETS,
    )


if NUMBA_ENABLED:
    corner_response = corner_response_numba
    local_maxima = local_maxima_numba
    greedy_nms = greedy_nms_numba
    sample_patches = sample_patches_numba
else:
    corner_response = corner_response_numpy
    local_maxima = local_maxima_numpy
    greedy_nms = greedy_nms_numpy
    sample_patches = sample_patches_numpy
