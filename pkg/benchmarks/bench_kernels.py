"""Timing comparison of the numpy and numba kernel implementations.

Run with:

    python3 benchmarks/bench_kernels.py [--size 512] [--repeats 5]

The numba variants are called once before timing so JIT compilation is
not charged to the measurement.
"""

import argparse
import time

import numpy as np

from vftrack import kernels
from vftrack.synth import SynthConfig, generate


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def make_image(size):
    cfg = SynthConfig(
        seed=0, n_frames=1, n_particles=max(20, size * size // 3000),
        frame_width=size, frame_height=size,
    )
    return generate(cfg, render=True).frames[0].astype(np.float64)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=512)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    img = make_image(args.size)
    resp = kernels.corner_response_numpy(img)
    mask = kernels.local_maxima_numpy(resp, 1e-9)
    ys, xs = np.nonzero(mask)
    order = np.argsort(resp[ys, xs])[::-1]
    xs = xs[order].astype(np.float64)
    ys = ys[order].astype(np.float64)

    cases = [
        ("corner_response", lambda: kernels.corner_response_numpy(img),
         lambda: kernels.corner_response_numba(img)),
        ("local_maxima", lambda: kernels.local_maxima_numpy(resp, 1e-9),
         lambda: kernels.local_maxima_numba(resp, 1e-9)),
        ("greedy_nms", lambda: kernels.greedy_nms_numpy(xs, ys, 5.0, 2048),
         lambda: kernels.greedy_nms_numba(xs, ys, 5.0, 2048)),
        ("sample_patches", lambda: kernels.sample_patches_numpy(img, xs, ys),
         lambda: kernels.sample_patches_numba(img, xs, ys)),
    ]

    print(f"image {args.size}x{args.size}, {xs.size} candidate keypoints, "
          f"best of {args.repeats} runs")
    print(f"{'kernel':<16} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, f_np, f_nb in cases:
        f_nb()  # warm the JIT
        t_np = timeit(f_np, args.repeats)
        t_nb = timeit(f_nb, args.repeats)
        print(f"{name:<16} {t_np * 1e3:>10.3f}ms {t_nb * 1e3:>10.3f}ms "
              f"{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
