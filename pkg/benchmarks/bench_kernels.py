"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--scene-res 128] [--repeat 3]

Times camera-grid interpolation at F = 1, 2, 4 and guided sampling of 10^6
points with every available backend and checks their outputs match bit for bit.
"""

import argparse
import time

import numpy as np

from psampler import kernels
from psampler.geometry import compute_bounds
from psampler.image_grid import interpolate_camera_grid, normalize
from psampler.sampler import build_tables, sample_guided
from psampler.scene_grid import build_scene_grid
from psampler.testbed import load_fixture


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scene-res", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--samples", type=int, default=1_000_000)
    args = ap.parse_args()

    scene = load_fixture("sphere.json")
    cam = scene.cameras[0]
    grid = build_scene_grid(scene.sdf, scene.boundary, args.scene_res, 50.0)
    bounds = compute_bounds(cam, scene.boundary)
    names = sorted(kernels.BACKENDS)
    print(f"backends: {', '.join(names)} (active: {kernels.BACKEND})")

    ref = {}
    for F in (1, 2, 4):
        row = []
        for name in names:
            t, g = best_of(lambda: interpolate_camera_grid(grid, cam, bounds, (64, 64, 128), F,
                                                          backend=name), args.repeat)
            ref.setdefault(F, g.raw_prob)
            same = np.array_equal(ref[F], g.raw_prob)
            row.append(f"{name} {t:8.3f} s{'' if same else ' MISMATCH'}")
        print(f"interp F={F}: " + " | ".join(row))

    tables = build_tables(normalize(interpolate_camera_grid(grid, cam, bounds, (64, 64, 128), 2)))
    first = None
    for name in names:
        t, s = best_of(lambda: sample_guided(tables, args.samples, 0, backend=name), args.repeat)
        first = s if first is None else first
        same = np.array_equal(first, s)
        print(f"sample {args.samples}: {name} {t:8.3f} s{'' if same else ' MISMATCH'}")


if __name__ == "__main__":
    main()
