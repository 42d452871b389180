"""Time the classification kernels of every available backend.

    python benchmarks/bench_kernels.py [--points 20000] [--repeat 3]

For each (variant, d) a random radial store is built, points are drawn in
its boundary cubes, and each backend classifies the same batch per cube.
Labels are compared across backends before timings are reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from resistar.boundary import build_store
from resistar.grid import GridSpec
from resistar.kernels import backends
from resistar.oracle import random_radial

CASES = (("cube", 3, 12), ("cube", 5, 5), ("kuhn", 3, 12), ("kuhn", 5, 5))


def workload(variant: str, d: int, n: int, points: int, seed: int = 0):
    s = build_store(random_radial(d, 10, 0.3, seed), GridSpec(d, n), variant, 8)
    rng = np.random.default_rng(seed)
    cubes = list(s.cube_ids())
    per = max(1, points // len(cubes))
    delta = 1e-6 * (n - 1)
    return [(s.cube_arrays(c), rng.random((per, d))) for c in cubes], delta


def run(mod, variant: str, jobs, delta: float) -> tuple[float, np.ndarray]:
    start = time.perf_counter()
    out = []
    for data, xs in jobs:
        if variant == "cube":
            out.append(mod.classify_cube_batch(data.local, data.mask_minus, data.mask_plus, xs, delta))
        else:
            out.append(mod.classify_simplex_batch(data.mask_minus, data.mask_plus, data.t, xs, delta))
    return time.perf_counter() - start, np.concatenate(out)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    mods = backends()
    if "cython" not in mods:
        print("compiled extension not built; only the Python backend is timed")
    print(f"{'variant':8}{'d':>3}{'points':>9}" + "".join(f"{name + ' s':>12}" for name in mods) + f"{'speedup':>10}")
    for variant, d, n in CASES:
        jobs, delta = workload(variant, d, n, args.points)
        total = sum(len(xs) for _, xs in jobs)
        best = {}
        labels = {}
        for name, mod in mods.items():
            times = []
            for _ in range(args.repeat):
                t, labels[name] = run(mod, variant, jobs, delta)
                times.append(t)
            best[name] = min(times)
        ref = labels["python"]
        for name, lab in labels.items():
            if not np.array_equal(lab, ref):
                raise SystemExit(f"{name} disagrees with the Python backend on {variant} d={d}")
        speed = f"{best['python'] / best['cython']:.1f}x" if "cython" in best else "-"
        print(f"{variant:8}{d:>3}{total:>9}" + "".join(f"{best[k]:>12.3f}" for k in mods) + f"{speed:>10}")


if __name__ == "__main__":
    main()
