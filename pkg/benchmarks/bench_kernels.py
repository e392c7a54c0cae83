"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs each hot kernel and two end-to-end pipelines on both backends and
prints a timing table.  The outputs of the two backends are also compared:
they must be bitwise identical.

Usage: python benchmarks/bench_kernels.py [--cells 256] [--repeat 5]
"""

import argparse
import time

import numpy as np

import morreylab._accel as accel
from morreylab import CubeFamily, GridFunction, MorreyParams, SummedTable, morrey_norm
from morreylab.kernels import NUMBA_ENABLED, batch_box_sums, paint_max
from morreylab.maximal import maximal_exact


def timeit(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_box_sums(rng, cells, repeat):
    values = rng.uniform(0.0, 2.0, size=(cells, cells))
    table = SummedTable(values, 1.0 / cells).table64
    m = 200_000
    los = rng.uniform(0, cells * 0.9, size=(m, 2))
    his = los + rng.uniform(0, cells * 0.4, size=(m, 2))
    t_nb, out_nb = timeit(lambda: batch_box_sums(table, los, his, backend=True), repeat)
    t_np, out_np = timeit(lambda: batch_box_sums(table, los, his, backend=False), repeat)
    assert np.array_equal(out_nb, out_np), "backend outputs differ"
    return f"box_sums 2d ({m} cubes, {cells}^2 grid)", t_nb, t_np


def bench_paint(rng, cells, repeat):
    m = 50_000
    lo = rng.integers(0, cells - 8, size=(m, 2))
    hi = lo + rng.integers(1, 8, size=(m, 2))
    vals = rng.uniform(0, 1, size=m)

    def run(backend):
        out = np.zeros((cells, cells))
        paint_max(lo, hi, vals, out, backend=backend)
        return out

    t_nb, out_nb = timeit(lambda: run(True), repeat)
    t_np, out_np = timeit(lambda: run(False), repeat)
    assert np.array_equal(out_nb, out_np), "backend outputs differ"
    return f"paint_max 2d ({m} cubes, {cells}^2 grid)", t_nb, t_np


def with_backend(enabled, fn):
    old = accel.NUMBA_ENABLED
    accel.NUMBA_ENABLED = enabled
    try:
        return fn()
    finally:
        accel.NUMBA_ENABLED = old


def bench_norm(rng, cells, repeat):
    f = GridFunction([0.0, 0.0], 1.0 / cells, rng.uniform(0, 2, size=(cells, cells)))
    w = GridFunction([0.0, 0.0], 1.0 / cells, rng.uniform(0.2, 2, size=(cells, cells)))
    params = MorreyParams(2.0, 0.5)
    fam = CubeFamily.all_cubes()
    t_nb, r_nb = timeit(lambda: with_backend(True, lambda: morrey_norm(f, w, params, fam)), repeat)
    t_np, r_np = timeit(lambda: with_backend(False, lambda: morrey_norm(f, w, params, fam)), repeat)
    assert r_nb.value == r_np.value, "backend norms differ"
    return f"morrey_norm all-cubes ({cells}^2 grid)", t_nb, t_np


def bench_maximal(rng, cells, repeat):
    f = GridFunction([0.0, 0.0], 1.0 / cells, rng.uniform(0, 2, size=(cells, cells)))
    fam = CubeFamily.all_cubes()
    t_nb, r_nb = timeit(lambda: with_backend(True, lambda: maximal_exact(f, fam)), repeat)
    t_np, r_np = timeit(lambda: with_backend(False, lambda: maximal_exact(f, fam)), repeat)
    assert np.array_equal(r_nb.values, r_np.values), "backend fields differ"
    return f"maximal_exact all-cubes ({cells}^2 grid)", t_nb, t_np


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=64, help="grid cells per axis (2d)")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if not NUMBA_ENABLED:
        raise SystemExit(
            "numba backend is disabled (MORREYLAB_NO_NUMBA set or numba missing); "
            "nothing to compare"
        )
    rng = np.random.default_rng(0)
    # warm up the JIT before timing
    warm = np.zeros((4, 4))
    batch_box_sums(SummedTable(warm, 1.0).table64, [[0.0, 0.0]], [[2.0, 2.0]], backend=True)
    paint_max([[0, 0]], [[1, 1]], [1.0], warm.copy(), backend=True)

    rows = [
        bench_box_sums(rng, max(args.cells, 64), args.repeat),
        bench_paint(rng, max(args.cells, 64), args.repeat),
        bench_norm(rng, args.cells, args.repeat),
        bench_maximal(rng, min(args.cells, 48), args.repeat),
    ]
    w = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{w}}  {'numba':>9}  {'numpy':>9}  {'speedup':>8}")
    for name, t_nb, t_np in rows:
        print(f"{name:<{w}}  {t_nb * 1e3:8.2f}ms  {t_np * 1e3:8.2f}ms  {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
