#!/usr/bin/env python3
"""Benchmark the compiled logistic kernel against the numpy fallback.

Times the fused loss/gradient/Hessian evaluation across problem sizes and a
few end-to-end fits, printing a table with the speedup of the compiled
extension. Used to calibrate KERNEL_WORK_CUTOFF in emprobe._backend: below
the cutoff the fused single-pass loop wins on call overhead, above it numpy
hands the Hessian product to BLAS and wins on throughput.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from emprobe import _kernels_py

try:
    from emprobe import _kernels
except ImportError:
    _kernels = None


def time_call(fn, *args, min_time=0.2):
    fn(*args)  # warmup
    n, t0 = 0, time.perf_counter()
    while time.perf_counter() - t0 < min_time:
        fn(*args)
        n += 1
    return (time.perf_counter() - t0) / n


def bench_terms():
    rng = np.random.default_rng(0)
    print(f"{'n':>5} {'d':>5} {'work n(d+1)^2':>14} {'numpy':>10} "
          f"{'compiled':>10} {'speedup':>8}")
    for n, d in [(40, 5), (100, 10), (150, 20), (200, 30), (200, 50),
                 (200, 80), (200, 128), (240, 200), (300, 400)]:
        X = np.ascontiguousarray(rng.standard_normal((n, d)))
        s = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        w = rng.standard_normal(d)
        args = (X, s, w, 0.1, 1.0)
        t_py = time_call(_kernels_py.logistic_terms, *args)
        if _kernels is None:
            print(f"{n:>5} {d:>5} {n*(d+1)**2:>14} {t_py*1e6:>9.1f}u {'-':>10} {'-':>8}")
            continue
        t_cy = time_call(_kernels.logistic_terms, *args)
        print(f"{n:>5} {d:>5} {n*(d+1)**2:>14} {t_py*1e6:>9.1f}u "
              f"{t_cy*1e6:>9.1f}u {t_py/t_cy:>7.2f}x")


def bench_fits():
    import os
    from emprobe.linmod import fit_logistic

    rng = np.random.default_rng(1)
    print("\nend-to-end fit_logistic (median of repeats):")
    for n, d in [(150, 10), (200, 30), (200, 80), (200, 128)]:
        X = rng.standard_normal((n, d))
        X[:, 0] += 2.0 * (rng.random(n) < 0.5)
        y = (X[:, 0] > 1.0).astype(int)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        times = {}
        for mode in ("python", "auto"):
            os.environ["EMPROBE_KERNELS"] = mode
            times[mode] = time_call(fit_logistic, X, y, 1.0, min_time=0.4)
        os.environ.pop("EMPROBE_KERNELS", None)
        print(f"  n={n:<4} d={d:<4} python={times['python']*1e3:7.2f}ms "
              f"auto={times['auto']*1e3:7.2f}ms "
              f"speedup={times['python']/times['auto']:5.2f}x")


if __name__ == "__main__":
    backend = "missing (pure-python build)" if _kernels is None else "built"
    print(f"compiled extension: {backend}\n")
    bench_terms()
    bench_fits()
