#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallbacks.

Usage: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from mimosounder._core import BACKEND, kernels_py

try:
    from mimosounder._core import _kernels as ext
except ImportError:
    ext = None


def _time(fn, *args, reps=5):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_ray(n_ant=64, n_ray=37, n_sub=922):
    rng = np.random.default_rng(0)
    amps = np.ascontiguousarray(rng.random((n_ant, n_ray)))
    dists = np.ascontiguousarray(1.0 + 25.0 * rng.random((n_ant, n_ray)))
    freqs = 1.25e9 + np.arange(n_sub) * 19531.25
    w = np.ascontiguousarray(2 * np.pi * freqs / 299792458.0)
    rows = [("ray_accumulate "
             f"({n_ant} ant x {n_ray} rays x {n_sub} sub)", amps, dists, w)]
    for label, *args in rows:
        t_py = _time(kernels_py.ray_accumulate, *args)
        if ext is not None:
            t_ext = _time(ext.ray_accumulate, *args)
            print(f"{label}: python {t_py*1e3:8.2f} ms | "
                  f"cython {t_ext*1e3:8.2f} ms | speedup {t_py/t_ext:5.1f}x")
        else:
            print(f"{label}: python {t_py*1e3:8.2f} ms | extension not built")


def bench_quantize(n=4_000_000):
    rng = np.random.default_rng(1)
    x = np.ascontiguousarray(rng.normal(0.0, 0.012, n))
    t_py = _time(kernels_py.clip_quantize, x, 0.1, 223)
    if ext is not None:
        t_ext = _time(ext.clip_quantize, x, 0.1, 223)
        print(f"clip_quantize ({n/1e6:.0f} Msamples): "
              f"python {t_py*1e3:8.2f} ms | cython {t_ext*1e3:8.2f} ms | "
              f"speedup {t_py/t_ext:5.1f}x")
    else:
        print(f"clip_quantize: python {t_py*1e3:8.2f} ms | extension not built")


if __name__ == "__main__":
    print(f"active backend: {BACKEND}")
    bench_ray()
    bench_ray(n_ant=8, n_ray=25, n_sub=64)
    bench_quantize()
