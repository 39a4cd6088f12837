"""Benchmark the compiled extension against the numpy/scipy fallback.

Times the two hot loops (direct 2-D convolution and the sliding-window
minimum behind the dark channel) on realistic sizes and verifies both
implementations agree.  Run from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from satdeblur import _kernels_np
from satdeblur.kernels import HAVE_EXT

if HAVE_EXT:
    from satdeblur import _kernels
else:
    _kernels = None


def timeit(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def bench_convolve2d(rng):
    print("convolve2d (direct spatial convolution)")
    for size, ksize in ((128, 5), (256, 9), (512, 15)):
        img = rng.random((size, size))
        ker = rng.random((ksize, ksize))
        ref, t_np = timeit(_kernels_np.convolve2d, img, ker, False)
        line = f"  {size:4d}x{size:<4d} k={ksize:2d}: numpy {t_np * 1e3:8.2f} ms"
        if _kernels is not None:
            out, t_ext = timeit(_kernels.convolve2d, img, ker, False)
            err = np.abs(out - ref).max()
            line += f"   cython {t_ext * 1e3:8.2f} ms   speedup {t_np / t_ext:5.2f}x   maxdiff {err:.2e}"
            assert err < 1e-10, "implementations disagree"
        print(line)


def bench_window_min(rng):
    print("window_min (dark-channel sliding minimum)")
    for size, win in ((256, 5), (512, 5), (512, 15)):
        img = rng.random((size, size))
        ref, t_np = timeit(_kernels_np.window_min, img, win)
        line = f"  {size:4d}x{size:<4d} w={win:2d}: numpy {t_np * 1e3:8.2f} ms"
        if _kernels is not None:
            out, t_ext = timeit(_kernels.window_min, img, win)
            err = np.abs(out - ref).max()
            line += f"   cython {t_ext * 1e3:8.2f} ms   speedup {t_np / t_ext:5.2f}x   maxdiff {err:.2e}"
            assert err < 1e-12, "implementations disagree"
        print(line)


def main():
    print(f"compiled extension available: {HAVE_EXT}")
    rng = np.random.default_rng(0)
    bench_convolve2d(rng)
    bench_window_min(rng)


if __name__ == "__main__":
    main()
