"""Time the numba and numpy plane-wave kernels on packet-sized problems.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--n-times 400]

The numba column is skipped when numba is unavailable or disabled through
``FERMISCAT_DISABLE_NUMBA``.
"""
import argparse
import time

import numpy as np

from fermiscat import kernels
from fermiscat._accel import HAVE_NUMBA


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n_times):
    rng = np.random.default_rng(7)
    x = np.linspace(-14.0, 14.0, 336)
    p = np.linspace(-3.0, 5.0, 201)
    amps = rng.normal(size=p.size) + 1j * rng.normal(size=p.size)
    w = np.sqrt(p**2 + 1.0)
    weights = rng.normal(size=x.size) + 0j
    times = np.linspace(0.0, 2.0, n_times)
    return [
        ("lambda(x) single time", kernels._plane_wave_sum_numpy, kernels._plane_wave_sum_numba, (x, p, amps, 1.0)),
        ("fourier over x", kernels._plane_wave_sum_numpy, kernels._plane_wave_sum_numba, (p[:8], x, weights, -1.0)),
        (f"lambda(x, t) x{n_times}", kernels._plane_wave_sum_t_numpy, kernels._plane_wave_sum_t_numba, (x, p, amps, w, times, 1.0)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n-times", type=int, default=400)
    args = ap.parse_args()

    print(f"{'kernel':28s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, f_np, f_nb, inputs in cases(args.n_times):
        t_np = best_of(lambda: f_np(*inputs), args.repeat)
        ref = f_np(*inputs)
        if HAVE_NUMBA:
            f_nb(*inputs)  # compile outside the timing
            t_nb = best_of(lambda: f_nb(*inputs), args.repeat)
            diff = np.max(np.abs(f_nb(*inputs) - ref))
            print(f"{name:28s} {1e3 * t_np:12.3f} {1e3 * t_nb:12.3f} {t_np / t_nb:8.2f} {diff:11.2e}")
        else:
            print(f"{name:28s} {1e3 * t_np:12.3f} {'-':>12s} {'-':>8s} {'-':>11s}")


if __name__ == "__main__":
    main()
