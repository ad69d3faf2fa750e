"""Timing comparison of the compiled and pure-numpy kernel backends.

Runs the four loop-bound kernels on training-shaped inputs and prints the
per-call time of each backend plus the speedup.  Usage:

    python3 benchmarks/bench_kernels.py [--repeats 200]

The compiled backend is skipped (with a note) when the extension is not
built.
"""

import argparse
import time

import numpy as np

from riskadapt._kernels import pure
from riskadapt.distributions import midpoint_fractions

try:
    from riskadapt._kernels import _speedups
except ImportError:
    _speedups = None


def timed(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        begin = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - begin)
    return best


def bench_cases(rng):
    batch, n = 64, 32
    pred = rng.normal(size=(batch, n))
    target = rng.normal(size=(batch, n))
    taus = midpoint_fractions(n)

    n_params = 4000
    p = rng.normal(size=n_params)
    g = rng.normal(size=n_params)
    m = np.zeros(n_params)
    v = np.zeros(n_params)

    rows = rng.normal(size=(512, n))
    alphas = rng.uniform(0.0, 1.0, size=512)

    atoms = np.sort(rng.normal(size=256))
    weights = np.full(256, 1.0 / 256)

    return [
        ("quantile_huber", "quantile_huber",
         (np.ascontiguousarray(pred), np.ascontiguousarray(target), taus, 1.0)),
        ("adam_step", "adam_step",
         (p.copy(), g, m.copy(), v.copy(), 10, 1e-3, 0.9, 0.999, 1e-8)),
        ("distorted_expectation_rows", "distorted_expectation_rows",
         (np.ascontiguousarray(rows), alphas)),
        ("project_quantiles (bin mean)", "project_quantiles",
         (atoms, weights, 32, pure.PROJECT_BIN_MEAN)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=200,
                        help="timing repeats per kernel (best-of is reported)")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'kernel':<30} {'pure':>12} {'cython':>12} {'speedup':>9}")
    for label, name, call_args in bench_cases(rng):
        t_pure = timed(getattr(pure, name), call_args, args.repeats)
        if _speedups is None:
            print(f"{label:<30} {t_pure * 1e6:>10.1f}us {'missing':>12} {'-':>9}")
            continue
        t_fast = timed(getattr(_speedups, name), call_args, args.repeats)
        print(f"{label:<30} {t_pure * 1e6:>10.1f}us {t_fast * 1e6:>10.1f}us "
              f"{t_pure / t_fast:>8.1f}x")
    if _speedups is None:
        print("\ncompiled extension not built; showing pure-numpy times only")


if __name__ == "__main__":
    main()
