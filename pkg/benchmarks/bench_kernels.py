"""Time the compiled kernels against the numpy fallback on metric-sized inputs.

    python benchmarks/bench_kernels.py [--n 2000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from tabsynth._kernels import _pykernels

try:
    from tabsynth._kernels import _ckernels
except ImportError:
    _ckernels = None


def _cases(n, rng):
    X = rng.normal(size=(n, 12))
    Y = rng.normal(size=(n, 12))
    r = np.full(n, 2.0)
    t = rng.exponential(size=n)
    e = (rng.random(n) < 0.7).astype(np.int64)
    s = rng.normal(size=n)
    cum = np.cumsum(rng.dirichlet(np.ones(8), size=50), axis=1)
    rows = rng.integers(0, 50, size=20 * n)
    u = rng.random(20 * n)
    return {
        "nearest_sq": lambda k: k.nearest_sq(X, Y),
        "kth_neighbor_sq": lambda k: k.kth_neighbor_sq(X, 5),
        "prdc_counts": lambda k: k.prdc_counts(X, Y, r, r),
        "rbf_sum": lambda k: k.rbf_sum(X, Y, 0.1),
        "concordance_counts": lambda k: k.concordance_counts(t, e, s),
        "sample_categorical": lambda k: k.sample_categorical(cum, rows, u),
    }


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    cases = _cases(args.n, np.random.default_rng(0))
    print(f"{'kernel':<20} {'numpy s':>10} {'cython s':>10} {'speedup':>8}")
    for name, call in cases.items():
        py = _best(lambda: call(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<20} {py:>10.4f} {'n/a':>10} {'':>8}")
            continue
        cy = _best(lambda: call(_ckernels), args.repeat)
        print(f"{name:<20} {py:>10.4f} {cy:>10.4f} {py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
