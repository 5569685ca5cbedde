"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_core.py [--n 512] [--repeat 5]
"""

import argparse
import time

import numpy as np

from rwlab import _core_py

try:
    from rwlab import _core
except ImportError:
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--profiles", type=int, default=64)
    ap.add_argument("--terms", type=int, default=1 << 14)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    u = np.geomspace(0.5, 1e-9, args.n)
    tail = np.log1p(u[-1] / u)
    f = rng.random((args.n, args.profiles))
    coef = 1.0 / np.arange(1, args.terms + 1)
    z = 0.99 * np.exp(2j * np.pi * rng.random(256))

    cases = {
        "stieltjes_matrix": lambda m: m.stieltjes_matrix(u, tail),
        "stieltjes_apply": lambda m: m.stieltjes_apply(u, f, tail),
        "series_horner": lambda m: m.series_horner(coef, z),
    }
    print(f"{'kernel':<18} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8}")
    for name, fn in cases.items():
        tp = best_of(lambda: fn(_core_py), args.repeat)
        if _core is None:
            print(f"{name:<18} {tp:11.4f} {'n/a':>11} {'n/a':>8}")
            continue
        tc = best_of(lambda: fn(_core), args.repeat)
        print(f"{name:<18} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
