"""Compare the compiled and numpy dead-time kernels.

    python benchmarks/bench_deadtime.py [--events 1e6 3e6 1e7] [--repeat 3]

Each stream is a Poisson arrival sequence at the given rate. Both
backends must return identical masks and histograms; the table shows the
best-of-repeat wall time and the speed-up.
"""
import argparse
import sys
import time

import numpy as np

from atomjunction import _kernels_py

try:
    from atomjunction import _kernels
except ImportError:
    _kernels = None


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=float, nargs="+", default=[1e5, 1e6, 1e7])
    ap.add_argument("--rate", type=float, default=1.5e7, help="arrival rate (1/s)")
    ap.add_argument("--dead-time", type=float, default=32e-9, help="seconds")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace`", file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    width = 2e-3
    print(f"{'events':>10} {'kernel':>8} {'cython s':>10} {'numpy s':>10} {'speed-up':>9} {'equal':>6}")
    for n in (int(x) for x in args.events):
        times = np.cumsum(rng.exponential(1 / args.rate, n))
        nbins = int(times[-1] / width) + 1
        for name in ("filter", "bin"):
            if name == "filter":
                run_c = lambda: _kernels.deadtime_filter(times, args.dead_time, -np.inf)
                run_p = lambda: _kernels_py.deadtime_filter(times, args.dead_time, -np.inf)
            else:
                def run_c():
                    c = np.zeros(nbins, dtype=np.int64)
                    return c, _kernels.deadtime_bin(times, args.dead_time, -np.inf, 0.0, width, c)

                def run_p():
                    c = np.zeros(nbins, dtype=np.int64)
                    return c, _kernels_py.deadtime_bin(times, args.dead_time, -np.inf, 0.0, width, c)

            tc, oc = best_time(run_c, args.repeat)
            tp, op = best_time(run_p, args.repeat)
            same = np.array_equal(oc[0], op[0]) and oc[1] == op[1]
            print(f"{n:>10d} {name:>8} {tc:>10.4f} {tp:>10.4f} {tp / tc:>8.1f}x {str(same):>6}")
            if not same:
                return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
