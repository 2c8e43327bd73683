"""Time the numba and numpy group-estimate kernels on the same workload.

Usage::

    python3 benchmarks/bench_kernels.py --n 50 --reps 200000 --repeat 5

Both paths are imported in one process; the numba path needs numba installed
and ``CROWDBOUND_DISABLE_NUMBA`` unset.
"""

import argparse
import math
import timeit

import numpy as np

from crowdbound import _backend, kernels
from crowdbound.rng import stream_key


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=50, help="group size (default: %(default)s)")
    parser.add_argument("--reps", type=int, default=200_000, help="groups per call (default: %(default)s)")
    parser.add_argument("--repeat", type=int, default=5, help="timed repetitions (default: %(default)s)")
    parser.add_argument("--sigma", type=float, default=2.0, help="log-normal sigma (default: %(default)s)")
    args = parser.parse_args(argv)

    if not _backend.HAS_NUMBA:
        parser.error("numba is unavailable or disabled; nothing to compare")

    key = stream_key(0)
    work = (kernels.LOGNORMAL, math.log(2.0), args.sigma)

    def run_numba():
        return kernels.group_estimates_numba(*work, np.uint64(key), args.n, args.reps, 1 / 3)

    def run_numpy():
        return kernels.group_estimates_numpy(*work, key, args.n, args.reps, 1 / 3)

    run_numba()  # compile outside the timing
    draws = args.n * args.reps
    timings = {}
    for name, fn in (("numba", run_numba), ("numpy", run_numpy)):
        best = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        timings[name] = best
        print(f"{name:>6}: {best * 1e3:9.1f} ms  ({draws / best / 1e6:7.1f} M draws/s)")

    a, b = run_numba(), run_numpy()
    rel = max(float(np.max(np.abs(x - y) / np.abs(y))) for x, y in zip(a, b))
    print(f"speedup numba/numpy: {timings['numpy'] / timings['numba']:.2f}x, "
          f"threads={_backend.numba.get_num_threads()}, max rel diff {rel:.1e}")


if __name__ == "__main__":
    main()
