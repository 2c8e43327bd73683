"""Select the numba or pure-numpy kernel path.

Set ``CROWDBOUND_DISABLE_NUMBA=1`` before import to force the numpy path.
``CROWDBOUND_THREADS`` caps the parallelism of sweeps (0 or unset = auto).
"""

import os
import warnings

_DISABLED = os.environ.get("CROWDBOUND_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by CROWDBOUND_DISABLE_NUMBA")
    import numba
    from numba import njit, prange

    # an outdated system TBB is skipped by numba anyway; omp/workqueue take over
    warnings.filterwarnings("ignore", message="The TBB threading layer requires")

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator

    prange = range


def thread_cap(threads=None):
    """Resolve the number of worker threads for a sweep.

    ``threads=None`` reads ``CROWDBOUND_THREADS``; 0 means one per CPU.
    """
    if threads is None:
        raw = os.environ.get("CROWDBOUND_THREADS", "0").strip() or "0"
        try:
            threads = int(raw)
        except ValueError:
            threads = 0
    if threads < 0:
        raise ValueError("thread count must be >= 0")
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


def set_kernel_threads(threads):
    """Apply a thread cap to numba's parallel runtime; no-op on the numpy path."""
    if HAS_NUMBA:
        numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))
