"""Counter-based uniform streams built on the SplitMix64 output function.

Draw ``i`` of the stream keyed by ``seed`` is ``fmix(key + (i + 1) * GAMMA)``
with ``key = fmix(seed)``, i.e. exactly the SplitMix64 sequence started from
state ``key``. Any draw can be computed independently of every other one,
which makes parallel and chunked evaluation reproducible.
"""

import numpy as np

from ._backend import njit
from .errors import ParameterDomainError

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB
_UNIT = 2.0**-53


def check_seed(seed):
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise ParameterDomainError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ParameterDomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def fmix64(z):
    """SplitMix64 output function on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _C1) & MASK64
    z = ((z ^ (z >> 27)) * _C2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed):
    return fmix64(check_seed(seed))


def mix_seed(seed, *indices):
    """Stateless 64-bit mix of a seed with any number of nonnegative indices."""
    h = fmix64(check_seed(seed))
    for idx in indices:
        h = fmix64((h ^ fmix64((int(idx) + 1) * GAMMA)) + GAMMA)
    return h


def uniforms(key, start, count):
    """Draws ``start .. start+count-1`` of the stream ``key`` as floats in (0, 1)."""
    counters = np.arange(count, dtype=np.uint64) + np.uint64(start + 1)
    z = np.uint64(key) + counters * np.uint64(GAMMA)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_C1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_C2)
    z ^= z >> np.uint64(31)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _UNIT


@njit(cache=True)
def uniform_at(key, i):
    z = key + (np.uint64(i) + np.uint64(1)) * np.uint64(GAMMA)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_C1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_C2)
    z ^= z >> np.uint64(31)
    return (np.float64(z >> np.uint64(11)) + 0.5) * _UNIT
