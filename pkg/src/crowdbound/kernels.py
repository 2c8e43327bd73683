"""Hot Monte Carlo kernels, each with a numba path and a pure-numpy path.

The public engines call :func:`group_estimates` and :func:`draw`, which
dispatch on :data:`crowdbound._backend.HAS_NUMBA`. Both implementations are
importable directly (``*_numba`` / ``*_numpy``) for benchmarking and
cross-checking. They agree to rounding, not bit-for-bit: the numpy path
uses scipy's ``ndtri`` and pairwise summation.
"""

import math

import numpy as np
from scipy.special import ndtri as _ndtri

from . import _backend
from ._backend import njit, prange
from .rng import uniform_at, uniforms

NORMAL, LOGNORMAL, PARETO, LOGLAPLACE = 0, 1, 2, 3

# max uniforms materialized at once by the numpy path
_CHUNK = 1 << 21


@njit(cache=True)
def ndtri_as241(p):
    """Inverse standard normal CDF, Wichura (1988) AS241 PPND16 (~1e-16 rel)."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@njit(cache=True)
def quantile_scalar(code, p1, p2, u):
    if code == NORMAL:
        return p1 + p2 * ndtri_as241(u)
    if code == LOGNORMAL:
        return math.exp(p1 + p2 * ndtri_as241(u))
    if code == PARETO:
        return p1 * (1.0 - u) ** (-1.0 / p2)
    # log-Laplace: Laplace quantile of the log
    if u < 0.5:
        return math.exp(p1 + p2 * math.log(2.0 * u))
    return math.exp(p1 - p2 * math.log(2.0 * (1.0 - u)))


def quantile_array(code, p1, p2, u):
    u = np.asarray(u, dtype=np.float64)
    if code == NORMAL:
        return p1 + p2 * _ndtri(u)
    if code == LOGNORMAL:
        return np.exp(p1 + p2 * _ndtri(u))
    if code == PARETO:
        return p1 * (1.0 - u) ** (-1.0 / p2)
    lo = u < 0.5
    y = np.where(lo, np.log(2.0 * np.where(lo, u, 0.5)), -np.log(2.0 * np.where(lo, 0.5, 1.0 - u)))
    return np.exp(p1 + p2 * y)


@njit(cache=True)
def draw_numba(code, p1, p2, key, count):
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        out[i] = quantile_scalar(code, p1, p2, uniform_at(key, i))
    return out


def draw_numpy(code, p1, p2, key, count):
    return quantile_array(code, p1, p2, uniforms(int(key), 0, count))


@njit(cache=True, parallel=True)
def group_estimates_numba(code, p1, p2, key, n, reps, omega):
    """Centralized and equal-weight collective estimates for ``reps`` groups.

    Group ``r`` uses draws ``r*n .. r*n+n-1``; the first is the influential agent.
    """
    central = np.empty(reps, dtype=np.float64)
    equal = np.empty(reps, dtype=np.float64)
    for r in prange(reps):
        base = r * n
        first = quantile_scalar(code, p1, p2, uniform_at(key, base))
        s = first
        for k in range(1, n):
            s += quantile_scalar(code, p1, p2, uniform_at(key, base + k))
        m = s / n
        equal[r] = m
        # m + omega*(a1 - m) is exact at omega=0 and at n=1
        central[r] = m + omega * (first - m)
    return central, equal


def group_estimates_numpy(code, p1, p2, key, n, reps, omega):
    central = np.empty(reps, dtype=np.float64)
    equal = np.empty(reps, dtype=np.float64)
    rows = max(1, _CHUNK // n)
    key = int(key)
    for r0 in range(0, reps, rows):
        r1 = min(reps, r0 + rows)
        x = quantile_array(code, p1, p2, uniforms(key, r0 * n, (r1 - r0) * n)).reshape(r1 - r0, n)
        m = x.sum(axis=1) / n
        equal[r0:r1] = m
        central[r0:r1] = m + omega * (x[:, 0] - m)
    return central, equal


def draw(code, p1, p2, key, count):
    if _backend.HAS_NUMBA:
        return draw_numba(code, float(p1), float(p2), np.uint64(key), int(count))
    return draw_numpy(code, float(p1), float(p2), key, int(count))


def group_estimates(code, p1, p2, key, n, reps, omega):
    if _backend.HAS_NUMBA:
        return group_estimates_numba(
            code, float(p1), float(p2), np.uint64(key), int(n), int(reps), float(omega)
        )
    return group_estimates_numpy(code, float(p1), float(p2), key, int(n), int(reps), float(omega))
