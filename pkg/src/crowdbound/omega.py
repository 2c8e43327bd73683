"""Probability that a centralized collective estimate beats the equal-weight one.

``estimate_omega`` is the Monte Carlo estimator, ``lower_bound`` the
analytical floor ``sup_{beta > theta/(1-omega)} F(beta) (1 - F(n beta)^(n-1))``,
``phase_diagram`` sweeps it over a (mu, sigma) grid.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import _backend, kernels
from .distributions import DistributionSpec, Family, cdf, quantile, sf
from .errors import InfeasibleConstraintError, ParameterDomainError
from .rng import check_seed, mix_seed, stream_key

PHASE_CSV_HEADER = ("mu", "sigma", "omega_value", "std_error", "reps")

_GRID_POINTS = 256
_Q_LO = 1e-6
_Q_HI = 1.0 - 1e-9
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OmegaEstimate:
    value: float
    std_error: float
    reps: int

    @classmethod
    def from_count(cls, wins: int, reps: int) -> "OmegaEstimate":
        p = wins / reps
        return cls(p, math.sqrt(p * (1.0 - p) / reps), reps)


@dataclass(frozen=True)
class BoundResult:
    value: float
    beta_star: float
    feasible_from: float


class Loss(str, enum.Enum):
    ABSOLUTE = "absolute"
    SQUARED = "squared"


def _check_common(theta, n, omega, reps=None):
    theta = float(theta)
    if not (theta > 0.0 and math.isfinite(theta)):
        raise ParameterDomainError(f"theta must be a positive real, got {theta}")
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"n must be a positive integer, got {n!r}")
    omega = float(omega)
    if not 0.0 <= omega <= 1.0:
        raise ParameterDomainError(f"omega must lie in [0, 1], got {omega}")
    if reps is not None and (int(reps) != reps or reps < 1):
        raise ParameterDomainError(f"reps must be a positive integer, got {reps!r}")
    return theta, int(n), omega


def simulate_groups(spec: DistributionSpec, n: int, omega: float, reps: int, seed: int):
    """Centralized and equal-weight collective estimates of ``reps`` independent groups."""
    _check_common(1.0, n, omega, reps)
    return kernels.group_estimates(spec.family.code, spec.p1, spec.p2, stream_key(seed), int(n), int(reps), omega)


def estimate_omega(spec: DistributionSpec, theta, n: int, omega, reps: int, seed: int) -> OmegaEstimate:
    """Monte Carlo estimate of P(|a(omega) - theta| < |a(0) - theta|).

    Ties count as failures, so the estimate is exactly 0 at omega=0 or n=1.
    """
    theta, n, omega = _check_common(theta, n, omega, reps)
    central, equal = simulate_groups(spec, n, omega, reps, seed)
    wins = int(np.count_nonzero(np.abs(central - theta) < np.abs(equal - theta)))
    return OmegaEstimate.from_count(wins, int(reps))


def expected_loss_compare(spec: DistributionSpec, theta, n: int, omega, loss, reps: int, seed: int):
    """Paired Monte Carlo means of ``loss(a(omega) - theta)`` and ``loss(a(0) - theta)``."""
    theta, n, omega = _check_common(theta, n, omega, reps)
    loss = Loss(loss)
    central, equal = simulate_groups(spec, n, omega, reps, seed)
    if loss is Loss.ABSOLUTE:
        lc, ld = np.abs(central - theta), np.abs(equal - theta)
    else:
        lc, ld = (central - theta) ** 2, (equal - theta) ** 2
    return float(np.mean(lc)), float(np.mean(ld))


def bound_objective(spec: DistributionSpec, n: int, beta):
    """``F(beta) * (1 - F(n beta)^(n-1))``, with the power taken via the survival function."""
    beta = np.asarray(beta, dtype=np.float64)
    if n == 1:
        return np.zeros_like(beta) if beta.ndim else 0.0
    with np.errstate(divide="ignore"):
        log_top = (n - 1) * np.log1p(-sf(spec, n * beta))
    res = cdf(spec, beta) * -np.expm1(log_top)
    return float(res) if res.ndim == 0 else res


def _golden_max(f, lo, hi, rel_tol):
    """Golden-section maximization of ``f`` over ``log(beta)`` in [lo, hi]."""
    a, b = math.log(lo), math.log(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    while b - a > rel_tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(math.exp(d))
    x = math.exp(0.5 * (a + b))
    return x, f(x)


def lower_bound(spec: DistributionSpec, theta, n: int, omega) -> BoundResult:
    """Maximize the bound objective over the open ray ``beta > theta / (1 - omega)``.

    A 256-point log-spaced grid between the 1e-6 quantile of F and the
    (1 - 1e-9) quantile of F(n beta) is refined by golden-section search on
    the bracket around the best grid point (relative tolerance 1e-8).
    """
    theta, n, omega = _check_common(theta, n, omega)
    if omega >= 1.0:
        raise InfeasibleConstraintError("the bound needs omega < 1 (constraint beta > theta/(1-omega))")
    if spec.family is Family.NORMAL:
        raise ParameterDomainError("the bound is defined for distributions supported on the positive reals")
    boundary = theta / (1.0 - omega)
    # sup over an open ray: stay strictly inside it
    start = boundary * (1.0 + 1e-12)
    lo = max(start, float(quantile(spec, _Q_LO)))
    hi = float(quantile(spec, _Q_HI)) / n

    def g(b):
        return bound_objective(spec, n, b)

    if not hi > lo:
        return BoundResult(g(lo), lo, boundary)

    grid = np.geomspace(lo, hi, _GRID_POINTS)
    values = g(grid)
    k = int(np.argmax(values))
    best_beta, best_val = float(grid[k]), float(values[k])
    left = float(grid[max(k - 1, 0)])
    right = float(grid[min(k + 1, _GRID_POINTS - 1)])
    if right > left:
        beta, val = _golden_max(g, left, right, 1e-8)
        if val > best_val:
            best_beta, best_val = beta, val
    return BoundResult(float(best_val), best_beta, boundary)


@dataclass(frozen=True)
class PhaseGrid:
    """Omega estimates on a (mu, sigma) grid; ``values[i, j]`` sits at ``(mu_axis[i], sigma_axis[j])``."""

    mu_axis: np.ndarray
    sigma_axis: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    reps: int

    @property
    def shape(self):
        return self.values.shape

    def cell(self, i: int, j: int) -> OmegaEstimate:
        return OmegaEstimate(float(self.values[i, j]), float(self.std_errors[i, j]), self.reps)

    @property
    def cells(self):
        return [[self.cell(i, j) for j in range(self.sigma_axis.size)] for i in range(self.mu_axis.size)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(PHASE_CSV_HEADER)
        for i, mu in enumerate(self.mu_axis):
            for j, sigma in enumerate(self.sigma_axis):
                writer.writerow([repr(float(mu)), repr(float(sigma)),
                                 repr(float(self.values[i, j])), repr(float(self.std_errors[i, j])), self.reps])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PhaseGrid":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != PHASE_CSV_HEADER:
            raise ParameterDomainError(f"phase CSV must start with header {','.join(PHASE_CSV_HEADER)}")
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        mu_axis = np.unique(data[:, 0])
        sigma_axis = np.unique(data[:, 1])
        shape = (mu_axis.size, sigma_axis.size)
        if data.shape[0] != shape[0] * shape[1]:
            raise ParameterDomainError("phase CSV does not describe a full grid")
        reps = {int(r) for r in data[:, 4]}
        if len(reps) != 1:
            raise ParameterDomainError("phase CSV mixes replicate counts")
        return cls(mu_axis, sigma_axis, data[:, 2].reshape(shape), data[:, 3].reshape(shape), reps.pop())


def _axis(spec, name, positive=False):
    lo, hi, steps = spec
    if int(steps) != steps or steps < 2:
        raise ParameterDomainError(f"{name} axis needs at least 2 steps, got {steps!r}")
    lo, hi = float(lo), float(hi)
    if not hi > lo:
        raise ParameterDomainError(f"{name} axis needs lo < hi, got ({lo}, {hi})")
    if positive and lo <= 0.0:
        raise ParameterDomainError(f"{name} axis must be positive, got lo={lo}")
    return np.linspace(lo, hi, int(steps))


def phase_diagram(family, mu_range, sigma_range, theta, n: int, omega, reps: int, seed: int,
                  threads: int | None = None) -> PhaseGrid:
    """Estimate omega on every grid cell; cell (i, j) is seeded by ``mix_seed(seed, i, j)``.

    Results do not depend on evaluation order or thread count. ``threads``
    defaults to ``CROWDBOUND_THREADS`` (0 = all CPUs).
    """
    family = Family.parse(family)
    theta, n, omega = _check_common(theta, n, omega, reps)
    seed = check_seed(seed)
    mu_axis = _axis(mu_range, "mu")
    sigma_axis = _axis(sigma_range, "sigma", positive=True)
    specs = {(i, j): DistributionSpec(family, mu, sigma)
             for i, mu in enumerate(mu_axis) for j, sigma in enumerate(sigma_axis)}
    workers = _backend.thread_cap(threads)

    def run(ij):
        return ij, estimate_omega(specs[ij], theta, n, omega, reps, mix_seed(seed, *ij))

    if _backend.HAS_NUMBA:
        # each cell is already parallel over replicates
        previous = _backend.numba.get_num_threads()
        _backend.set_kernel_threads(workers)
        try:
            results = [run(ij) for ij in specs]
        finally:
            _backend.numba.set_num_threads(previous)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, specs))
    values = np.empty((mu_axis.size, sigma_axis.size))
    errors = np.empty_like(values)
    for (i, j), est in results:
        values[i, j] = est.value
        errors[i, j] = est.std_error
    return PhaseGrid(mu_axis, sigma_axis, values, errors, int(reps))


@dataclass(frozen=True)
class TrendTest:
    s: int
    z: float
    p_value: float


def mann_kendall(values) -> TrendTest:
    """Mann-Kendall monotone-trend test (normal approximation, tie-corrected, two-sided)."""
    x = np.asarray(values, dtype=np.float64).ravel()
    n = x.size
    if n < 3:
        raise ParameterDomainError("trend test needs at least 3 values")
    diff = np.sign(x[None, :] - x[:, None])
    s = int(np.sum(np.triu(diff, k=1)))
    _, counts = np.unique(x, return_counts=True)
    var = (n * (n - 1) * (2 * n + 5) - np.sum(counts * (counts - 1) * (2 * counts + 5))) / 18.0
    if var <= 0.0:
        return TrendTest(s, 0.0, 1.0)
    z = (s - np.sign(s)) / math.sqrt(var)
    return TrendTest(s, float(z), float(2.0 * norm.sf(abs(z))))
