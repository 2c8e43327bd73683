"""Initial-estimate distribution families: sampling, CDF/PDF, and ML fits.

Parameterizations (``p1``, ``p2``):

==========  ==========================  ======================
family      p1                          p2
==========  ==========================  ======================
normal      mean                        standard deviation
lognormal   mean of log                 sd of log
pareto      scale x_m (> 0)             tail index alpha
loglaplace  location of log             scale of log
==========  ==========================  ======================
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import kernels
from .errors import (
    DegenerateDataError,
    InsufficientDataError,
    ParameterDomainError,
    SupportError,
)
from .rng import stream_key

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class Family(str, enum.Enum):
    NORMAL = "normal"
    LOGNORMAL = "lognormal"
    PARETO = "pareto"
    LOGLAPLACE = "loglaplace"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace("-", "").replace("_", ""))
        except ValueError:
            choices = ", ".join(f.value for f in cls)
            raise ParameterDomainError(f"unknown family {value!r}; expected one of {choices}") from None

    @property
    def code(self) -> int:
        return _CODES[self]

    @property
    def positive_support(self) -> bool:
        return self is not Family.NORMAL


_CODES = {
    Family.NORMAL: kernels.NORMAL,
    Family.LOGNORMAL: kernels.LOGNORMAL,
    Family.PARETO: kernels.PARETO,
    Family.LOGLAPLACE: kernels.LOGLAPLACE,
}


@dataclass(frozen=True)
class DistributionSpec:
    family: Family
    p1: float
    p2: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        p1, p2 = float(self.p1), float(self.p2)
        if not (math.isfinite(p1) and math.isfinite(p2)):
            raise ParameterDomainError(f"parameters must be finite, got p1={p1}, p2={p2}")
        if p2 <= 0.0:
            raise ParameterDomainError(f"p2 must be > 0, got {p2}")
        if self.family is Family.PARETO and p1 <= 0.0:
            raise ParameterDomainError(f"pareto scale x_m must be > 0, got {p1}")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)

    @classmethod
    def normal(cls, mean, sd):
        return cls(Family.NORMAL, mean, sd)

    @classmethod
    def lognormal(cls, mu, sigma):
        return cls(Family.LOGNORMAL, mu, sigma)

    @classmethod
    def pareto(cls, x_m, alpha):
        return cls(Family.PARETO, x_m, alpha)

    @classmethod
    def loglaplace(cls, loc, scale):
        return cls(Family.LOGLAPLACE, loc, scale)

    @property
    def support_lower(self) -> float:
        if self.family is Family.NORMAL:
            return -math.inf
        if self.family is Family.PARETO:
            return self.p1
        return 0.0


@dataclass(frozen=True)
class FitResult:
    spec: DistributionSpec
    log_likelihood: float
    n_obs: int


def _out(x, result):
    return float(result) if np.ndim(x) == 0 else result


def _std(spec, x):
    """Standardized log (or raw) coordinate; only meaningful inside the support."""
    if spec.family is Family.NORMAL:
        return (x - spec.p1) / spec.p2
    safe = np.where(x > 0.0, x, 1.0)
    return (np.log(safe) - spec.p1) / spec.p2


def cdf(spec: DistributionSpec, x):
    xa = np.asarray(x, dtype=np.float64)
    fam = spec.family
    if fam is Family.NORMAL:
        res = ndtr(_std(spec, xa))
    elif fam is Family.LOGNORMAL:
        res = np.where(xa > 0.0, ndtr(_std(spec, xa)), 0.0)
    elif fam is Family.PARETO:
        inside = xa >= spec.p1
        ratio = spec.p1 / np.where(inside, xa, spec.p1)
        res = np.where(inside, -np.expm1(spec.p2 * np.log(ratio)), 0.0)
    else:
        y = _std(spec, xa)
        res = np.where(y < 0.0, 0.5 * np.exp(np.minimum(y, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(y, 0.0)))
        res = np.where(xa > 0.0, res, 0.0)
    return _out(x, res)


def sf(spec: DistributionSpec, x):
    """Survival function 1 - cdf, accurate in the right tail."""
    xa = np.asarray(x, dtype=np.float64)
    fam = spec.family
    if fam is Family.NORMAL:
        res = ndtr(-_std(spec, xa))
    elif fam is Family.LOGNORMAL:
        res = np.where(xa > 0.0, ndtr(-_std(spec, xa)), 1.0)
    elif fam is Family.PARETO:
        inside = xa >= spec.p1
        ratio = spec.p1 / np.where(inside, xa, spec.p1)
        res = np.where(inside, ratio**spec.p2, 1.0)
    else:
        y = _std(spec, xa)
        res = np.where(y < 0.0, 1.0 - 0.5 * np.exp(np.minimum(y, 0.0)), 0.5 * np.exp(-np.maximum(y, 0.0)))
        res = np.where(xa > 0.0, res, 1.0)
    return _out(x, res)


def pdf(spec: DistributionSpec, x):
    xa = np.asarray(x, dtype=np.float64)
    fam = spec.family
    if fam is Family.NORMAL:
        z = _std(spec, xa)
        res = np.exp(-0.5 * z * z - _LOG_SQRT_2PI) / spec.p2
    elif fam is Family.LOGNORMAL:
        z = _std(spec, xa)
        safe = np.where(xa > 0.0, xa, 1.0)
        res = np.where(xa > 0.0, np.exp(-0.5 * z * z - _LOG_SQRT_2PI) / (spec.p2 * safe), 0.0)
    elif fam is Family.PARETO:
        inside = xa >= spec.p1
        safe = np.where(inside, xa, spec.p1)
        res = np.where(inside, spec.p2 / safe * (spec.p1 / safe) ** spec.p2, 0.0)
    else:
        y = _std(spec, xa)
        safe = np.where(xa > 0.0, xa, 1.0)
        res = np.where(xa > 0.0, np.exp(-np.abs(y)) / (2.0 * spec.p2 * safe), 0.0)
    return _out(x, res)


def quantile(spec: DistributionSpec, q):
    """Inverse CDF on (0, 1); used by the samplers and the bound's search grid."""
    qa = np.asarray(q, dtype=np.float64)
    if np.any((qa <= 0.0) | (qa >= 1.0)):
        raise ParameterDomainError("quantile levels must lie strictly inside (0, 1)")
    return _out(q, kernels.quantile_array(spec.family.code, spec.p1, spec.p2, qa))


def sample(spec: DistributionSpec, count: int, seed: int) -> np.ndarray:
    """``count`` i.i.d. draws by inverse-CDF transform of a counter-based stream.

    Equal ``(spec, count, seed)`` give bit-identical arrays on a given backend,
    and a longer request extends a shorter one with the same seed.
    """
    if int(count) != count or count < 1:
        raise ParameterDomainError(f"count must be a positive integer, got {count!r}")
    return kernels.draw(spec.family.code, spec.p1, spec.p2, stream_key(seed), int(count))


def _normal_loglik(x, mean, sd):
    z = (x - mean) / sd
    return float(np.sum(-0.5 * z * z - _LOG_SQRT_2PI - math.log(sd)))


def fit_mle(family, data) -> FitResult:
    """Maximum-likelihood fit of a normal or log-normal family.

    The scale uses the 1/n (ML) variance. The log-normal fit is the normal
    fit of ``log(data)``; its likelihood includes the ``-sum(log x)`` Jacobian.
    """
    family = Family.parse(family)
    if family not in (Family.NORMAL, Family.LOGNORMAL):
        raise ParameterDomainError(f"ML fitting is only provided for normal and lognormal, not {family.value}")
    x = np.asarray(data, dtype=np.float64).ravel()
    if x.size < 3:
        raise InsufficientDataError(f"need at least 3 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise SupportError("data contain non-finite values")
    if family is Family.LOGNORMAL:
        if np.any(x <= 0.0):
            raise SupportError(f"lognormal fit needs positive data; {int(np.sum(x <= 0.0))} values are <= 0")
        y = np.log(x)
    else:
        y = x
    mean = float(np.mean(y))
    sd = float(np.sqrt(np.mean((y - mean) ** 2)))
    if not sd > 0.0:
        raise DegenerateDataError("data have zero variance")
    ll = _normal_loglik(y, mean, sd)
    if family is Family.LOGNORMAL:
        ll -= float(np.sum(y))
    return FitResult(DistributionSpec(family, mean, sd), ll, int(x.size))
