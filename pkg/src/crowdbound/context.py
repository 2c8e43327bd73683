"""Heavy-tailedness feature R of a sample of initial estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .distributions import Family, fit_mle


@dataclass(frozen=True)
class RScore:
    r: float
    ll_lognormal: float
    ll_normal: float
    n_obs: int

    @property
    def log_odds(self) -> float:
        """``ll_lognormal - ll_normal``; keeps resolution where ``r`` saturates at 0 or 1."""
        return self.ll_lognormal - self.ll_normal


def r_score(data) -> RScore:
    """Relative likelihood of a log-normal versus a normal ML fit.

    ``r = 1 / (1 + exp(ll_normal - ll_lognormal))``: 1 favors the log-normal,
    0 the normal, 0.5 means the two fit equally well. Both families have two
    parameters, so no complexity penalty is applied. In float64, ``r``
    rounds to exactly 0 or 1 once the log-likelihoods differ by more than ~37.
    """
    x = np.asarray(data, dtype=np.float64).ravel()
    lognormal = fit_mle(Family.LOGNORMAL, x)
    normal = fit_mle(Family.NORMAL, x)
    r = float(expit(lognormal.log_likelihood - normal.log_likelihood))
    return RScore(r, lognormal.log_likelihood, normal.log_likelihood, int(x.size))
