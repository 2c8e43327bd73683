"""Fixed-effects logistic (IRLS) and least-squares fits with Wald statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.linalg import solve_triangular
from scipy.special import expit

from .errors import CollinearityError, InsufficientDataError, ParameterDomainError, SeparationError

MAX_ITER = 100
STEP_TOL = 1e-10
SEPARATION_LIMIT = 30.0
_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class RegressionResult:
    names: tuple
    coefficients: np.ndarray
    std_errors: np.ndarray
    wald_stats: np.ndarray
    p_values: np.ndarray
    n_obs: int
    converged: bool
    covariance: np.ndarray = field(repr=False)
    kind: str = "ols"
    iterations: int = 0
    df_resid: int | None = None

    def __getitem__(self, name):
        return float(self.coefficients[self.names.index(name)])

    def as_dict(self) -> dict:
        def named(values):
            return {n: float(v) for n, v in zip(self.names, values)}

        out = {
            "model": self.kind,
            "coefficients": named(self.coefficients),
            "std_errors": named(self.std_errors),
            "wald_stats": named(self.wald_stats),
            "wald_kind": "z" if self.kind == "logistic" else "t",
            "p_values": named(self.p_values),
            "n_obs": self.n_obs,
            "converged": self.converged,
            "covariance": self.covariance.tolist(),
        }
        if self.kind == "logistic":
            out["iterations"] = self.iterations
        else:
            out["df_resid"] = self.df_resid
        return out


def _design(x, n_rows, names):
    X = np.asarray(x, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != n_rows:
        raise ParameterDomainError(f"design matrix has shape {X.shape}, expected ({n_rows}, p)")
    if not np.all(np.isfinite(X)):
        raise ParameterDomainError("design matrix contains non-finite values")
    p = X.shape[1]
    if names is None:
        names = tuple(f"x{k}" for k in range(p))
    names = tuple(names)
    if len(names) != p:
        raise ParameterDomainError(f"{len(names)} names given for {p} columns")
    if n_rows <= p:
        raise InsufficientDataError(f"need more observations ({n_rows}) than coefficients ({p})")
    return X, names


def _check_rank(X):
    r = np.linalg.qr(X, mode="r")
    d = np.abs(np.diag(r))
    if d.size == 0 or d.min() <= _RANK_RTOL * d.max():
        raise CollinearityError("design matrix is rank deficient")
    return r


def fit_logistic(y, x, names=None) -> RegressionResult:
    """Logistic regression ``P(y=1) = expit(x @ beta)`` by iteratively reweighted least squares.

    Stops when ``max|delta beta| < 1e-10`` or after 100 iterations. Any
    coefficient beyond +-30 is taken as divergence toward a separated fit.
    Standard errors come from the inverse information at the final beta.
    """
    yv = np.asarray(y, dtype=np.float64).ravel()
    if not np.all((yv == 0.0) | (yv == 1.0)):
        raise ParameterDomainError("logistic response must be boolean")
    X, names = _design(x, yv.size, names)
    _check_rank(X)
    beta = np.zeros(X.shape[1])
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        eta = X @ beta
        mu = expit(eta)
        w = mu * (1.0 - mu)
        if np.any(w <= 0.0):
            raise SeparationError("fitted probabilities reached 0 or 1; the data are separated")
        sw = np.sqrt(w)
        z = eta + (yv - mu) / w
        new, *_ = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)
        step = np.max(np.abs(new - beta))
        beta = new
        if np.max(np.abs(beta)) > SEPARATION_LIMIT:
            raise SeparationError(
                f"coefficients diverge (|beta| > {SEPARATION_LIMIT:g}); the maximum likelihood lies at infinity"
            )
        if step < STEP_TOL:
            converged = True
            break
    mu = expit(X @ beta)
    w = mu * (1.0 - mu)
    r = _check_rank(X * np.sqrt(w)[:, None])
    rinv = solve_triangular(r, np.eye(r.shape[0]))
    cov = rinv @ rinv.T
    se = np.sqrt(np.diag(cov))
    zstat = beta / se
    pvals = 2.0 * stats.norm.sf(np.abs(zstat))
    return RegressionResult(names, beta, se, zstat, pvals, int(yv.size), converged, cov,
                            kind="logistic", iterations=it)


def logistic_score(y, x, beta) -> np.ndarray:
    """Gradient of the logistic log-likelihood at ``beta``."""
    X = np.asarray(x, dtype=np.float64)
    return X.T @ (np.asarray(y, dtype=np.float64) - expit(X @ np.asarray(beta)))


def fit_ols(y, x, names=None) -> RegressionResult:
    """Least squares via Householder QR; t statistics on ``n - p`` degrees of freedom."""
    yv = np.asarray(y, dtype=np.float64).ravel()
    if not np.all(np.isfinite(yv)):
        raise ParameterDomainError("response contains non-finite values")
    X, names = _design(x, yv.size, names)
    q, r = np.linalg.qr(X, mode="reduced")
    d = np.abs(np.diag(r))
    if d.min() <= _RANK_RTOL * d.max():
        raise CollinearityError("design matrix is rank deficient")
    beta = solve_triangular(r, q.T @ yv)
    resid = yv - X @ beta
    dof = yv.size - X.shape[1]
    sigma2 = float(resid @ resid) / dof
    rinv = solve_triangular(r, np.eye(r.shape[0]))
    cov = sigma2 * (rinv @ rinv.T)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = beta / se
    pvals = 2.0 * stats.t.sf(np.abs(tstat), dof)
    return RegressionResult(names, beta, se, tstat, pvals, int(yv.size), True, cov,
                            kind="ols", df_resid=dof)
