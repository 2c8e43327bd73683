"""Influence weights, the centralization parameter omega, and DeGroot influence.

Within one group the influential agent is, by convention, the first element
of the estimate vector. For i.i.d. draws this is the same as picking the
center uniformly at random.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import (
    EmptyInputError,
    ParameterDomainError,
    ReducibleOrPeriodicError,
    UndefinedCentralizationError,
)

_SUM_TOL = 1e-12


def _check_omega(omega):
    omega = float(omega)
    if not 0.0 <= omega <= 1.0:
        raise ParameterDomainError(f"centralization omega must lie in [0, 1], got {omega}")
    return omega


@dataclass(frozen=True)
class InfluenceWeights:
    """Convex weights, stored in nonincreasing order."""

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64).ravel()
        if w.size < 1:
            raise EmptyInputError("influence weights need at least one agent")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ParameterDomainError("influence weights must be finite and nonnegative")
        if abs(math.fsum(w) - 1.0) > _SUM_TOL:
            raise ParameterDomainError(f"influence weights must sum to 1, got {math.fsum(w)!r}")
        w = np.sort(w)[::-1].copy()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.size

    def __eq__(self, other):
        return isinstance(other, InfluenceWeights) and np.array_equal(self.w, other.w)

    def __hash__(self):
        return hash(self.w.tobytes())


def collective_estimate(estimates, omega) -> float:
    """Blend of the first agent's estimate and the equal-weight mean.

    Evaluated as ``m + omega*(a1 - m)``, which equals
    ``omega*a1 + (1-omega)*m`` and is exact at omega=0 and for one agent.
    """
    a = np.asarray(estimates, dtype=np.float64).ravel()
    if a.size == 0:
        raise EmptyInputError("collective estimate of an empty group")
    omega = _check_omega(omega)
    m = float(np.mean(a))
    return m + omega * (float(a[0]) - m)


def weights_from_centralization(n: int, omega) -> InfluenceWeights:
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"group size must be a positive integer, got {n!r}")
    omega = _check_omega(omega)
    n = int(n)
    w = np.full(n, (1.0 - omega) / n)
    w[0] += omega
    # absorb the rounding residue so the sum is 1 to within the invariant
    w[0] += 1.0 - math.fsum(w)
    return InfluenceWeights(w)


def centralization_from_weights(weights) -> float:
    """Freeman-style centralization ``sum(w_max - w_i) / (n - 1)``."""
    if not isinstance(weights, InfluenceWeights):
        weights = InfluenceWeights(weights)
    n = len(weights)
    if n < 2:
        raise UndefinedCentralizationError("centralization is undefined for a single agent")
    w = weights.w
    omega = math.fsum(w[0] - w) / (n - 1)
    return min(1.0, max(0.0, omega))


def _check_stochastic(matrix):
    W = np.array(matrix, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] < 1:
        raise ParameterDomainError(f"influence matrix must be square, got shape {W.shape}")
    if not np.all(np.isfinite(W)) or np.any(W < 0.0):
        raise ParameterDomainError("influence matrix entries must be finite and nonnegative")
    rows = W.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > _SUM_TOL):
        bad = int(np.argmax(np.abs(rows - 1.0)))
        raise ParameterDomainError(f"row {bad} of the influence matrix sums to {rows[bad]!r}, not 1")
    return W


def _period(adj):
    """Period of an irreducible chain: gcd of level[u] + 1 - level[v] over edges u->v."""
    order, _ = breadth_first_order(adj, 0, directed=True, return_predecessors=True)
    level = np.full(adj.shape[0], -1)
    level[0] = 0
    for u in order:
        for v in np.flatnonzero(adj[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
    src, dst = np.nonzero(adj)
    return reduce(math.gcd, (int(d) for d in level[src] + 1 - level[dst]), 0)


def degroot_influence(matrix, tol: float = 1e-13, max_iter: int = 1_000_000) -> InfluenceWeights:
    """Stationary left fixed point ``pi W = pi`` of a row-stochastic matrix.

    The chain must be irreducible and aperiodic; both are checked on the
    support graph before power iteration starts from uniform weights.
    """
    W = _check_stochastic(matrix)
    n = W.shape[0]
    if n == 1:
        return InfluenceWeights([1.0])
    adj = W > 0.0
    n_comp, _ = connected_components(adj, directed=True, connection="strong")
    if n_comp > 1:
        raise ReducibleOrPeriodicError(f"influence matrix is reducible ({n_comp} strongly connected classes)")
    period = _period(adj)
    if period != 1:
        raise ReducibleOrPeriodicError(f"influence matrix is periodic with period {period}")
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ W
        nxt /= nxt.sum()
        change = np.abs(nxt - pi).sum()
        pi = nxt
        if change < tol:
            return InfluenceWeights(pi / math.fsum(pi))
    raise ReducibleOrPeriodicError(f"power iteration did not converge in {max_iter} steps")


class Topology(str, enum.Enum):
    COMPLETE = "complete"
    STAR = "star"
    CIRCLE = "circle"
    EMPTY = "empty"


def topology_matrix(kind, n: int, tie_strength: float) -> np.ndarray:
    """Canonical listening matrix: self-weight ``1 - tie_strength``, the rest
    split evenly over the listed neighbors (star periphery lists only the hub)."""
    kind = Topology(kind)
    if int(n) != n or n < 2:
        raise ParameterDomainError(f"topologies need n >= 2, got {n!r}")
    n = int(n)
    t = float(tie_strength)
    if not 0.0 < t <= 1.0:
        raise ParameterDomainError(f"tie_strength must lie in (0, 1], got {t}")
    if kind is Topology.EMPTY:
        return np.eye(n)
    neighbors = []
    for i in range(n):
        if kind is Topology.COMPLETE:
            nb = [j for j in range(n) if j != i]
        elif kind is Topology.CIRCLE:
            nb = sorted({(i - 1) % n, (i + 1) % n})
        else:
            nb = list(range(1, n)) if i == 0 else [0]
        neighbors.append(nb)
    W = np.zeros((n, n))
    for i, nb in enumerate(neighbors):
        W[i, i] = 1.0 - t
        W[i, nb] += t / len(nb)
    return W


def topology_weights(kind, n: int, tie_strength: float) -> InfluenceWeights:
    """DeGroot influence for one of the canonical topologies (hub = agent 0 for Star).

    Isolated individuals (Empty) contribute equally to the unweighted
    aggregate, so Empty maps to uniform weights rather than to an error.
    """
    kind = Topology(kind)
    W = topology_matrix(kind, n, tie_strength)
    if kind is Topology.EMPTY:
        return InfluenceWeights(np.full(int(n), 1.0 / int(n)))
    return degroot_influence(W)
