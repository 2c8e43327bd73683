"""Centralized versus decentralized influence in collective estimation.

Monte Carlo and analytical tools for the probability that a centralized
collective estimate beats the equal-weight crowd, the heavy-tailedness
feature R, and regressions on trial data.
"""

__version__ = "0.1.0"

from ._backend import HAS_NUMBA
from .context import RScore, r_score
from .distributions import DistributionSpec, Family, FitResult, cdf, fit_mle, pdf, quantile, sample, sf
from .empirical import (
    TaskSummary,
    TrialOutcome,
    TrialRecord,
    analyze,
    generate_synthetic,
    load_trials,
    save_trials,
    trial_outcome,
    zscore_by_task,
)
from .influence import (
    InfluenceWeights,
    Topology,
    centralization_from_weights,
    collective_estimate,
    degroot_influence,
    topology_weights,
    weights_from_centralization,
)
from .omega import (
    BoundResult,
    Loss,
    OmegaEstimate,
    PhaseGrid,
    estimate_omega,
    expected_loss_compare,
    lower_bound,
    mann_kendall,
    phase_diagram,
)
from .regression import RegressionResult, fit_logistic, fit_ols
