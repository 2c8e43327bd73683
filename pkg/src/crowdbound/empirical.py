"""Trial data: canonical CSV I/O, outcome metrics, and the R-moderation regressions.

The regressions are fixed-effects fits of the group-level models; the
per-group random coefficients of a mixed model are not estimated.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import expit

from .context import RScore, r_score
from .distributions import DistributionSpec, sample
from .errors import (
    DegenerateTaskError,
    EmptyInputError,
    InsufficientDesignError,
    ParameterDomainError,
    ParseError,
)
from .influence import collective_estimate
from .regression import RegressionResult, fit_logistic, fit_ols
from .rng import check_seed, mix_seed, uniforms

log = logging.getLogger(__name__)

TRIAL_CSV_HEADER = (
    "dataset_id", "task_id", "group_id", "subject_id",
    "social", "truth", "initial_estimate", "revised_estimate",
)

MODEL_NOTE = (
    "Fixed-effects approximation: group-level random coefficients are not estimated; "
    "logistic and linear models contain only the fixed terms."
)
LOGISTIC_CONVENTION = "P(improved) = 1 / (1 + exp(-(intercept + R * coef_R)))"


@dataclass(frozen=True)
class TrialRecord:
    """One group answering one task."""

    dataset_id: str
    task_id: str
    group_id: str
    social: bool
    truth: float
    initial_estimates: tuple
    revised_estimates: tuple
    subject_ids: tuple = field(default=())

    def __post_init__(self):
        init = tuple(float(v) for v in self.initial_estimates)
        rev = tuple(float(v) for v in self.revised_estimates)
        if not init or len(init) != len(rev):
            raise ParameterDomainError("initial and revised estimates must be nonempty and of equal length")
        if not (self.truth > 0.0 and math.isfinite(self.truth)):
            raise ParameterDomainError(f"truth must be positive, got {self.truth!r}")
        if min(init) <= 0.0 or min(rev) <= 0.0:
            raise ParameterDomainError("all estimates must be positive")
        subjects = tuple(str(s) for s in self.subject_ids) or tuple(str(k) for k in range(len(init)))
        if len(subjects) != len(init):
            raise ParameterDomainError("one subject id is needed per estimate")
        object.__setattr__(self, "initial_estimates", init)
        object.__setattr__(self, "revised_estimates", rev)
        object.__setattr__(self, "subject_ids", subjects)
        object.__setattr__(self, "truth", float(self.truth))
        object.__setattr__(self, "social", bool(self.social))

    @property
    def task_key(self):
        return (self.dataset_id, self.task_id)


@dataclass(frozen=True)
class TaskSummary:
    task_id: str
    r: RScore
    n_trials: int
    dataset_id: str = ""


@dataclass(frozen=True)
class TrialOutcome:
    improved: bool
    abs_error_initial: float
    abs_error_revised: float
    z_abs_error_revised: float | None = None


# ---------------------------------------------------------------- CSV I/O


def load_trials_with_drops(path):
    """Parse a canonical trial CSV; returns ``(records, dropped_subject_rows)``."""
    path = Path(path)
    groups: OrderedDict = OrderedDict()
    dropped = 0
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyInputError(f"{path} is empty")
        if tuple(h.strip() for h in header) != TRIAL_CSV_HEADER:
            raise ParseError(f"expected header {','.join(TRIAL_CSV_HEADER)}", line=1)
        n_rows = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            n_rows += 1
            if len(row) != len(TRIAL_CSV_HEADER):
                raise ParseError(f"expected {len(TRIAL_CSV_HEADER)} fields, got {len(row)}", line=lineno)
            dataset_id, task_id, group_id, subject_id, social, truth, init, rev = (c.strip() for c in row)
            if social not in ("0", "1"):
                raise ParseError(f"social must be 0 or 1, got {social!r}", line=lineno)
            try:
                truth_v, init_v, rev_v = float(truth), float(init), float(rev)
            except ValueError as exc:
                raise ParseError(f"non-numeric value ({exc})", line=lineno) from None
            if not all(math.isfinite(v) for v in (truth_v, init_v, rev_v)):
                raise ParseError("non-finite numeric value", line=lineno)
            if truth_v <= 0.0:
                raise ParseError(f"truth must be positive, got {truth_v!r}", line=lineno)
            key = (dataset_id, task_id, group_id)
            g = groups.get(key)
            if g is None:
                g = groups[key] = {"social": social == "1", "truth": truth_v, "line": lineno,
                                   "subjects": [], "init": [], "rev": []}
            elif g["social"] != (social == "1") or g["truth"] != truth_v:
                raise ParseError(
                    f"group {'/'.join(key)} changes social or truth (first seen on line {g['line']})",
                    line=lineno,
                )
            if init_v <= 0.0 or rev_v <= 0.0:
                dropped += 1
                continue
            g["subjects"].append(subject_id)
            g["init"].append(init_v)
            g["rev"].append(rev_v)
    if n_rows == 0:
        raise EmptyInputError(f"{path} has a header but no data rows")
    if dropped:
        log.info("dropped %d subject rows with nonpositive estimates from %s", dropped, path)
    records = [
        TrialRecord(d, t, gid, g["social"], g["truth"], g["init"], g["rev"], g["subjects"])
        for (d, t, gid), g in groups.items()
        if g["init"]
    ]
    if not records:
        raise EmptyInputError(f"no usable trials left in {path} after dropping nonpositive estimates")
    return records, dropped


def load_trials(path) -> list:
    return load_trials_with_drops(path)[0]


def trials_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRIAL_CSV_HEADER)
    for rec in records:
        for sid, a, b in zip(rec.subject_ids, rec.initial_estimates, rec.revised_estimates):
            writer.writerow([rec.dataset_id, rec.task_id, rec.group_id, sid,
                             "1" if rec.social else "0", repr(rec.truth), repr(a), repr(b)])
    return buf.getvalue()


def save_trials(records, path) -> None:
    Path(path).write_text(trials_to_csv(records), encoding="utf-8")


# ---------------------------------------------------------------- outcomes


def trial_outcome(trial: TrialRecord) -> TrialOutcome:
    initial = float(np.mean(trial.initial_estimates))
    revised = float(np.mean(trial.revised_estimates))
    err_i = abs(initial - trial.truth)
    err_r = abs(revised - trial.truth)
    return TrialOutcome(err_r < err_i, err_i, err_r)


def zscore_by_task(outcomes) -> dict:
    """Fill ``z_abs_error_revised`` within each task (sample sd, ddof=1).

    ``outcomes`` maps a task key to its sequence of :class:`TrialOutcome`.
    """
    bad = []
    out = {}
    for task, items in outcomes.items():
        items = list(items)
        errs = np.array([o.abs_error_revised for o in items])
        sd = float(np.std(errs, ddof=1)) if errs.size >= 2 else 0.0
        if not sd > 0.0:
            bad.append(task if isinstance(task, str) else "/".join(map(str, task)))
            continue
        z = (errs - errs.mean()) / sd
        out[task] = [replace(o, z_abs_error_revised=float(v)) for o, v in zip(items, z)]
    if bad:
        raise DegenerateTaskError(bad)
    return out


# ---------------------------------------------------------------- analysis


def task_summaries(trials) -> dict:
    """R per task, pooled over the initial estimates of every trial of the task."""
    pooled: OrderedDict = OrderedDict()
    for t in trials:
        pooled.setdefault(t.task_key, []).append(t)
    out = OrderedDict()
    for key, items in pooled.items():
        data = np.concatenate([np.asarray(t.initial_estimates) for t in items])
        out[key] = TaskSummary(key[1], r_score(data), len(items), dataset_id=key[0])
    return out


def _effect_grid(res: RegressionResult, step=0.05):
    """Fitted social-minus-control error difference ``b2 + b3 R`` with 95% bands."""
    grid = np.round(np.arange(0.0, 1.0 + step / 2, step), 10)
    b = res.coefficients
    V = res.covariance
    rows = []
    for r in grid:
        g = np.array([0.0, 0.0, 1.0, r])
        est = float(g @ b)
        se = float(np.sqrt(g @ V @ g))
        rows.append({"R": float(r), "effect": est, "std_error": se,
                     "ci_low": est - 1.959963984540054 * se, "ci_high": est + 1.959963984540054 * se})
    return rows


def _improvement_curve(res: RegressionResult, step=0.05):
    grid = np.round(np.arange(0.0, 1.0 + step / 2, step), 10)
    rows = []
    for r in grid:
        g = np.array([1.0, r])
        eta = float(g @ res.coefficients)
        se = float(np.sqrt(g @ res.covariance @ g))
        rows.append({"R": float(r), "p_improve": float(expit(eta)),
                     "ci_low": float(expit(eta - 1.959963984540054 * se)),
                     "ci_high": float(expit(eta + 1.959963984540054 * se))})
    return rows


def trial_design(trials) -> dict:
    """Per-trial regression inputs, in input order.

    Returns the task summaries plus arrays ``R`` (pooled task R), ``social``
    (0/1), ``improved`` (0/1) and ``z`` (within-task z-scored revised error).
    """
    trials = list(trials)
    summaries = task_summaries(trials)
    by_task: OrderedDict = OrderedDict()
    for t in trials:
        by_task.setdefault(t.task_key, []).append(trial_outcome(t))
    scored = zscore_by_task(by_task)
    cursor = {k: 0 for k in scored}
    R, I, improved, z = [], [], [], []
    for t in trials:
        o = scored[t.task_key][cursor[t.task_key]]
        cursor[t.task_key] += 1
        R.append(summaries[t.task_key].r.r)
        I.append(1.0 if t.social else 0.0)
        improved.append(1.0 if o.improved else 0.0)
        z.append(o.z_abs_error_revised)
    return {"summaries": summaries, "R": np.array(R), "social": np.array(I),
            "improved": np.array(improved), "z": np.array(z)}


def interaction_design(R, social):
    """Columns ``[1, R, I, I*R]`` of the linear model."""
    return np.column_stack([np.ones_like(R), R, social, social * R])


def analyze(trials, seed=None, dropped_rows=0) -> dict:
    """Run both regressions and assemble the JSON-ready report.

    The logistic model ``improved ~ 1 + R`` uses social trials only; the
    linear model ``z ~ 1 + R + I + I*R`` uses all trials.
    """
    trials = list(trials)
    if not trials:
        raise EmptyInputError("no trials to analyze")
    social = [t for t in trials if t.social]
    control = [t for t in trials if not t.social]
    if not social:
        raise InsufficientDesignError("the logistic model needs at least one social trial")
    if not control:
        raise InsufficientDesignError("the interaction model needs at least one non-social trial")

    design = trial_design(trials)
    summaries = design["summaries"]
    R, I, improved, z = design["R"], design["social"], design["improved"], design["z"]

    mask = I == 1.0
    logistic = fit_logistic(improved[mask], np.column_stack([np.ones(mask.sum()), R[mask]]),
                            names=("intercept", "R"))
    ols = fit_ols(z, interaction_design(R, I), names=("intercept", "R", "social", "social_x_R"))

    b2, b3 = ols.coefficients[2], ols.coefficients[3]
    crossover = float(-b2 / b3) if b3 != 0.0 else None
    return {
        "logistic": logistic.as_dict(),
        "ols": ols.as_dict(),
        "tasks": [
            {"dataset_id": s.dataset_id, "task_id": s.task_id, "r": s.r.r,
             "log_odds": s.r.log_odds, "n_trials": s.n_trials}
            for s in summaries.values()
        ],
        "marginal_effects": _effect_grid(ols),
        "improvement_curve": _improvement_curve(logistic),
        "meta": {
            "seed": seed,
            "n_trials": len(trials),
            "n_social": len(social),
            "n_nonsocial": len(control),
            "n_tasks": len(summaries),
            "n_improved": int(improved[mask].sum()),
            "dropped_rows": int(dropped_rows),
            "effect_crossover_R": crossover,
            "logistic_convention": LOGISTIC_CONVENTION,
            "model_note": MODEL_NOTE,
        },
    }


def _finite_or_none(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    return obj


def report_to_json(report: dict) -> str:
    """Serialize with full float precision; non-finite numbers become null."""
    return json.dumps(_finite_or_none(report), indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------- synthetic data


def generate_synthetic(n_tasks=20, groups_per_task=10, group_size=30, sigma_range=(0.1, 2.5),
                       theta=100.0, omega_social=0.4, seed=0, social_fraction=0.5, step=0.7) -> list:
    """Synthetic trials from the log-normal estimation-context model.

    Per task: ``sigma ~ U(sigma_range)``, ``u ~ U[-1, 1]``,
    ``mu = ln(theta) - sigma**2 / 2 * u``. Every group draws ``group_size``
    initial estimates from LogNormal(mu, sigma). In social groups (the first
    ``round(social_fraction * groups_per_task)`` of each task) every agent
    moves a fraction ``step`` toward the centralized collective estimate;
    control groups keep their initial estimates.
    """
    for name, v in (("n_tasks", n_tasks), ("groups_per_task", groups_per_task), ("group_size", group_size)):
        if int(v) != v or v < 1:
            raise ParameterDomainError(f"{name} must be a positive integer, got {v!r}")
    lo, hi = (float(v) for v in sigma_range)
    if not 0.0 < lo <= hi:
        raise ParameterDomainError(f"sigma_range must satisfy 0 < lo <= hi, got {sigma_range!r}")
    if not theta > 0.0:
        raise ParameterDomainError(f"theta must be positive, got {theta!r}")
    for name, v in (("omega_social", omega_social), ("social_fraction", social_fraction), ("step", step)):
        if not 0.0 <= v <= 1.0:
            raise ParameterDomainError(f"{name} must lie in [0, 1], got {v!r}")
    seed = check_seed(seed)
    n_social = math.floor(social_fraction * groups_per_task + 0.5)
    tw = max(2, len(str(n_tasks - 1)))
    gw = max(2, len(str(groups_per_task - 1)))
    sw = max(2, len(str(group_size - 1)))
    records = []
    for t in range(int(n_tasks)):
        u_sigma, u_bias = uniforms(mix_seed(seed, t), 0, 2)
        sigma = lo + (hi - lo) * u_sigma
        bias = 2.0 * u_bias - 1.0
        spec = DistributionSpec.lognormal(math.log(theta) - 0.5 * sigma * sigma * bias, sigma)
        for g in range(int(groups_per_task)):
            a = sample(spec, int(group_size), mix_seed(seed, t, g))
            social = g < n_social
            if social:
                c = collective_estimate(a, omega_social)
                revised = a + step * (c - a)
            else:
                revised = a
            records.append(TrialRecord(
                "synthetic", f"t{t:0{tw}d}", f"g{g:0{gw}d}", social, float(theta),
                tuple(a.tolist()), tuple(revised.tolist()),
                tuple(f"s{k:0{sw}d}" for k in range(int(group_size))),
            ))
    return records
