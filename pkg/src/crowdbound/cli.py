"""Command-line front end: ``crowdbound <subcommand> [flags]``.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import tempfile
from pathlib import Path

from . import __version__
from .context import r_score
from .distributions import DistributionSpec, Family
from .empirical import analyze, generate_synthetic, load_trials_with_drops, report_to_json, trials_to_csv
from .errors import CrowdboundError, ParameterDomainError
from .omega import Loss, estimate_omega, expected_loss_compare, lower_bound, phase_diagram
from .svg import phase_heatmap_svg

LN2 = math.log(2.0)


class UsageError(Exception):
    pass


def write_atomic(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent if str(path.parent) else ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _emit(obj) -> None:
    print(json.dumps(obj))


# ---------------------------------------------------------------- flag groups


def _add_distribution(p):
    g = p.add_argument_group("estimate distribution")
    g.add_argument("--family", default="lognormal", choices=[f.value for f in Family],
                   help="initial-estimate family (default: %(default)s)")
    g.add_argument("--mu", type=float, default=LN2,
                   help="p1: mean of log for lognormal/loglaplace, mean for normal, scale x_m for pareto "
                        "(default: ln 2 = %(default).6g)")
    g.add_argument("--sigma", type=float, default=2.0,
                   help="p2: sd of log for lognormal, scale of log for loglaplace, sd for normal, "
                        "tail index alpha for pareto; must be > 0 (default: %(default)s)")


def _add_model(p, reps=True):
    g = p.add_argument_group("group model")
    g.add_argument("--theta", type=float, default=2.0, help="true value, > 0, same units as estimates (default: %(default)s)")
    g.add_argument("--n", type=int, default=50, help="agents per group (default: %(default)s)")
    g.add_argument("--omega", type=float, default=1.0 / 3.0,
                   help="centralization in [0, 1] (default: 1/3)")
    if reps:
        g.add_argument("--reps", type=int, default=20000, help="Monte Carlo groups (default: %(default)s)")
        g.add_argument("--seed", type=int, default=0, help="64-bit unsigned seed (default: %(default)s)")


def _add_generator(p):
    g = p.add_argument_group("synthetic generator")
    g.add_argument("--n-tasks", type=int, default=20, help="tasks (default: %(default)s)")
    g.add_argument("--groups-per-task", type=int, default=10, help="groups per task (default: %(default)s)")
    g.add_argument("--group-size", type=int, default=30, help="agents per group (default: %(default)s)")
    g.add_argument("--sigma-lo", type=float, default=0.1, help="lower end of the per-task sd of log (default: %(default)s)")
    g.add_argument("--sigma-hi", type=float, default=2.5, help="upper end of the per-task sd of log (default: %(default)s)")
    g.add_argument("--theta", type=float, default=100.0, help="true value of every task (default: %(default)s)")
    g.add_argument("--omega-social", type=float, default=0.4,
                   help="centralization of social groups, in [0, 1] (default: %(default)s)")
    g.add_argument("--social-fraction", type=float, default=0.5,
                   help="share of groups per task in the social condition (default: %(default)s)")
    g.add_argument("--step", type=float, default=0.7,
                   help="fraction of the way each social agent moves toward the collective estimate (default: %(default)s)")
    g.add_argument("--seed", type=int, default=0, help="64-bit unsigned seed (default: %(default)s)")


def _spec(args):
    try:
        return DistributionSpec(args.family, args.mu, args.sigma)
    except ParameterDomainError as exc:
        raise UsageError(str(exc)) from None


def _validate_model(args, reps=True):
    if not (args.theta > 0 and math.isfinite(args.theta)):
        raise UsageError("--theta must be a positive number")
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if not 0.0 <= args.omega <= 1.0:
        raise UsageError("--omega must lie in [0, 1]")
    if reps:
        if args.reps < 1:
            raise UsageError("--reps must be >= 1")
        if not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")


def _generator_kwargs(args):
    if min(args.n_tasks, args.groups_per_task, args.group_size) < 1:
        raise UsageError("--n-tasks, --groups-per-task and --group-size must be >= 1")
    if not 0.0 < args.sigma_lo <= args.sigma_hi:
        raise UsageError("need 0 < --sigma-lo <= --sigma-hi")
    if not args.theta > 0:
        raise UsageError("--theta must be positive")
    for flag in ("omega_social", "social_fraction", "step"):
        if not 0.0 <= getattr(args, flag) <= 1.0:
            raise UsageError(f"--{flag.replace('_', '-')} must lie in [0, 1]")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    return dict(n_tasks=args.n_tasks, groups_per_task=args.groups_per_task, group_size=args.group_size,
                sigma_range=(args.sigma_lo, args.sigma_hi), theta=args.theta,
                omega_social=args.omega_social, seed=args.seed,
                social_fraction=args.social_fraction, step=args.step)


# ---------------------------------------------------------------- subcommands


def cmd_omega(args):
    spec = _spec(args)
    _validate_model(args)
    est = estimate_omega(spec, args.theta, args.n, args.omega, args.reps, args.seed)
    bound = lower_bound(spec, args.theta, args.n, args.omega)
    _emit({"omega_n": est.value, "std_error": est.std_error,
           "lower_bound": bound.value, "beta_star": bound.beta_star})
    return 0


def cmd_bound(args):
    spec = _spec(args)
    _validate_model(args, reps=False)
    res = lower_bound(spec, args.theta, args.n, args.omega)
    _emit({"lower_bound": res.value, "beta_star": res.beta_star, "feasible_from": res.feasible_from})
    return 0


def cmd_loss(args):
    spec = _spec(args)
    _validate_model(args)
    central, equal = expected_loss_compare(spec, args.theta, args.n, args.omega, args.loss, args.reps, args.seed)
    _emit({"loss": args.loss, "loss_centralized": central, "loss_decentralized": equal})
    return 0


def cmd_phase(args):
    _validate_model(args)
    mu_lo, mu_hi, mu_steps = args.mu_range
    s_lo, s_hi, s_steps = args.sigma_range
    for steps in (mu_steps, s_steps):
        if steps != int(steps) or steps < 2:
            raise UsageError("grid ranges need an integer step count >= 2")
    if not (mu_hi > mu_lo and s_hi > s_lo and s_lo > 0):
        raise UsageError("grid ranges need lo < hi, and sigma lo > 0")
    if args.threads is not None and args.threads < 0:
        raise UsageError("--threads must be >= 0")
    grid = phase_diagram(args.family, (mu_lo, mu_hi, int(mu_steps)), (s_lo, s_hi, int(s_steps)),
                         args.theta, args.n, args.omega, args.reps, args.seed, threads=args.threads)
    write_atomic(args.csv, grid.to_csv())
    title = f"Omega_n ({args.family}, n={args.n}, theta={args.theta:g}, omega={args.omega:.4g}, reps={args.reps})"
    write_atomic(args.svg, phase_heatmap_svg(grid, title=title))
    print(f"wrote {args.csv} and {args.svg} ({grid.shape[0]}x{grid.shape[1]} cells)")
    return 0


def _read_numbers(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return [float(tok) for tok in re.split(r"[\s,;]+", text.strip()) if tok]
    except ValueError as exc:
        raise ParameterDomainError(f"{path}: {exc}") from None


def cmd_rscore(args):
    if args.input is not None and args.values:
        raise UsageError("give either --input or values, not both")
    values = _read_numbers(args.input) if args.input is not None else args.values
    res = r_score(values)
    _emit({"r": res.r, "ll_lognormal": res.ll_lognormal, "ll_normal": res.ll_normal,
           "log_odds": res.log_odds, "n_obs": res.n_obs})
    return 0


def _coef_table(report) -> str:
    lines = []
    for key, label in (("logistic", "Logistic: improved ~ 1 + R (social trials)"),
                       ("ols", "Linear: z|error| ~ 1 + R + I + I*R (all trials)")):
        res = report[key]
        stat = res["wald_kind"]
        lines.append(f"{label}   n={res['n_obs']}")
        lines.append(f"  {'term':<12}{'coef':>12}{'std.err':>12}{stat:>10}{'p':>12}")
        for name, coef in res["coefficients"].items():
            se, w, p = res["std_errors"][name], res["wald_stats"][name], res["p_values"][name]
            lines.append(f"  {name:<12}{coef:>12.4f}{se:>12.4f}{w:>10.3f}{p:>12.3g}")
        lines.append("")
    lines.append(report["meta"]["model_note"])
    return "\n".join(lines)


def cmd_analyze(args):
    if (args.input is None) == (not args.synthetic):
        raise UsageError("give exactly one of --input PATH or --synthetic")
    if args.synthetic:
        trials, dropped = generate_synthetic(**_generator_kwargs(args)), 0
        seed = args.seed
    else:
        if not Path(args.input).is_file():
            raise FileNotFoundError(f"input file not found: {args.input}")
        trials, dropped = load_trials_with_drops(args.input)
        seed = None
    report = analyze(trials, seed=seed, dropped_rows=dropped)
    write_atomic(args.output, report_to_json(report))
    print(_coef_table(report))
    print(f"\nreport written to {args.output}")
    return 0


def cmd_synth(args):
    trials = generate_synthetic(**_generator_kwargs(args))
    write_atomic(args.output, trials_to_csv(trials))
    print(f"wrote {len(trials)} trials to {args.output}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdbound",
        description="When does centralized influence beat the equal-weight crowd? Monte Carlo, bounds, regressions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("omega", help="Monte Carlo Omega_n plus its lower bound (JSON to stdout)")
    _add_distribution(p)
    _add_model(p)
    p.set_defaults(func=cmd_omega)

    p = sub.add_parser("bound", help="lower bound on Omega_n and its maximizing beta (JSON)")
    _add_distribution(p)
    _add_model(p, reps=False)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("loss", help="paired Monte Carlo expected losses, centralized vs equal-weight (JSON)")
    _add_distribution(p)
    _add_model(p)
    p.add_argument("--loss", choices=[l.value for l in Loss], default="squared",
                   help="loss applied to (estimate - theta) (default: %(default)s)")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("phase", help="Omega_n over a (mu, sigma) grid; writes CSV and SVG heatmap")
    p.add_argument("--family", default="lognormal", choices=[f.value for f in Family],
                   help="initial-estimate family; mu -> p1, sigma -> p2 (default: %(default)s)")
    p.add_argument("--mu-range", nargs=3, type=float, metavar=("LO", "HI", "STEPS"),
                   default=[LN2 - 2.0, LN2 + 2.0, 21], help="p1 axis, inclusive (default: ln2-2 ln2+2 21)")
    p.add_argument("--sigma-range", nargs=3, type=float, metavar=("LO", "HI", "STEPS"),
                   default=[0.05, 3.0, 21], help="p2 axis, inclusive, LO > 0 (default: 0.05 3 21)")
    _add_model(p)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads, 0 = all CPUs (default: $CROWDBOUND_THREADS or 0)")
    p.add_argument("--csv", default="phase.csv", help="output CSV path (default: %(default)s)")
    p.add_argument("--svg", default="phase.svg", help="output SVG path (default: %(default)s)")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("rscore", help="heavy-tailedness R of positive estimates (JSON)")
    p.add_argument("values", nargs="*", type=float, help="estimates, all > 0 (at least 3)")
    p.add_argument("--input", default=None, help="file of numbers separated by whitespace, commas or semicolons")
    p.set_defaults(func=cmd_rscore)

    p = sub.add_parser("analyze", help="R-moderation regressions on trial data; writes a JSON report")
    p.add_argument("--input", default=None, help="trial CSV in the canonical schema")
    p.add_argument("--synthetic", action="store_true", help="analyze freshly generated synthetic trials instead")
    p.add_argument("--output", default="report.json", help="report path (default: %(default)s)")
    _add_generator(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="generate synthetic trials as a canonical CSV")
    _add_generator(p)
    p.add_argument("--output", default="trials.csv", help="output CSV path (default: %(default)s)")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (CrowdboundError, OSError) as exc:
        print(f"{parser.prog} {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
