"""Command line front end: ppdl <subcommand> [options].

Subcommands cover the library surface: `learn` runs the public-private
learner on sample files, `experiment` sweeps a seeded grid of cells to
CSV, `lowerbound` measures the hard-family no-free-lunch quantities,
`yatracos-demo` runs the finite-domain learner, `tv` evaluates total
variation between two distributions, and `suggest-n` prints the private
sample size suggested by the compression-to-learner reduction.

Stochastic subcommands require --seed (no wall-clock seeding); reruns
with identical argv are byte-identical. Files are written atomically
(temp file, then rename). Exit codes: 0 ok, 2 configuration or parse
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from .distributions import (
    Dataset,
    FiniteDist,
    dist_from_dict,
    dist_to_dict,
    sample,
)
from .compression import GridSpec
from .errors import ConfigError, NumericalError, PpdlError
from .lowerbound import NFL_COLUMNS, NflBudgets, nfl_report
from .pipeline import (
    ExperimentSpec,
    FamilySpec,
    LearnerConfig,
    format_experiment_csv,
    generate_candidates,
    run_experiment,
    suggest_n,
)
from .rng import as_generator, derive_seed
from .selection import AuditLog, dp_select
from .tv import is_gaussian_1d, tv_between
from .yatracos import yatracos_learn

YATRACOS_COLUMNS = (
    "trial",
    "seed",
    "chosen_index",
    "cover_size",
    "reduced_domain",
    "tv_error",
    "success_at_alpha",
)


@dataclass
class CliConfig:
    """Parsed invocation: subcommand plus the shared plumbing flags."""

    subcommand: str
    config_path: str | None
    out_path: str | None
    seed: int | None
    audit: bool
    verbose: int


def _atomic_write(path: str, text: str) -> None:
    """Write text to path via a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ppdl-tmp-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(value) -> str:
    # repr of a float is its shortest round-trip decimal form.
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _format_csv(rows: list, columns: tuple) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _deliver(payload: str, cli: CliConfig, summary: str) -> None:
    """Payload to --out (or stdout); the one-line summary to the other stream."""
    if cli.out_path is not None:
        _atomic_write(cli.out_path, payload)
        print(summary)
    else:
        sys.stdout.write(payload)
        print(summary, file=sys.stderr)


def _require_seed(cli: CliConfig) -> int:
    if cli.seed is None:
        raise ConfigError(f"--seed is required for '{cli.subcommand}'")
    return cli.seed


def _parse_seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--seed must be an integer, got {text!r}")
    if not (0 <= value < 2**64):
        raise argparse.ArgumentTypeError("--seed must fit in an unsigned 64-bit integer")
    return value


def _parse_count(text: str) -> int:
    """Trial counts; scientific notation like 1e5 is accepted."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer count, got {text!r}")
    return int(value)


def _parse_k_list(text: str) -> list:
    try:
        ks = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--k must be comma-separated integers, got {text!r}")
    if not ks:
        raise argparse.ArgumentTypeError("--k must name at least one value")
    return ks


def _check_keys(obj: dict, allowed: tuple, where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{where} has unknown key {unknown[0]!r}")


def _load_config(path: str | None, command: str) -> dict:
    if path is None:
        raise ConfigError(f"--config is required for '{command}'")
    with open(path) as handle:
        text = handle.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"config file {path!r} must hold a JSON object")
    return obj


def _family_from_dict(obj: dict) -> FamilySpec:
    _check_keys(obj, ("kind", "components", "weight_step"), "family")
    return FamilySpec(
        kind=obj.get("kind", "gaussian"),
        components=obj.get("components", 1),
        weight_step=obj.get("weight_step", 0.25),
    )


def _grid_from_dict(obj: dict) -> GridSpec:
    fields = ("mu_halfwidth", "mu_step", "sigma_lo", "sigma_hi", "sigma_step")
    _check_keys(obj, fields, "grid")
    missing = [f for f in fields if f not in obj]
    if missing:
        raise ConfigError(f"grid is missing key {missing[0]!r}")
    return GridSpec(**{f: obj[f] for f in fields})


def _load_samples(path: str, role: str) -> Dataset:
    try:
        points = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"sample file {path!r} is not numeric CSV: {exc}") from exc
    return Dataset(points=points, role=role)


def _finite_from_entry(obj, where: str) -> FiniteDist:
    # Bare {"masses": [...]} is accepted alongside the kinded form.
    if isinstance(obj, dict) and "kind" not in obj and "masses" in obj:
        _check_keys(obj, ("masses",), where)
        return FiniteDist(masses=obj["masses"])
    dist = dist_from_dict(obj)
    if not isinstance(dist, FiniteDist):
        raise ConfigError(f"{where} must be a finite-domain distribution")
    return dist


def _emit_audit(audit: AuditLog | None) -> None:
    if audit is not None:
        for event in audit.events:
            print(f"audit: {event}", file=sys.stderr)


def _note(cli: CliConfig, text: str) -> None:
    if cli.verbose > 0:
        print(f"note: {text}", file=sys.stderr)


def _cmd_learn(cli: CliConfig) -> int:
    seed = _require_seed(cli)
    cfg = _load_config(cli.config_path, "learn")
    allowed = (
        "public",
        "private",
        "alpha",
        "beta",
        "epsilon",
        "family",
        "grid",
        "robust",
        "robustness",
        "shift_gamma",
        "mc_trials",
        "max_candidates",
        "max_tournament",
        "component_keep",
        "method",
    )
    _check_keys(cfg, allowed, "learn config")
    for key in ("public", "private"):
        if key not in cfg:
            raise ConfigError(f"learn config is missing key {key!r}")
    lcfg = LearnerConfig(
        alpha=cfg.get("alpha", 0.2),
        beta=cfg.get("beta", 0.1),
        epsilon=cfg.get("epsilon", 1.0),
        family=_family_from_dict(cfg.get("family", {})),
        grid=_grid_from_dict(cfg["grid"]) if "grid" in cfg else None,
        robust=cfg.get("robust", False),
        robustness=cfg.get("robustness", 2.0 / 3.0),
        shift_gamma=cfg.get("shift_gamma", 0.0),
        mc_trials=cfg.get("mc_trials", 1000),
        max_candidates=cfg.get("max_candidates", LearnerConfig().max_candidates),
        max_tournament=cfg.get("max_tournament", 256),
        component_keep=cfg.get("component_keep", 32),
        method=cfg.get("method", "auto"),
    )
    if lcfg.shift_gamma > lcfg.robustness / 2.0 + 1e-12:
        raise ConfigError("shift_gamma exceeds robustness/2; the shifted guarantee is void")
    if lcfg.shift_gamma > 0.0 and not lcfg.robust:
        lcfg = replace(lcfg, robust=True)

    audit = AuditLog() if cli.audit else None
    if audit is not None:
        audit.log("public_file_read:start")
    public = _load_samples(cfg["public"], "public")
    if audit is not None:
        audit.log("public_file_read:done")
        audit.log("generate_candidates:start")
    candidates = generate_candidates(public, lcfg)
    _note(cli, f"{len(candidates.hypotheses)} candidates from {len(public)} public samples")
    if audit is not None:
        audit.log("generate_candidates:done")
        audit.log("private_file_read:start")
    private = _load_samples(cfg["private"], "private")
    if audit is not None:
        audit.log("private_file_read:done")
    if public.points.shape[1] != private.points.shape[1]:
        raise ConfigError("public and private sample files have different dimensions")
    chosen, result = dp_select(
        candidates,
        private,
        lcfg.epsilon,
        as_generator(seed),
        mc_trials=lcfg.mc_trials,
        method=lcfg.method,
        audit=audit,
    )
    payload = {
        "chosen": dist_to_dict(chosen),
        "chosen_index": int(result.chosen),
        "candidates": len(result.probabilities),
        "epsilon": float(result.epsilon),
        "n": int(result.n),
    }
    _emit_audit(audit)
    summary = (
        f"learn: chose candidate {result.chosen} of {len(result.probabilities)}"
        f" (epsilon={result.epsilon!r}, n={result.n})"
    )
    _deliver(json.dumps(payload, sort_keys=True) + "\n", cli, summary)
    return 0


def _cmd_experiment(cli: CliConfig) -> int:
    seed = _require_seed(cli)
    cfg = _load_config(cli.config_path, "experiment")
    allowed = (
        "m_list",
        "n_list",
        "epsilon_list",
        "trials",
        "family",
        "dims",
        "alpha",
        "beta",
        "truth",
        "mean_range",
        "var_range",
        "min_separation",
        "public_mean_offset",
        "robust",
        "shift_gamma",
        "mc_trials",
        "max_tournament",
        "component_keep",
        "tv_trials",
    )
    _check_keys(cfg, allowed, "experiment config")
    for key in ("m_list", "n_list", "epsilon_list", "trials"):
        if key not in cfg:
            raise ConfigError(f"experiment config is missing key {key!r}")
    spec = ExperimentSpec(
        m_list=cfg["m_list"],
        n_list=cfg["n_list"],
        epsilon_list=cfg["epsilon_list"],
        trials=cfg["trials"],
        master_seed=seed,
        family=_family_from_dict(cfg.get("family", {})),
        dims=cfg.get("dims", 1),
        alpha=cfg.get("alpha", 0.2),
        beta=cfg.get("beta", 0.1),
        truth=dist_from_dict(cfg["truth"]) if "truth" in cfg else None,
        mean_range=tuple(cfg.get("mean_range", (-10.0, 10.0))),
        var_range=tuple(cfg.get("var_range", (0.25, 4.0))),
        min_separation=cfg.get("min_separation", 0.2),
        public_mean_offset=cfg.get("public_mean_offset", 0.0),
        robust=cfg.get("robust", False),
        shift_gamma=cfg.get("shift_gamma", 0.0),
        mc_trials=cfg.get("mc_trials", 1000),
        max_tournament=cfg.get("max_tournament", 256),
        component_keep=cfg.get("component_keep", 32),
        tv_trials=cfg.get("tv_trials", 20000),
    )
    rows = run_experiment(spec)
    cells = len(spec.m_list) * len(spec.n_list) * len(spec.epsilon_list)
    summary = f"experiment: {len(rows)} rows ({cells} cells x {spec.trials} trials)"
    _deliver(format_experiment_csv(rows), cli, summary)
    return 0


def _cmd_lowerbound(cli: CliConfig, args) -> int:
    seed = _require_seed(cli)
    defaults = NflBudgets()
    budgets = NflBudgets(
        eta_trials=args.trials_eta if args.trials_eta is not None else defaults.eta_trials,
        rk_outer=defaults.rk_outer,
        rk_inner=args.trials_rk if args.trials_rk is not None else defaults.rk_inner,
        sk_x_trials=defaults.sk_x_trials,
        sk_q_trials=defaults.sk_q_trials,
    )
    _note(
        cli,
        f"budgets: eta_trials={budgets.eta_trials}, rk_outer={budgets.rk_outer},"
        f" rk_inner={budgets.rk_inner}, sk_x_trials={budgets.sk_x_trials},"
        f" sk_q_trials={budgets.sk_q_trials}",
    )
    rows = nfl_report(args.d, args.k, seed, budgets)
    summary = (
        f"lowerbound: d={args.d}, k={','.join(str(k) for k in args.k)},"
        f" decay_flag={rows[0]['decay_flag']}"
    )
    _deliver(_format_csv(rows, NFL_COLUMNS), cli, summary)
    return 0


def _cmd_yatracos_demo(cli: CliConfig, args) -> int:
    seed = _require_seed(cli)
    with open(args.classes) as handle:
        try:
            entries = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"classes file {args.classes!r} is not valid JSON: {exc}") from exc
    if not isinstance(entries, list) or len(entries) < 2:
        raise ConfigError("classes file must hold a JSON list of at least 2 distributions")
    classes = [_finite_from_entry(e, f"classes[{i}]") for i, e in enumerate(entries)]
    for i, c in enumerate(classes):
        if c.domain_size != args.domain:
            raise ConfigError(
                f"classes[{i}] has domain size {c.domain_size}, --domain says {args.domain}"
            )
    # The demo treats the first listed hypothesis as the sampling truth.
    truth = classes[0]
    rows = []
    for trial in range(args.trials):
        trial_seed = derive_seed(seed, trial)
        rng_data = as_generator(derive_seed(trial_seed, 0))
        public = sample(truth, args.m, rng_data, role="public")
        private = sample(truth, args.n, rng_data, role="private")
        outcome = yatracos_learn(
            classes,
            public,
            private,
            args.epsilon,
            args.alpha,
            derive_seed(trial_seed, 1),
        )
        tv, _, _ = tv_between(outcome.chosen, truth)
        rows.append(
            {
                "trial": trial,
                "seed": trial_seed,
                "chosen_index": outcome.chosen_index,
                "cover_size": outcome.cover_size,
                "reduced_domain": outcome.reduced_domain_size,
                "tv_error": tv,
                "success_at_alpha": int(tv <= args.alpha),
            }
        )
    mean_tv = sum(r["tv_error"] for r in rows) / len(rows)
    summary = f"yatracos-demo: {args.trials} trials, mean tv {mean_tv!r}"
    _deliver(_format_csv(rows, YATRACOS_COLUMNS), cli, summary)
    return 0


def _cmd_tv(cli: CliConfig, args) -> int:
    try:
        p_obj = json.loads(args.p)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--p is not valid JSON: {exc}") from exc
    p = dist_from_dict(p_obj)
    if args.q == "same":
        q = p
    else:
        try:
            q_obj = json.loads(args.q)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--q is not valid JSON: {exc}") from exc
        q = dist_from_dict(q_obj)
    exact = (is_gaussian_1d(p) and is_gaussian_1d(q)) or (
        isinstance(p, FiniteDist) and isinstance(q, FiniteDist)
    )
    rng = None
    if not exact:
        if cli.seed is None:
            raise ConfigError("--seed is required when tv falls back to Monte Carlo")
        rng = as_generator(cli.seed)
    tv, half, method = tv_between(p, q, trials=args.trials, rng=rng)
    print(repr(float(tv)))
    print(f"tv: method={method}, ci_half_width={half!r}", file=sys.stderr)
    return 0


def _cmd_suggest_n(cli: CliConfig, args) -> int:
    value = suggest_n(args.alpha, args.beta, args.epsilon, args.tau, args.bits)
    print(value)
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--seed", type=_parse_seed, help="unsigned 64-bit master seed")
    sub.add_argument("--out", help="output path (written atomically)")
    sub.add_argument("--audit", action="store_true", help="emit a call-order audit log")
    sub.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppdl",
        description="Distribution learning from public and private samples under pure DP.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    learn = sub.add_parser("learn", help="run the public-private learner on sample files")
    _add_common(learn)

    experiment = sub.add_parser("experiment", help="run a seeded sweep, write a CSV report")
    _add_common(experiment)

    lowerbound = sub.add_parser("lowerbound", help="measure hard-family no-free-lunch quantities")
    _add_common(lowerbound)
    lowerbound.add_argument("--d", type=int, default=2, help="ambient dimension (2..4)")
    lowerbound.add_argument(
        "--k", type=_parse_k_list, default=[10, 20, 40, 80], help="comma-separated k sweep"
    )
    lowerbound.add_argument(
        "--trials-eta", type=_parse_count, default=None, help="bad-event mass trials (e.g. 1e5)"
    )
    lowerbound.add_argument(
        "--trials-rk", type=_parse_count, default=None, help="TV-ball mass inner trials"
    )

    demo = sub.add_parser("yatracos-demo", help="finite-domain learner demo")
    _add_common(demo)
    demo.add_argument("--domain", type=int, required=True, help="finite domain size")
    demo.add_argument("--classes", required=True, help="JSON list of finite distributions")
    demo.add_argument("--m", type=int, default=40, help="public sample count")
    demo.add_argument("--n", type=int, default=2000, help="private sample count")
    demo.add_argument("--epsilon", type=float, default=1.0)
    demo.add_argument("--alpha", type=float, default=0.1)
    demo.add_argument("--trials", type=int, default=1)

    tv = sub.add_parser("tv", help="total variation between two distributions")
    _add_common(tv)
    tv.add_argument("--p", required=True, help="distribution JSON")
    tv.add_argument("--q", required=True, help="distribution JSON, or 'same'")
    tv.add_argument("--trials", type=_parse_count, default=100000, help="Monte Carlo trials")

    suggest = sub.add_parser("suggest-n", help="private sample size from the reduction formula")
    _add_common(suggest)
    suggest.add_argument("--alpha", type=float, required=True)
    suggest.add_argument("--beta", type=float, required=True)
    suggest.add_argument("--epsilon", type=float, required=True)
    suggest.add_argument("--tau", type=int, required=True)
    suggest.add_argument("--bits", type=int, required=True)

    return parser


def dispatch(argv: list) -> int:
    """Parse argv, run the subcommand, map package errors to exit codes."""
    parser = build_parser()
    args = parser.parse_args(argv)
    cli = CliConfig(
        subcommand=args.command,
        config_path=getattr(args, "config", None),
        out_path=getattr(args, "out", None),
        seed=getattr(args, "seed", None),
        audit=getattr(args, "audit", False),
        verbose=getattr(args, "verbose", 0),
    )
    try:
        if args.command == "learn":
            return _cmd_learn(cli)
        if args.command == "experiment":
            return _cmd_experiment(cli)
        if args.command == "lowerbound":
            return _cmd_lowerbound(cli, args)
        if args.command == "yatracos-demo":
            return _cmd_yatracos_demo(cli, args)
        if args.command == "tv":
            return _cmd_tv(cli, args)
        if args.command == "suggest-n":
            return _cmd_suggest_n(cli, args)
        raise ConfigError(f"unknown subcommand {args.command!r}")
    except ConfigError as exc:
        print(f"ppdl: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ppdl: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"ppdl: numerical error: {exc}", file=sys.stderr)
        return 3
    except PpdlError as exc:
        print(f"ppdl: error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
