"""Command line interface: bounds / simulate / sweep / olu / plot subcommands."""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import bounds, crowd, harness, mechanisms, olu
from .errors import ConfigError, DomainError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unsurecrowd",
                                     description="Crowdsourcing-with-unsure-option toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="evaluate an analytic cost bound, JSON to stdout")
    p.add_argument("--mu", type=float, help="crowd mean ability")
    p.add_argument("--sigma2", type=float, help="crowd ability variance (enables the threshold plan)")
    p.add_argument("--gamma", type=float, default=0.0, help="tail asymmetry ratio for the plan")
    p.add_argument("--T", type=float, help="ability threshold (with --eta: quality bound)")
    p.add_argument("--eta", type=float, help="upper tail probability at T")
    p.add_argument("--delta", type=float, default=0.05, help="failure probability")
    p.add_argument("--alpha", type=float, default=2.0, help="effectiveness exponent")
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("simulate", help="run one task under a mechanism, print a summary")
    _add_crowd_flags(p)
    p.add_argument("--mechanism", choices=["simple", "quality", "unsure"], default="simple")
    p.add_argument("--threshold", type=float, help="mechanism threshold")
    p.add_argument("--labels", type=int, help="stop after this many returned labels")
    p.add_argument("--workers", type=int, help="stop after this many consumed workers")
    p.add_argument("--budget", type=float, help="stop when the budget is exhausted")
    p.add_argument("--payment", choices=["flat", "incentive"], default="flat")
    p.add_argument("--truth", type=int, choices=[-1, 1], default=1)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("sweep", help="run an experiment grid and write a CSV")
    p.add_argument("--config", help="TOML config; default is the built-in three-Beta sweep")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default="results.csv", help="output CSV path")
    p.add_argument("--tasks", type=int, default=None, help="override tasks per cell")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("olu", help="run the online threshold bandit, trace CSV out")
    _add_crowd_flags(p)
    p.add_argument("--rounds", type=int, default=10000)
    p.add_argument("--candidates", type=float, nargs="+", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="olu_trace.csv")

    p = sub.add_parser("plot", help="render a results CSV to SVG")
    p.add_argument("csv", help="input results CSV")
    p.add_argument("--out", default="results.svg")
    return parser


def _add_crowd_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dist", choices=["beta", "truncated_beta", "point_mass"], default="beta")
    p.add_argument("--alpha-param", type=float, default=2.2, help="Beta alpha")
    p.add_argument("--beta-param", type=float, default=2.0, help="Beta beta")
    p.add_argument("--theta", type=float, default=0.75, help="point-mass ability")
    p.add_argument("--floor", type=float, default=0.0, help="truncation floor")
    p.add_argument("--link", choices=["folded", "identity", "noisy_folded"], default="folded")
    p.add_argument("--kappa", type=float, default=0.05)
    p.add_argument("--golden-k", type=int, default=0, help="golden tasks in the testing stage")


def _crowd_from_args(args) -> tuple[crowd.AbilitySpec, crowd.ConfidenceLink]:
    if args.dist == "beta":
        spec = crowd.Beta(args.alpha_param, args.beta_param)
    elif args.dist == "truncated_beta":
        spec = crowd.TruncatedBeta(args.alpha_param, args.beta_param, args.floor)
    else:
        spec = crowd.PointMass(args.theta)
    if args.link == "folded":
        link = crowd.Folded()
    elif args.link == "identity":
        link = crowd.IdentityClamped()
    else:
        link = crowd.NoisyFolded(args.kappa)
    return spec, link


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_bounds(args) -> int:
    if args.T is not None and args.eta is not None:
        report = bounds.quality_cost_bound(args.T, args.eta, args.delta)
    elif args.mu is not None and args.sigma2 is not None:
        report = bounds.theorem1_report(args.mu, args.sigma2, args.gamma, args.alpha)
    elif args.mu is not None:
        report = bounds.simple_cost_bound(args.mu, args.delta)
    else:
        raise ConfigError("bounds needs --mu [--sigma2], or --T with --eta")
    _emit(json.dumps(report.as_dict(), indent=2), args.out)
    return 0


def _cmd_simulate(args) -> int:
    spec, link = _crowd_from_args(args)
    if args.mechanism == "simple":
        mech = mechanisms.Simple()
    elif args.mechanism == "quality":
        if args.threshold is None:
            raise ConfigError("quality mechanism needs --threshold")
        mech = mechanisms.QualityEnsured(args.threshold)
    else:
        if args.threshold is None:
            raise ConfigError("unsure mechanism needs --threshold")
        mech = mechanisms.UnsureFixed(args.threshold)
    if args.payment == "flat":
        pay = mechanisms.Flat()
    else:
        if args.threshold is None:
            raise ConfigError("incentive payment needs --threshold")
        pay = mechanisms.IncentiveCompatible(args.threshold)
    stops = [s for s in (args.labels, args.workers, args.budget) if s is not None]
    if len(stops) != 1:
        raise ConfigError("give exactly one of --labels, --workers, --budget")
    if args.labels is not None:
        stop = mechanisms.FixedReturnedLabels(args.labels)
    elif args.workers is not None:
        stop = mechanisms.FixedWorkers(args.workers)
    else:
        stop = mechanisms.FixedBudget(args.budget)
    seed = harness.default_seed() if args.seed is None else args.seed
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    res = mechanisms.run_task(mech, pay, spec, link, crowd.GoldenTestConfig(args.golden_k),
                              stop, args.truth, rng)
    print(json.dumps({
        "truth": res.truth,
        "estimate": res.estimate,
        "labels": [rec.value for rec in res.labels],
        "unsure_count": res.unsure_count,
        "rejected_count": res.rejected_count,
        "workers_consumed": res.workers_consumed,
        "total_payment": res.total_payment,
        "seed": seed,
    }, indent=2))
    return 0


def _cmd_sweep(args) -> int:
    if args.config:
        cfg = harness.load_config(args.config, seed_override=args.seed)
    else:
        cfg = harness.default_sweep_config(seed=args.seed)
    if args.tasks is not None:
        cfg = harness.ExperimentConfig(
            crowds=cfg.crowds, mechanisms=cfg.mechanisms, test=cfg.test, tasks=args.tasks,
            labels_per_task=cfg.labels_per_task, replications=cfg.replications, seed=cfg.seed)
    rows = harness.run_experiment(cfg, threads=args.threads)
    harness.write_results(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_olu(args) -> int:
    spec, link = _crowd_from_args(args)
    candidates = tuple(args.candidates) if args.candidates else harness.DEFAULT_CANDIDATES
    seed = harness.default_seed() if args.seed is None else args.seed
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    trace, state = olu.run_olu(spec, link, crowd.GoldenTestConfig(args.golden_k),
                               args.rounds, candidates, rng)
    total = 0.0
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["round", "arm_threshold", "reward", "cumulative_mean"])
        for row in trace:
            total += row.reward
            writer.writerow([row.round, format(row.threshold, ".9g"),
                             format(row.reward, ".9g"), format(total / row.round, ".9g")])
    best = max(range(len(state.candidates)), key=lambda k: state.counts[k])
    print(f"wrote {len(trace)} rounds to {args.out}; "
          f"most-pulled threshold {state.candidates[best]} ({state.counts[best]} pulls)")
    return 0


def _cmd_plot(args) -> int:
    rows = harness.read_results(args.csv)
    harness.emit_plot(rows, args.out)
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "bounds": _cmd_bounds,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "olu": _cmd_olu,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures (missing files, etc.)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
