"""Command-line driver: train, evaluate, solve, audit, sweep."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analytic, evaluator, experiment, learner
from .game import GameParams, PayoffSpec, RiskClass, validate_dilemma


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="experiment config JSON path")
    p.add_argument("--preset", choices=sorted(experiment.PRESETS),
                   help="use built-in config preset instead of --config")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--threads", type=int, default=1,
                   help="worker processes for sweep runs (0 = auto)")


def _load(args) -> experiment.ExperimentConfig:
    if args.config:
        cfg = experiment.load_config(args.config)
    else:
        cfg = experiment.defaults(args.preset or "paper")
    if args.seed is not None:
        import dataclasses
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    return cfg


def _single_point(cfg: experiment.ExperimentConfig) -> GameParams:
    """Game parameters for subcommands that act on one sweep point.

    A config with a multi-valued sweep still works here: the base game
    parameters are used and the sweep block is ignored.
    """
    points = cfg.points()
    if len(points) == 1:
        return points[0]
    return cfg.game


def cmd_defaults(args) -> int:
    cfg = experiment.defaults(args.preset or "paper")
    text = json.dumps(experiment.config_to_dict(cfg), indent=2)
    if args.print:
        print(text)
    else:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "config.json")
        with open(path, "w") as f:
            f.write(text + "\n")
        print(path)
    return 0


def cmd_train(args) -> int:
    cfg = _load(args)
    params = _single_point(cfg)
    for note in validate_dilemma(params):
        print(f"warning: {note}", file=sys.stderr)
    seed = experiment.run_seed(cfg.master_seed, 0, 0)
    pop = learner.train(params, PayoffSpec.log_utility(params), cfg.training, seed=seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "strategies.csv")
    learner.save_snapshot(pop, path)
    mean_L, mean_H = pop.mean_pi_by_class()
    print(f"trained {params.Z} agents for {pop.realized_steps} steps "
          f"(mean pi_L={mean_L:.4f}, pi_H={mean_H:.4f}) -> {path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load(args)
    params = _single_point(cfg)
    if args.strategies:
        pi, high = learner.load_snapshot(args.strategies)
    else:
        profile = analytic.StrategyProfile(pi_L=args.pi_L, pi_H=args.pi_H)
        high = params.class_array()
        pi = np.where(high, profile.pi_H, profile.pi_L)
    seed = experiment.run_seed(cfg.master_seed, 0, 0)
    report = evaluator.evaluate(
        pi, high, params,
        evaluator.EvaluationConfig(rollouts=cfg.evaluation.rollouts, seed=seed),
    )
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "results.csv")
    experiment.write_csv(
        path, "results", experiment.RESULTS_HEADER,
        [[cfg.name, params.r, params.delta, 0, report.eta, report.eta_stderr,
          report.mean_pi_L, report.mean_pi_H, report.seed]],
    )
    print(f"eta={report.eta:.6f} +- {report.eta_stderr:.6f} -> {path}")
    return 0


def _solver_config(cfg, nash=False, welfare=False, audit=False):
    import dataclasses
    return dataclasses.replace(
        cfg,
        training_enabled=False,
        solvers=dataclasses.replace(cfg.solvers, nash=nash, welfare=welfare, audit=audit),
    )


def cmd_nash(args) -> int:
    return experiment.run_experiment(_solver_config(_load(args), nash=True),
                                     args.out, threads=args.threads)


def cmd_welfare(args) -> int:
    return experiment.run_experiment(_solver_config(_load(args), welfare=True),
                                     args.out, threads=args.threads)


def cmd_audit(args) -> int:
    return experiment.run_experiment(_solver_config(_load(args), nash=True, audit=True),
                                     args.out, threads=args.threads)


def cmd_sweep(args) -> int:
    cfg = _load(args)
    return experiment.run_experiment(cfg, args.out, threads=args.threads)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="crd",
        description="Collective risk dilemma simulator and solver suite",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("defaults", help="emit a config populated with reference values")
    _add_common(p)
    p.add_argument("--print", action="store_true", help="print to stdout instead of a file")
    p.set_defaults(func=cmd_defaults)

    p = sub.add_parser("train", help="train one population and save its strategy snapshot")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="Monte Carlo group achievement of a population")
    _add_common(p)
    p.add_argument("--strategies", help="strategy snapshot CSV (defaults to a class profile)")
    p.add_argument("--pi-L", type=float, default=0.5, dest="pi_L")
    p.add_argument("--pi-H", type=float, default=0.5, dest="pi_H")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("nash", help="class-based Nash points and best-response curves")
    _add_common(p)
    p.set_defaults(func=cmd_nash)

    p = sub.add_parser("welfare", help="class-based maximum-welfare grid")
    _add_common(p)
    p.set_defaults(func=cmd_welfare)

    p = sub.add_parser("audit", help="single-agent deviation audit at Nash points")
    _add_common(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("sweep", help="full experiment: train, evaluate, solve per sweep point")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except experiment.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
