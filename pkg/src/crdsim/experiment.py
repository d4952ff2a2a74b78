"""Experiment orchestration: configs, sweeps, seeding, CSV artifacts.

A declarative JSON config names a game, a training recipe, an evaluation
recipe, an optional sweep over r or delta, and solver toggles.  Running an
experiment trains/evaluates every (sweep point, run seed) pair, runs the
enabled solvers per point, and writes versioned CSVs plus a manifest that
makes every artifact reproducible from (config hash, master seed).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic, evaluator, learner
from .game import GameParams, PayoffSpec, RiskClass, validate_dilemma

SCHEMAS = {
    "results": "results-v1",
    "strategies": "strategies-v1",
    "nash": "nash-v1",
    "bestresponse": "bestresponse-v1",
    "welfare": "welfare-v1",
    "welfare_grid": "welfare-grid-v1",
    "audit": "audit-v1",
    "manifest": "manifest-v1",
}


class ConfigError(ValueError):
    """Invalid experiment config; the message names the offending field."""


@dataclass(frozen=True)
class SweepSpec:
    axis: str = "r"                  # "r" or "delta"
    values: tuple[float, ...] = ()


@dataclass(frozen=True)
class SolverSpec:
    nash: bool = False
    welfare: bool = False
    audit: bool = False
    grid_epsilon: float = 0.001


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    game: GameParams = field(default_factory=GameParams)
    training: learner.TrainingConfig = field(default_factory=learner.TrainingConfig)
    training_enabled: bool = True
    evaluation: evaluator.EvaluationConfig = field(default_factory=evaluator.EvaluationConfig)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    solvers: SolverSpec = field(default_factory=SolverSpec)
    master_seed: int = 1
    notes: str = ""

    def points(self) -> list[GameParams]:
        """Game parameters per sweep point (the base game if no sweep)."""
        if not self.sweep.values:
            return [self.game]
        out = []
        for v in self.sweep.values:
            try:
                out.append(dataclasses.replace(self.game, **{self.sweep.axis: v}))
            except ValueError as e:
                raise ConfigError(f"sweep.values: {self.sweep.axis}={v}: {e}") from e
        return out


PRESETS = {
    # full reproduction scale
    "paper": dict(steps=2_500_000, min_updates=30_000, runs=5, rollouts=1_000_000),
    # CI-speed scale for acceptance runs
    "desk": dict(steps=500_000, min_updates=6_000, runs=3, rollouts=100_000),
}


def defaults(preset: str = "paper") -> ExperimentConfig:
    """Config populated with the reference numeric values for a preset."""
    if preset not in PRESETS:
        raise ConfigError(f"preset: unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    ps = PRESETS[preset]
    return ExperimentConfig(
        name=f"crd-{preset}",
        game=GameParams(Z=200, N=6, M=3, b=1.0, c=0.1, p=0.7, r=0.5, delta=0.1, z_H=0.5),
        training=learner.TrainingConfig(
            steps=ps["steps"], min_updates=ps["min_updates"], phi=0.001, runs=ps["runs"]
        ),
        evaluation=evaluator.EvaluationConfig(rollouts=ps["rollouts"]),
        sweep=SweepSpec(axis="r", values=(0.1, 0.3, 0.5, 0.7, 0.9)),
        solvers=SolverSpec(grid_epsilon=0.001),
        master_seed=1,
    )


# ---------------------------------------------------------------------------
# config (de)serialization


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "name": cfg.name,
        "game": {
            k: getattr(cfg.game, k)
            for k in ("Z", "N", "M", "b", "c", "p", "r", "delta", "z_H")
        },
        "training": {
            "enabled": cfg.training_enabled,
            "steps": cfg.training.steps,
            "min_updates": cfg.training.min_updates,
            "phi": cfg.training.phi,
            "runs": cfg.training.runs,
        },
        "evaluation": {"rollouts": cfg.evaluation.rollouts},
        "sweep": {"axis": cfg.sweep.axis, "values": list(cfg.sweep.values)},
        "solvers": {
            "nash": cfg.solvers.nash,
            "welfare": cfg.solvers.welfare,
            "audit": cfg.solvers.audit,
            "grid_epsilon": cfg.solvers.grid_epsilon,
        },
        "master_seed": cfg.master_seed,
        "notes": cfg.notes,
    }


def _take(block: dict, block_name: str, key: str, default):
    value = block.get(key, default)
    if value is None:
        raise ConfigError(f"{block_name}.{key}: missing required field")
    return value


def config_from_dict(d: dict) -> ExperimentConfig:
    for block in ("game", "training", "evaluation"):
        if block not in d:
            raise ConfigError(f"{block}: missing required block")
        if not isinstance(d[block], dict):
            raise ConfigError(f"{block}: expected an object")
    base = defaults("paper")
    g = d["game"]
    try:
        game = GameParams(
            Z=int(_take(g, "game", "Z", base.game.Z)),
            N=int(_take(g, "game", "N", base.game.N)),
            M=int(_take(g, "game", "M", base.game.M)),
            b=float(_take(g, "game", "b", base.game.b)),
            c=float(_take(g, "game", "c", base.game.c)),
            p=float(_take(g, "game", "p", base.game.p)),
            r=float(_take(g, "game", "r", base.game.r)),
            delta=float(_take(g, "game", "delta", base.game.delta)),
            z_H=float(_take(g, "game", "z_H", base.game.z_H)),
        )
    except ValueError as e:
        raise ConfigError(f"game: {e}") from e
    t = d["training"]
    try:
        training = learner.TrainingConfig(
            steps=int(_take(t, "training", "steps", base.training.steps)),
            min_updates=int(_take(t, "training", "min_updates", base.training.min_updates)),
            phi=float(_take(t, "training", "phi", base.training.phi)),
            runs=int(_take(t, "training", "runs", base.training.runs)),
        )
    except ValueError as e:
        raise ConfigError(f"training: {e}") from e
    e_blk = d["evaluation"]
    try:
        evaluation = evaluator.EvaluationConfig(
            rollouts=int(_take(e_blk, "evaluation", "rollouts", base.evaluation.rollouts))
        )
    except ValueError as e:
        raise ConfigError(f"evaluation: {e}") from e
    s = d.get("sweep") or {}
    axis = s.get("axis", "r")
    if axis not in ("r", "delta"):
        raise ConfigError(f"sweep.axis: must be 'r' or 'delta', got {axis!r}")
    values = tuple(float(v) for v in s.get("values", ()))
    sv = d.get("solvers") or {}
    try:
        solvers = SolverSpec(
            nash=bool(sv.get("nash", False)),
            welfare=bool(sv.get("welfare", False)),
            audit=bool(sv.get("audit", False)),
            grid_epsilon=float(sv.get("grid_epsilon", 0.001)),
        )
        analytic.GridSpec(solvers.grid_epsilon)
    except ValueError as e:
        raise ConfigError(f"solvers.grid_epsilon: {e}") from e
    cfg = ExperimentConfig(
        name=str(d.get("name", "experiment")),
        game=game,
        training=training,
        training_enabled=bool(t.get("enabled", True)),
        evaluation=evaluation,
        sweep=SweepSpec(axis=axis, values=values),
        solvers=solvers,
        master_seed=int(d.get("master_seed", 1)),
        notes=str(d.get("notes", "")),
    )
    cfg.points()  # fail fast on sweep values that produce invalid class risks
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path}: invalid JSON: {e}") from e
    return config_from_dict(data)


def config_hash(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def run_seed(master_seed: int, point_index: int, run_index: int) -> int:
    """Stable per-(sweep point, run) seed derived from the master seed."""
    digest = hashlib.sha256(f"{master_seed}:{point_index}:{run_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1  # fits a non-negative int64


# ---------------------------------------------------------------------------
# CSV helpers


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, schema_key: str, header: list[str], rows,
              preamble: list[str] | None = None) -> None:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMAS[schema_key]}\n")
    for line in preamble or ():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    with open(path, "w") as f:
        f.write(buf.getvalue())


def read_csv(path) -> tuple[str, list[dict]]:
    """Read a schema-tagged CSV; returns (schema id, rows as dicts)."""
    schema = ""
    lines = []
    with open(path) as f:
        for line in f:
            if line.startswith("# schema="):
                schema = line.strip().split("=", 1)[1]
            elif not line.startswith("#"):
                lines.append(line)
    return schema, list(csv.DictReader(lines))


def write_welfare_grid_csv(path, wg: analytic.WelfareGrid, params: GameParams) -> None:
    """Dense welfare matrix with axis headers and the argmax record."""
    buf = io.StringIO()
    a_L, a_H = wg.argmax
    buf.write(f"# schema={SCHEMAS['welfare_grid']}\n")
    buf.write(f"# r={params.r!r} delta={params.delta!r}\n")
    buf.write(f"# argmax_pi_L={a_L!r} argmax_pi_H={a_H!r} max_welfare={wg.max_welfare!r}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pi_L\\pi_H"] + [repr(float(v)) for v in wg.values])
    for i, v in enumerate(wg.values):
        w.writerow([repr(float(v))] + [repr(float(x)) for x in wg.welfare[i]])
    with open(path, "w") as f:
        f.write(buf.getvalue())


# ---------------------------------------------------------------------------
# orchestration

RESULTS_HEADER = ["experiment", "r", "delta", "run", "eta", "eta_stderr",
                  "mean_pi_L", "mean_pi_H", "seed"]
STRATEGIES_HEADER = ["experiment", "r", "delta", "run", "agent_id", "class",
                     "q_C", "q_D", "pi", "updates"]
NASH_HEADER = ["experiment", "r", "delta", "pi_L", "pi_H", "residual", "refined"]
BR_HEADER = ["experiment", "r", "delta", "class", "opponent_pi",
             "response_min", "response_max"]
WELFARE_HEADER = ["experiment", "r", "delta", "max_welfare",
                  "argmax_pi_L", "argmax_pi_H"]
AUDIT_HEADER = ["experiment", "r", "delta", "point_pi_L", "point_pi_H",
                "deviant_class", "deviant_pi", "deviant_pi_prime",
                "delta_payoff", "ci_low", "ci_high", "method"]


def _train_eval_task(args):
    game_dict, training_dict, rollouts, seed = args
    params = GameParams(**game_dict)
    cfg = learner.TrainingConfig(**training_dict)
    pop = learner.train(params, PayoffSpec.log_utility(params), cfg, seed=seed)
    report = evaluator.evaluate(
        pop.pi, pop.classes, params,
        evaluator.EvaluationConfig(rollouts=rollouts, seed=seed),
    )
    return pop.q, pop.updates, pop.realized_steps, report


def _game_dict(params: GameParams) -> dict:
    return {k: getattr(params, k) for k in ("Z", "N", "M", "b", "c", "p", "r", "delta", "z_H")}


def run_experiment(cfg: ExperimentConfig, out_dir, threads: int = 1) -> int:
    """Execute an experiment; returns a process exit status (0 = clean)."""
    os.makedirs(out_dir, exist_ok=True)
    points = cfg.points()
    results_rows, strategy_rows, nash_rows, br_rows = [], [], [], []
    welfare_rows, audit_rows, error_rows = [], [], []
    manifest_points = []
    dilemma_notes = []

    if threads == 0:
        threads = os.cpu_count() or 1

    # training + evaluation over (point, run)
    tasks = []
    for p_idx, params in enumerate(points):
        seeds = [run_seed(cfg.master_seed, p_idx, k) for k in range(cfg.training.runs)]
        manifest_points.append(
            {"index": p_idx, "r": params.r, "delta": params.delta, "run_seeds": seeds}
        )
        for v in validate_dilemma(params):
            dilemma_notes.append(f"point {p_idx} (r={params.r}, delta={params.delta}): {v}")
        if cfg.training_enabled:
            t_dict = {
                "steps": cfg.training.steps, "min_updates": cfg.training.min_updates,
                "phi": cfg.training.phi, "runs": cfg.training.runs,
            }
            for k, s in enumerate(seeds):
                tasks.append((p_idx, k, (_game_dict(params), t_dict,
                                         cfg.evaluation.rollouts, s)))

    if tasks:
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                outcomes = list(pool.map(_train_eval_task, [t[2] for t in tasks]))
        else:
            outcomes = [_train_eval_task(t[2]) for t in tasks]
        for (p_idx, k, task), (q, updates, realized, report) in zip(tasks, outcomes):
            params = points[p_idx]
            results_rows.append([
                cfg.name, params.r, params.delta, k, report.eta, report.eta_stderr,
                report.mean_pi_L, report.mean_pi_H, report.seed,
            ])
            pop = learner.TrainedPopulation(
                params=params, config=cfg.training, seed=report.seed,
                realized_steps=realized, q=q, updates=updates,
            )
            pi = pop.pi
            for i in range(params.Z):
                strategy_rows.append([
                    cfg.name, params.r, params.delta, k, i, params.class_of(i).value,
                    float(q[i, 0]), float(q[i, 1]), float(pi[i]), int(updates[i]),
                ])

    # analytic solvers per point
    status = 0
    grid = analytic.GridSpec(cfg.solvers.grid_epsilon)
    for p_idx, params in enumerate(points):
        try:
            if cfg.solvers.nash or cfg.solvers.audit:
                spec = PayoffSpec.log_utility(params)
                nash_points = analytic.find_class_nash(params, grid, spec=spec)
                for pt in nash_points:
                    nash_rows.append([
                        cfg.name, params.r, params.delta,
                        pt.profile.pi_L, pt.profile.pi_H, pt.residual, int(pt.refined),
                    ])
                curve_L, curve_H = analytic.best_response_curves(params, grid, spec=spec)
                for curve in (curve_L, curve_H):
                    rmin, rmax = curve.response_min, curve.response_max
                    for j, opp in enumerate(curve.opponent_values):
                        br_rows.append([
                            cfg.name, params.r, params.delta, curve.risk_class.value,
                            float(opp), float(rmin[j]), float(rmax[j]),
                        ])
                if cfg.solvers.audit:
                    for pt in nash_points:
                        audit_rows.extend(_audit_point(cfg, params, pt.profile, spec))
            if cfg.solvers.welfare:
                wg = analytic.welfare_grid(params, grid)
                a_L, a_H = wg.argmax
                welfare_rows.append([
                    cfg.name, params.r, params.delta, wg.max_welfare, a_L, a_H,
                ])
                write_welfare_grid_csv(
                    os.path.join(
                        out_dir, f"welfare_grid_r{params.r:g}_d{params.delta:g}.csv"
                    ),
                    wg, params,
                )
        except Exception as e:  # per-point failure: record and keep going
            error_rows.append([cfg.name, params.r, params.delta, type(e).__name__, str(e)])
            status = 1

    artifacts = []

    def emit(name, schema_key, header, rows):
        path = os.path.join(out_dir, name)
        write_csv(path, schema_key, header, rows)
        artifacts.append(name)

    if cfg.training_enabled:
        emit("results.csv", "results", RESULTS_HEADER, results_rows)
        emit("strategies.csv", "strategies", STRATEGIES_HEADER, strategy_rows)
    if cfg.solvers.nash or cfg.solvers.audit:
        emit("nash.csv", "nash", NASH_HEADER, nash_rows)
        emit("bestresponse.csv", "bestresponse", BR_HEADER, br_rows)
    if cfg.solvers.welfare:
        emit("welfare.csv", "welfare", WELFARE_HEADER, welfare_rows)
        artifacts.extend(
            f"welfare_grid_r{p.r:g}_d{p.delta:g}.csv" for p in points
        )
    if cfg.solvers.audit:
        emit("audit.csv", "audit", AUDIT_HEADER, audit_rows)
    if error_rows:
        emit("errors.csv", "results", ["experiment", "r", "delta", "error", "message"],
             error_rows)

    manifest = {
        "schema": SCHEMAS["manifest"],
        "config": config_to_dict(cfg),
        "config_sha256": config_hash(cfg),
        "master_seed": cfg.master_seed,
        "points": manifest_points,
        "dilemma_warnings": dilemma_notes,
        "artifacts": sorted(artifacts),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return status


def _audit_point(cfg: ExperimentConfig, params: GameParams,
                 profile: analytic.StrategyProfile, spec: PayoffSpec) -> list[list]:
    """Audit solitary deviation to full defection/cooperation at a class profile."""
    pi = np.where(params.class_array(), profile.pi_H, profile.pi_L)
    rows = []
    for cls, deviant_id in ((RiskClass.LOW, 0), (RiskClass.HIGH, params.Z - 1)):
        for pi_prime in (0.0, 1.0):
            res = analytic.deviation_audit(
                pi, params, deviant_id, pi_prime, spec=spec, seed=cfg.master_seed,
            )
            rows.append([
                cfg.name, params.r, params.delta, profile.pi_L, profile.pi_H,
                cls.value, float(pi[deviant_id]), pi_prime,
                res.delta, res.ci_low, res.ci_high, res.method,
            ])
    return rows
