"""Monte Carlo evaluation of a population's group achievement rate.

Each rollout permutes the population, forms floor(Z/N) disjoint groups
(leftover agents sit that rollout out), samples every member's action from
its strategy, and scores the fraction of groups reaching the threshold.
Threshold attainment needs no disaster draws; payoff-level evaluation
samples them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import GameParams, PayoffSpec

_CHUNK = 4096  # rollouts per batch; fixed so results depend only on the seed


@dataclass(frozen=True)
class EvaluationConfig:
    rollouts: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.rollouts < 1:
            raise ValueError("rollouts must be >= 1")


@dataclass(frozen=True)
class EvaluationReport:
    eta: float
    eta_stderr: float
    mean_pi_L: float
    mean_pi_H: float
    rollouts: int
    seed: int


def _check_population(pi: np.ndarray, high: np.ndarray, params: GameParams):
    if pi.shape != (params.Z,) or high.shape != (params.Z,):
        raise ValueError(f"expected {params.Z} agents, got {pi.shape}/{high.shape}")
    if params.Z < params.N:
        raise ValueError(f"population Z={params.Z} smaller than group size N={params.N}")
    if not np.all((pi >= 0) & (pi <= 1)):
        raise ValueError("strategies must lie in [0,1]")


def evaluate(pi, high_risk, params: GameParams, cfg: EvaluationConfig) -> EvaluationReport:
    """Estimate the group achievement rate of a fixed-strategy population."""
    pi = np.asarray(pi, dtype=float)
    high = np.asarray(high_risk, dtype=bool)
    _check_population(pi, high, params)
    n_groups = params.Z // params.N
    used = n_groups * params.N
    rng = np.random.default_rng(cfg.seed)

    fractions = np.empty(cfg.rollouts)
    done = 0
    while done < cfg.rollouts:
        s = min(_CHUNK, cfg.rollouts - done)
        perm = np.argsort(rng.random((s, params.Z)), axis=1)[:, :used]
        probs = pi[perm].reshape(s, n_groups, params.N)
        coop = rng.random((s, n_groups, params.N)) < probs
        met = coop.sum(axis=2) >= params.M
        fractions[done:done + s] = met.mean(axis=1)
        done += s

    eta = float(fractions.mean())
    stderr = float(fractions.std(ddof=1) / math.sqrt(cfg.rollouts)) if cfg.rollouts > 1 else 0.0
    return EvaluationReport(
        eta=eta,
        eta_stderr=stderr,
        mean_pi_L=float(pi[~high].mean()),
        mean_pi_H=float(pi[high].mean()),
        rollouts=cfg.rollouts,
        seed=cfg.seed,
    )


@dataclass(frozen=True)
class PayoffReport:
    mean_payoff_L: float
    stderr_L: float
    mean_payoff_H: float
    stderr_H: float
    rollouts: int
    seed: int


def evaluate_payoffs(pi, high_risk, params: GameParams, spec: PayoffSpec,
                     cfg: EvaluationConfig) -> PayoffReport:
    """Per-class mean realized payoff, sampling actions and disasters.

    Standard errors come from the spread of per-rollout class means, so the
    within-group payoff correlation is accounted for.
    """
    pi = np.asarray(pi, dtype=float)
    high = np.asarray(high_risk, dtype=bool)
    _check_population(pi, high, params)
    n_groups = params.Z // params.N
    used = n_groups * params.N
    risk = np.where(high, params.r_H, params.r_L)
    rng = np.random.default_rng(cfg.seed)

    means = np.empty((cfg.rollouts, 2))  # per-rollout class means (L, H)
    done = 0
    while done < cfg.rollouts:
        s = min(_CHUNK, cfg.rollouts - done)
        perm = np.argsort(rng.random((s, params.Z)), axis=1)[:, :used]
        probs = pi[perm].reshape(s, n_groups, params.N)
        coop = rng.random((s, n_groups, params.N)) < probs
        met = coop.sum(axis=2, keepdims=True) >= params.M
        disaster = (~met) & (
            rng.random((s, n_groups, params.N)) < risk[perm].reshape(s, n_groups, params.N)
        )
        x = np.where(
            coop,
            np.where(disaster, spec.x_C_fail, spec.x_C),
            np.where(disaster, spec.x_D_fail, spec.x_D),
        ).reshape(s, used)
        high_sel = high[perm]
        for col, sel in ((0, ~high_sel), (1, high_sel)):
            num = np.where(sel, x, 0.0).sum(axis=1)
            cnt = sel.sum(axis=1)
            means[done:done + s, col] = num / np.maximum(cnt, 1)
        done += s

    out = []
    for col in (0, 1):
        m = means[:, col]
        out.append(float(m.mean()))
        out.append(float(m.std(ddof=1) / math.sqrt(cfg.rollouts)) if cfg.rollouts > 1 else 0.0)
    return PayoffReport(
        mean_payoff_L=out[0], stderr_L=out[1],
        mean_payoff_H=out[2], stderr_H=out[3],
        rollouts=cfg.rollouts, seed=cfg.seed,
    )


def aggregate_runs(values_per_run: dict[str, list[float]]) -> dict[str, tuple[float, float]]:
    """Per-metric mean and population standard deviation across runs."""
    out = {}
    for name, values in values_per_run.items():
        if len(values) == 0:
            raise ValueError(f"no values for metric {name}")
        arr = np.asarray(values, dtype=float)
        out[name] = (float(arr.mean()), float(arr.std(ddof=0)))
    return out
