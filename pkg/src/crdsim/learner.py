"""Roth-Erev propensity learning over repeated random-group play.

Each agent holds a propensity pair (q_C, q_D).  Every update-step a random
group of N agents plays one game; each member's chosen-action propensity
decays by (1 - phi) and accrues the received payoff, the other action's
propensity only decays.  Action choice is a softmax over the propensities.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from numba import njit

from .game import Action, GameParams, PayoffSpec, RiskClass, Utility

# chunk size for pre-drawn randoms; fixed so results only depend on the seed
_CHUNK = 65536


def action_probabilities(q) -> tuple[float, float]:
    """Softmax over a propensity pair -> (p_cooperate, p_defect)."""
    qc, qd = float(q[0]), float(q[1])
    if not (np.isfinite(qc) and np.isfinite(qd)):
        raise ValueError(f"non-finite propensities ({qc}, {qd})")
    m = max(qc, qd)  # shift invariance keeps exp() in range
    ec, ed = np.exp(qc - m), np.exp(qd - m)
    s = ec + ed
    return ec / s, ed / s


def update_propensities(q, action: Action, x: float, phi: float):
    """One Roth-Erev update: decay both entries, add x to the chosen one."""
    qc, qd = (1 - phi) * float(q[0]), (1 - phi) * float(q[1])
    if action is Action.COOPERATE:
        qc += x
    else:
        qd += x
    return qc, qd


@dataclass(frozen=True)
class TrainingConfig:
    steps: int = 2_500_000           # total update-steps K
    min_updates: int = 30_000        # per-agent floor K'
    phi: float = 0.001
    runs: int = 5
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.phi < 1):
            raise ValueError(f"phi={self.phi} outside (0,1)")
        if self.steps < 0 or self.min_updates < 0 or self.runs < 1:
            raise ValueError("steps/min_updates must be >= 0 and runs >= 1")


@dataclass(frozen=True)
class Agent:
    id: int
    risk_class: RiskClass
    q: tuple[float, float]
    updates: int

    @property
    def pi(self) -> float:
        return action_probabilities(self.q)[0]


@dataclass
class TrainedPopulation:
    params: GameParams
    config: TrainingConfig
    seed: int
    realized_steps: int
    q: np.ndarray          # (Z, 2): columns q_C, q_D
    updates: np.ndarray    # (Z,)

    @property
    def pi(self) -> np.ndarray:
        """Final per-agent cooperation probabilities."""
        d = np.clip(self.q[:, 1] - self.q[:, 0], -700, 700)
        return 1.0 / (1.0 + np.exp(d))

    @property
    def classes(self) -> np.ndarray:
        return self.params.class_array()

    def agents(self) -> list[Agent]:
        return [
            Agent(
                id=i,
                risk_class=self.params.class_of(i),
                q=(float(self.q[i, 0]), float(self.q[i, 1])),
                updates=int(self.updates[i]),
            )
            for i in range(self.params.Z)
        ]

    def mean_pi_by_class(self) -> tuple[float, float]:
        pi, high = self.pi, self.classes
        return float(pi[~high].mean()), float(pi[high].mean())


def init_population(params: GameParams, rng: np.random.Generator) -> np.ndarray:
    """Initial propensities: every entry drawn from Normal(0, 1)."""
    return rng.normal(0.0, 1.0, size=(params.Z, 2))


@njit(cache=True)
def _train_chunk(q, u, risk, perm, u_group, u_action, u_disaster, N, M, phi,
                 x_C, x_C_fail, x_D_fail):
    """Sequential update-steps for one chunk of pre-drawn uniforms.

    u_group/u_action/u_disaster are (S, N) uniforms: group selection via
    partial Fisher-Yates on ``perm``, action sampling, disaster sampling.
    """
    S = u_group.shape[0]
    Z = perm.shape[0]
    coop = np.empty(N, dtype=np.bool_)
    for s in range(S):
        for j in range(N):
            t = j + int(u_group[s, j] * (Z - j))
            if t >= Z:
                t = Z - 1
            perm[j], perm[t] = perm[t], perm[j]
        k = 0
        for j in range(N):
            i = perm[j]
            d = q[i, 1] - q[i, 0]
            if d > 700.0:
                d = 700.0
            elif d < -700.0:
                d = -700.0
            p_coop = 1.0 / (1.0 + np.exp(d))
            coop[j] = u_action[s, j] < p_coop
            if coop[j]:
                k += 1
        met = k >= M
        for j in range(N):
            i = perm[j]
            if met:
                x = x_C if coop[j] else 0.0
            else:
                if u_disaster[s, j] < risk[i]:
                    x = x_C_fail if coop[j] else x_D_fail
                else:
                    x = x_C if coop[j] else 0.0
            if coop[j]:
                q[i, 0] = (1.0 - phi) * q[i, 0] + x
                q[i, 1] = (1.0 - phi) * q[i, 1]
            else:
                q[i, 0] = (1.0 - phi) * q[i, 0]
                q[i, 1] = (1.0 - phi) * q[i, 1] + x
            u[i] += 1


def train(
    params: GameParams,
    spec: PayoffSpec,
    cfg: TrainingConfig,
    seed: int | None = None,
) -> TrainedPopulation:
    """Train a population for >= cfg.steps update-steps.

    Training keeps going past cfg.steps until every agent has performed at
    least cfg.min_updates updates.  Deterministic given (params, cfg, seed).
    """
    if params.Z < params.N:
        raise ValueError(f"population Z={params.Z} smaller than group size N={params.N}")
    if spec.utility is not Utility.LOG:
        raise ValueError("training uses log-utility payoffs")
    run_seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(run_seed)
    q = init_population(params, rng)
    u = np.zeros(params.Z, dtype=np.int64)
    risk = params.risk_array()
    perm = np.arange(params.Z, dtype=np.int64)

    steps = 0
    while steps < cfg.steps or (cfg.min_updates > 0 and u.min() < cfg.min_updates):
        if steps < cfg.steps:
            s = min(_CHUNK, cfg.steps - steps)
        else:
            s = 4096  # top-up phase, same sampling process, finer granularity
        _train_chunk(
            q, u, risk, perm,
            rng.random((s, params.N)),
            rng.random((s, params.N)),
            rng.random((s, params.N)),
            params.N, params.M, cfg.phi,
            spec.x_C, spec.x_C_fail, spec.x_D_fail,
        )
        steps += s

    return TrainedPopulation(
        params=params, config=cfg, seed=run_seed, realized_steps=steps, q=q, updates=u
    )


SNAPSHOT_SCHEMA = "strategies-v1"
_SNAPSHOT_COLUMNS = ["agent_id", "class", "q_C", "q_D", "pi", "updates"]


def save_snapshot(pop: TrainedPopulation, path) -> None:
    """Write a per-agent snapshot CSV with a header block of run metadata."""
    p, cfg = pop.params, pop.config
    buf = io.StringIO()
    buf.write(f"# schema={SNAPSHOT_SCHEMA}\n")
    buf.write(
        f"# Z={p.Z} N={p.N} M={p.M} b={p.b!r} c={p.c!r} p={p.p!r} "
        f"r={p.r!r} delta={p.delta!r} z_H={p.z_H!r}\n"
    )
    buf.write(
        f"# steps={cfg.steps} min_updates={cfg.min_updates} phi={cfg.phi!r} "
        f"seed={pop.seed} realized_steps={pop.realized_steps}\n"
    )
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_SNAPSHOT_COLUMNS)
    pi = pop.pi
    for i in range(p.Z):
        w.writerow(
            [i, p.class_of(i).value, repr(float(pop.q[i, 0])),
             repr(float(pop.q[i, 1])), repr(float(pi[i])), int(pop.updates[i])]
        )
    with open(path, "w") as f:
        f.write(buf.getvalue())


def load_snapshot(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a snapshot CSV; returns (pi, is_high_risk) arrays."""
    pis, highs = [], []
    with open(path) as f:
        rows = [line for line in f if not line.startswith("#")]
    reader = csv.DictReader(rows)
    for row in reader:
        pis.append(float(row["pi"]))
        highs.append(row["class"] == RiskClass.HIGH.value)
    return np.array(pis), np.array(highs, dtype=bool)
