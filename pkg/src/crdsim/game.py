"""Core collective risk dilemma: parameters, payoffs, and group resolution.

A population of ``Z`` agents is split into a low-risk and a high-risk class.
Groups of ``N`` agents play a threshold game: if at least ``M`` of them
contribute a fraction ``c`` of their endowment ``b``, the disaster is
averted; otherwise each agent independently suffers the disaster with its
class risk probability and loses a further fraction ``p`` of what it kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np


class RiskClass(Enum):
    LOW = "L"
    HIGH = "H"


class Action(Enum):
    COOPERATE = "C"
    DEFECT = "D"


@dataclass(frozen=True)
class GameParams:
    """Game constants plus the derived threshold and per-class risks.

    The class risks spread the population-average risk ``r`` by the
    diversity ``delta``: ``r_H = r + delta / (2 z_H)`` and
    ``r_L = r - delta / (2 (1 - z_H))``, which keeps the population mean
    at ``r`` for any class split (and reduces to ``r +/- delta`` at
    ``z_H = 0.5``).
    """

    Z: int = 200
    N: int = 6
    M: int = 3
    b: float = 1.0
    c: float = 0.1
    p: float = 0.7
    r: float = 0.5
    delta: float = 0.0
    z_H: float = 0.5

    def __post_init__(self):
        if self.Z < self.N or self.N < 1 or not (1 <= self.M <= self.N):
            raise ValueError(f"inconsistent sizes Z={self.Z} N={self.N} M={self.M}")
        if not (0 < self.c < 1):
            raise ValueError(f"contribution fraction c={self.c} outside (0,1)")
        if not (0 < self.p < 1):
            raise ValueError(f"penalty fraction p={self.p} outside (0,1)")
        if not (0 < self.z_H < 1):
            raise ValueError(f"high-risk fraction z_H={self.z_H} outside (0,1)")
        if self.b <= 0:
            raise ValueError(f"endowment b={self.b} must be positive")
        if not (0 <= self.r <= 1) or self.delta < 0:
            raise ValueError(f"invalid risk parameters r={self.r} delta={self.delta}")
        if abs(self.Z * self.z_H - round(self.Z * self.z_H)) > 1e-9:
            raise ValueError(f"Z*z_H = {self.Z * self.z_H} is not a whole number of agents")
        if not (0 <= self.r_L and self.r_H <= 1):
            raise ValueError(
                f"class risks out of range: r_L={self.r_L}, r_H={self.r_H}"
            )
        # keeps all four log-utility payoffs finite
        if self.c + self.p * (1 - self.c) >= 1:
            raise ValueError("c + p(1-c) must be < 1 for finite log payoffs")

    @property
    def t(self) -> float:
        return self.M * self.c * self.b

    @property
    def r_H(self) -> float:
        return self.r + self.delta / (2 * self.z_H)

    @property
    def r_L(self) -> float:
        return self.r - self.delta / (2 * (1 - self.z_H))

    @property
    def Z_H(self) -> int:
        return round(self.Z * self.z_H)

    @property
    def Z_L(self) -> int:
        return self.Z - self.Z_H

    def risk(self, cls: RiskClass) -> float:
        return self.r_L if cls is RiskClass.LOW else self.r_H

    def class_of(self, agent_id: int) -> RiskClass:
        # ids 0 .. Z_L-1 are low risk, the rest high risk; fixed for a run
        return RiskClass.LOW if agent_id < self.Z_L else RiskClass.HIGH

    def class_array(self) -> np.ndarray:
        """Boolean array, True where the agent is high risk."""
        return np.arange(self.Z) >= self.Z_L

    def risk_array(self) -> np.ndarray:
        return np.where(self.class_array(), self.r_H, self.r_L)


class Utility(Enum):
    LOG = "log"
    LINEAR = "linear"


@dataclass(frozen=True)
class PayoffSpec:
    """The four game payoffs: (co)operate/(d)efect crossed with disaster or not.

    ``x_C``/``x_D`` apply when no disaster hits the agent, ``x_C_fail``/
    ``x_D_fail`` when one does.  All four are <= 0.
    """

    utility: Utility
    x_C: float
    x_D: float
    x_C_fail: float
    x_D_fail: float

    @staticmethod
    def log_utility(params: GameParams) -> "PayoffSpec":
        c, p = params.c, params.p
        return PayoffSpec(
            utility=Utility.LOG,
            x_C=math.log(1 - c),
            x_D=0.0,
            x_C_fail=math.log(1 - c - p * (1 - c)),
            x_D_fail=math.log(1 - p),
        )

    @staticmethod
    def linear_utility(params: GameParams) -> "PayoffSpec":
        b, c, p = params.b, params.c, params.p
        return PayoffSpec(
            utility=Utility.LINEAR,
            x_C=-c * b,
            x_D=0.0,
            x_C_fail=-c * b - (1 - c) * p * b,
            x_D_fail=-p * b,
        )

    def payoff(self, action: Action, disaster: bool) -> float:
        if action is Action.COOPERATE:
            return self.x_C_fail if disaster else self.x_C
        return self.x_D_fail if disaster else self.x_D


def validate_dilemma(params: GameParams) -> list[str]:
    """Check the social-dilemma conditions; returns the violated ones.

    An empty list means the game is a dilemma for every agent.  Violations
    are advisory: some experiment settings (e.g. delta = r, where the
    low-risk class carries zero risk) deliberately run outside them.
    """
    violations: list[str] = []
    bound = math.log(1 - params.c) / math.log(1 - params.p)
    for cls in (RiskClass.LOW, RiskClass.HIGH):
        if params.risk(cls) <= bound:
            violations.append(
                f"risk of class {cls.value} ({params.risk(cls):.6g}) not above "
                f"dilemma bound log(1-c)/log(1-p) = {bound:.6g}"
            )
    if not params.t > params.c * params.b:
        violations.append("threshold not above single contribution (t <= c*b)")
    if not params.t < params.N * params.c * params.b:
        violations.append("threshold not below full cooperation (t >= N*c*b)")
    return violations


@dataclass(frozen=True)
class MemberOutcome:
    agent_id: int
    action: Action
    disaster: bool
    payoff: float


@dataclass(frozen=True)
class GroupOutcome:
    cooperator_count: int
    target_met: bool
    members: tuple[MemberOutcome, ...] = field(default_factory=tuple)


def resolve_group(
    params: GameParams,
    spec: PayoffSpec,
    entries: Sequence[tuple[int, Action, RiskClass]],
    rng: np.random.Generator,
) -> GroupOutcome:
    """Resolve one group of exactly N agents with fixed actions.

    If the cooperator count reaches M nobody suffers a disaster; otherwise
    each agent draws an independent Bernoulli with its class risk.
    """
    if len(entries) != params.N:
        raise ValueError(f"group has {len(entries)} entries, expected N={params.N}")
    k = sum(1 for _, action, _ in entries if action is Action.COOPERATE)
    met = k >= params.M
    members = []
    for agent_id, action, cls in entries:
        disaster = False if met else bool(rng.random() < params.risk(cls))
        members.append(
            MemberOutcome(agent_id, action, disaster, spec.payoff(action, disaster))
        )
    return GroupOutcome(cooperator_count=k, target_met=met, members=tuple(members))
