"""Collective risk dilemma simulator and solver suite."""

from .game import (
    Action,
    GameParams,
    GroupOutcome,
    PayoffSpec,
    RiskClass,
    Utility,
    resolve_group,
    validate_dilemma,
)
from .learner import TrainedPopulation, TrainingConfig, train
from .analytic import (
    GridSpec,
    NashPoint,
    StrategyProfile,
    WelfareGrid,
    best_response_curves,
    class_payoff,
    deviation_audit,
    find_class_nash,
    welfare_grid,
)
from .evaluator import EvaluationConfig, EvaluationReport, aggregate_runs, evaluate

__all__ = [
    "Action",
    "GameParams",
    "GroupOutcome",
    "PayoffSpec",
    "RiskClass",
    "Utility",
    "resolve_group",
    "validate_dilemma",
    "TrainedPopulation",
    "TrainingConfig",
    "train",
    "GridSpec",
    "NashPoint",
    "StrategyProfile",
    "WelfareGrid",
    "best_response_curves",
    "class_payoff",
    "deviation_audit",
    "find_class_nash",
    "welfare_grid",
    "EvaluationConfig",
    "EvaluationReport",
    "aggregate_runs",
    "evaluate",
]
