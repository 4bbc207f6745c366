"""Simulation and resource optimization for counterfactual quantum communication."""

from .analytic import (
    UNREACHABLE,
    AnalyticPoint,
    analytic_point,
    derived_resources,
    lambda0,
    lambda1,
    lambda_avg,
    min_trials,
    zeta,
)
from .optimizer import (
    EmptyFeasibleSet,
    GridSpec,
    InfeasibleError,
    OptimizationResult,
    argmax_rate,
    optimize,
    plan_bitstring,
    sweep_N,
    sweep_q,
)
from .protocol import (
    EnsembleStats,
    Kind,
    OutcomeDistribution,
    ProtocolParams,
    TerminalEvent,
    TrialOutcome,
    Variant,
    run_ensemble,
    run_exact,
    run_nested_exact,
    run_semi_exact,
    run_trial_mc,
)
from .quantum import ConfigurationError, ContractViolation, PathState, Unitary

__version__ = "0.1.0"

__all__ = [
    "UNREACHABLE", "AnalyticPoint", "analytic_point", "derived_resources", "lambda0", "lambda1",
    "lambda_avg", "min_trials", "zeta", "EmptyFeasibleSet", "GridSpec", "InfeasibleError",
    "OptimizationResult", "argmax_rate", "optimize", "plan_bitstring", "sweep_N", "sweep_q",
    "EnsembleStats", "Kind", "OutcomeDistribution", "ProtocolParams", "TerminalEvent", "TrialOutcome",
    "Variant", "run_ensemble", "run_exact", "run_nested_exact", "run_semi_exact", "run_trial_mc",
    "ConfigurationError", "ContractViolation", "PathState", "Unitary",
]
