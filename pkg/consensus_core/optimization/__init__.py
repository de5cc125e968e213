"""Local costs and the distributed optimal signal generator."""

from .costs import (
    CostFunction,
    Quadratic,
    ScaledLogQuadratic,
    SqrtRatioQuadratic,
    LogSumExpQuadratic,
    CostEnsemble,
    cost_from_dict,
    verify_assumption1,
    global_minimizer,
)
from .generator import (
    GeneratorGains,
    GeneratorState,
    generator_rhs,
    tune_alpha_beta,
    generator_equilibrium,
    generator_equilibrium_check,
    simulate_generator,
)

__all__ = [
    "CostFunction",
    "Quadratic",
    "ScaledLogQuadratic",
    "SqrtRatioQuadratic",
    "LogSumExpQuadratic",
    "CostEnsemble",
    "cost_from_dict",
    "verify_assumption1",
    "global_minimizer",
    "GeneratorGains",
    "GeneratorState",
    "generator_rhs",
    "tune_alpha_beta",
    "generator_equilibrium",
    "generator_equilibrium_check",
    "simulate_generator",
]
