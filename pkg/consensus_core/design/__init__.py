"""Gain synthesis and closed-loop certification."""

from .tuning import (
    stabilizer_gains,
    hurwitz_check,
    solve_lyapunov,
    translated_system,
    observer_lyapunov,
    EpsilonBound,
    epsilon_bound,
    default_grid,
    TuningCertificate,
    certify_closed_loop,
    gamma_search,
    GainSpec,
    resolve_gains,
)

__all__ = [
    "stabilizer_gains",
    "hurwitz_check",
    "solve_lyapunov",
    "translated_system",
    "observer_lyapunov",
    "EpsilonBound",
    "epsilon_bound",
    "default_grid",
    "TuningCertificate",
    "certify_closed_loop",
    "gamma_search",
    "GainSpec",
    "resolve_gains",
]
