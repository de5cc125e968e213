"""Fixed-step closed-loop simulation and convergence reporting."""

from .integrator import rk4_step
from .engine import (
    Scenario,
    StateLayout,
    ParameterSchedule,
    InitialConditions,
    SimConfig,
    ClosedLoop,
    CompiledLoop,
    Trajectory,
    closed_loop_rhs,
    closed_loop_equilibrium,
    simulate,
)
from .report import ConvergenceReport, PhaseStats, convergence_report

__all__ = [
    "rk4_step",
    "Scenario",
    "StateLayout",
    "ParameterSchedule",
    "InitialConditions",
    "SimConfig",
    "ClosedLoop",
    "CompiledLoop",
    "Trajectory",
    "closed_loop_rhs",
    "closed_loop_equilibrium",
    "simulate",
    "ConvergenceReport",
    "PhaseStats",
    "convergence_report",
]
