"""
Distributed optimal signal generator.

Compact form over a weighted digraph with Laplacian L:

    z' = -alpha grad f~(z) - beta L z - L v
    v' =  alpha beta L z

For weight-balanced, strongly connected graphs every z_i converges
exponentially to the minimiser y* of sum_i f_i, for any z(0), v(0).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from ..errors import GraphError
from ..network.graph import Digraph
from .costs import CostEnsemble, global_minimizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorGains:
    """Generator parameters alpha, beta > 0."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"alpha and beta must be positive, got alpha={self.alpha}, beta={self.beta}")

    def to_dict(self) -> Dict[str, float]:
        return {"alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True, eq=False)
class GeneratorState:
    """Estimates z and auxiliary states v, one entry per agent."""

    z: NDArray[np.float64]
    v: NDArray[np.float64]

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=np.float64).reshape(-1)
        v = np.asarray(self.v, dtype=np.float64).reshape(-1)
        if z.shape != v.shape:
            raise ValueError(f"z and v must have equal length, got {z.size} and {v.size}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return int(self.z.size)


def generator_rhs(
    state: GeneratorState,
    ensemble: CostEnsemble,
    graph: Digraph,
    gains: GeneratorGains,
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Right-hand side (z', v') of the generator."""
    if state.n != graph.n or len(ensemble) != graph.n:
        raise ValueError(
            f"dimension mismatch: state {state.n}, costs {len(ensemble)}, graph {graph.n}"
        )
    lap = graph.laplacian_matrix
    lz = lap @ state.z
    z_dot = -gains.alpha * ensemble.local_gradients(state.z) - gains.beta * lz - lap @ state.v
    v_dot = gains.alpha * gains.beta * lz
    return z_dot, v_dot


def tune_alpha_beta(
    l_lower: float,
    l_upper: float,
    lambda2: float,
    lambda_n: float,
) -> GeneratorGains:
    """
    Smallest alpha, beta admitted by the exponential-convergence conditions

        alpha >= max{1, 1/l, 2 L^2 / (l lambda_2)}
        beta  >= max{1, 1/lambda_2, 6 alpha^2 lambda_N^2 / lambda_2^2}

    with l = min_i l_lower_i, L = max_i l_upper_i.

    Raises:
        GraphError: If lambda2 <= 0 (disconnected or unbalanced network)
    """
    if l_lower <= 0:
        raise ValueError(f"l_lower must be positive, got {l_lower}")
    if lambda2 <= 0:
        raise GraphError(
            f"lambda_2 = {lambda2:.3e} <= 0: graph is not strongly connected and weight-balanced"
        )
    alpha = max(1.0, 1.0 / l_lower, 2.0 * l_upper**2 / (l_lower * lambda2))
    beta = max(1.0, 1.0 / lambda2, 6.0 * alpha**2 * lambda_n**2 / lambda2**2)
    logger.info("Generator formula gains alpha=%g beta=%g", alpha, beta)
    return GeneratorGains(alpha=alpha, beta=beta)


def generator_equilibrium(
    ensemble: CostEnsemble,
    graph: Digraph,
    gains: GeneratorGains,
    y_star: Optional[float] = None,
) -> GeneratorState:
    """
    Equilibrium (1 y*, v*) with v* the least-squares solution of
    L v = -alpha grad f~(1 y*).
    """
    if y_star is None:
        y_star = global_minimizer(ensemble)
    z_star = np.full(graph.n, float(y_star))
    rhs = -gains.alpha * ensemble.local_gradients(z_star)
    v_star, *_ = np.linalg.lstsq(np.array(graph.laplacian_matrix), rhs, rcond=None)
    return GeneratorState(z=z_star, v=v_star)


def generator_equilibrium_check(
    state: GeneratorState,
    ensemble: CostEnsemble,
    graph: Digraph,
    gains: GeneratorGains,
    tol: float = 1e-6,
    y_star: Optional[float] = None,
) -> bool:
    """True iff ||z'||, ||v'|| and max_i |z_i - y*| are all within tol."""
    if y_star is None:
        y_star = global_minimizer(ensemble)
    z_dot, v_dot = generator_rhs(state, ensemble, graph, gains)
    return bool(
        np.linalg.norm(z_dot) <= tol
        and np.linalg.norm(v_dot) <= tol
        and np.max(np.abs(state.z - y_star)) <= tol
    )


@dataclass(frozen=True, eq=False)
class GeneratorTrajectory:
    """Recorded generator-only run."""

    times: NDArray[np.float64]
    z: NDArray[np.float64]
    v: NDArray[np.float64]
    meta: Dict[str, Any] = field(default_factory=dict)

    def errors(self, y_star: float) -> NDArray[np.float64]:
        """||z(t) - 1 y*|| per recorded instant."""
        return np.linalg.norm(self.z - y_star, axis=1)

    def log_error_slope(self, y_star: float, t_start: float, t_end: float) -> float:
        """Least-squares slope of log ||z - 1y*|| over [t_start, t_end]."""
        mask = (self.times >= t_start) & (self.times <= t_end)
        err = self.errors(y_star)[mask]
        slope, _ = np.polyfit(self.times[mask], np.log(err), 1)
        return float(slope)


def simulate_generator(
    ensemble: CostEnsemble,
    graph: Digraph,
    gains: GeneratorGains,
    initial: GeneratorState,
    t_final: float,
    h: float = 1e-3,
    record_stride: int = 10,
) -> GeneratorTrajectory:
    """Integrate the generator alone with fixed-step RK4."""
    from ..simulation.integrator import rk4_step

    n = graph.n

    def rhs(t: float, s: NDArray[np.float64]) -> NDArray[np.float64]:
        z_dot, v_dot = generator_rhs(GeneratorState(s[:n], s[n:]), ensemble, graph, gains)
        return np.concatenate([z_dot, v_dot])

    state = np.concatenate([initial.z, initial.v])
    steps = int(round(t_final / h))
    times = [0.0]
    history = [state.copy()]
    for k in range(1, steps + 1):
        state = rk4_step(rhs, state, (k - 1) * h, h)
        if k % record_stride == 0 or k == steps:
            times.append(k * h)
            history.append(state.copy())
    data = np.array(history)
    return GeneratorTrajectory(
        times=np.array(times),
        z=data[:, :n],
        v=data[:, n:],
        meta={"alpha": gains.alpha, "beta": gains.beta, "h": h},
    )
