"""Classical fixed-step fourth-order Runge-Kutta."""

from __future__ import annotations

from typing import Callable

import numpy as np
from numpy.typing import NDArray

from ..errors import SimulationDivergedError

RHS = Callable[[float, NDArray[np.float64]], NDArray[np.float64]]


def rk4_step(rhs: RHS, state: NDArray[np.float64], t: float, h: float) -> NDArray[np.float64]:
    """
    One RK4 step of x' = rhs(t, x) from (t, state) with step h.

    Raises:
        ValueError: If h <= 0
        SimulationDivergedError: If a stage derivative is not finite
    """
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    half = 0.5 * h
    k1 = rhs(t, state)
    k2 = rhs(t + half, state + half * k1)
    k3 = rhs(t + half, state + half * k2)
    k4 = rhs(t + h, state + h * k3)
    if not np.all(np.isfinite(k4)) or not np.all(np.isfinite(k1)):
        raise SimulationDivergedError(
            f"non-finite derivative in RK4 stage at t = {t:.6g}", time=t, last_state=state
        )
    return state + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
