"""
Built-in scenarios.

example1: four vertical-takeoff aircraft with uncertain mass under gravity,
    asked to meet at the average of their starting heights (y* = 4).
example2: four third-order uncertain agents with heterogeneous costs and a
    parameter switch at t = 25 s (y* ~ 3.24).

Both use the directed 4-cycle with unit weights, k = (1, 2), alpha = 1 and
beta = 15. example1 runs with epsilon = 6, gamma = 10. example2 runs with
epsilon = 12, gamma = 40, which certify every corner of its parameter box;
epsilon = 6, gamma = 10 only certify the two scheduled parameter points.
"""

from typing import Callable, Dict

import numpy as np

from ..design.tuning import GainSpec
from ..dynamics.plant import AffinePlant, ParameterBox
from ..errors import ConfigError
from ..network.graph import Digraph
from ..optimization.costs import (
    CostEnsemble,
    LogSumExpQuadratic,
    Quadratic,
    ScaledLogQuadratic,
    SqrtRatioQuadratic,
)
from ..simulation.engine import InitialConditions, ParameterSchedule, SimConfig
from .config import ScenarioConfig

GRAVITY = 9.8
NOMINAL_MASS = 1.0

PRESET_GAINS = GainSpec(k=(1.0, 2.0), alpha=1.0, beta=15.0, epsilon=6.0, gamma=10.0)
ROBUST_GAINS = GainSpec(k=(1.0, 2.0), alpha=1.0, beta=15.0, epsilon=12.0, gamma=40.0)


def example1(g: float = GRAVITY, m0: float = NOMINAL_MASS, t_final: float = 50.0) -> ScenarioConfig:
    """
    Vertical dynamics M q'' = T - M g with M0 / M = 1 + w, w in [-0.5, 1].

    Divided by M: x = (q, q'), B(w) = (0, (1 + w) / M0), E = (0, -g).
    Local costs (y - (2i - 1))^2 put the optimum at the average height 4.
    """
    plant = AffinePlant(
        A0=np.array([[0.0, 1.0], [0.0, 0.0]]),
        B0=np.array([0.0, 1.0 / m0]),
        C0=np.array([1.0, 0.0]),
        A_dev=(np.zeros((2, 2)),),
        B_dev=(np.array([0.0, 1.0 / m0]),),
        C_dev=(np.zeros(2),),
        box=ParameterBox(np.array([-0.5]), np.array([1.0])),
        disturbance=np.array([0.0, -g]),
    )
    starts = [2.0 * i - 1.0 for i in range(1, 5)]
    costs = CostEnsemble(tuple(Quadratic.create(c=2.0, target=s) for s in starts))
    sim = SimConfig(
        t_final=t_final,
        initial=InitialConditions(mode="default", z=np.array(starts)),
    )
    return ScenarioConfig(
        graph=Digraph.cycle(4),
        plant=plant,
        costs=costs,
        gains=PRESET_GAINS,
        sim=sim,
        name="example1",
        preset="example1",
    )


def example2_plant() -> AffinePlant:
    """
    A(w) = [[-1 + w1, 1, 0], [-1 + w2, 0, 1], [1, w3, 1]],
    B(w) = (0, 0, 1 + w3), C(w) = (0, 1 + w4, 0), w in [-0.5, 0.5]^4.
    """
    def unit(i: int, j: int) -> np.ndarray:
        out = np.zeros((3, 3))
        out[i, j] = 1.0
        return out

    zero3 = np.zeros(3)
    return AffinePlant(
        A0=np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0], [1.0, 0.0, 1.0]]),
        B0=np.array([0.0, 0.0, 1.0]),
        C0=np.array([0.0, 1.0, 0.0]),
        A_dev=(unit(0, 0), unit(1, 0), unit(2, 1), np.zeros((3, 3))),
        B_dev=(zero3, zero3, np.array([0.0, 0.0, 1.0]), zero3),
        C_dev=(zero3, zero3, zero3, np.array([0.0, 1.0, 0.0])),
        box=ParameterBox(np.full(4, -0.5), np.full(4, 0.5)),
    )


def example2_costs() -> CostEnsemble:
    """The four heterogeneous costs, each with curvature bounds (0.5, 1.5)."""
    bounds = {"l_lower": 0.5, "l_upper": 1.5}
    return CostEnsemble((
        Quadratic(c=1.0, target=8.0, **bounds),
        ScaledLogQuadratic(a=160.0, b=2.0, target=5.0, **bounds),
        SqrtRatioQuadratic(a=40.0, **bounds),
        LogSumExpQuadratic(s=0.05, **bounds),
    ))


def example2(switch_time: float = 25.0, t_final: float = 50.0) -> ScenarioConfig:
    """Third-order agents; w switches from (0.4, 0.3, -0.2, -0.4) to (0.1, -0.2, -0.3, 0.2)."""
    schedule = ParameterSchedule(
        np.array([0.0, switch_time]),
        np.array([[0.4, 0.3, -0.2, -0.4], [0.1, -0.2, -0.3, 0.2]]),
    )
    sim = SimConfig(
        t_final=t_final,
        schedule=schedule,
        initial=InitialConditions(mode="random"),
    )
    return ScenarioConfig(
        graph=Digraph.cycle(4),
        plant=example2_plant(),
        costs=example2_costs(),
        gains=ROBUST_GAINS,
        sim=sim,
        name="example2",
        preset="example2",
    )


PRESETS: Dict[str, Callable[[], ScenarioConfig]] = {
    "example1": example1,
    "example2": example2,
}


def get_preset(name: str) -> ScenarioConfig:
    """
    Expand a built-in preset.

    Raises:
        ConfigError: For an unknown preset name
    """
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None
    return factory()
