"""Shared fixtures."""

import numpy as np
import pytest

from consensus_core.dynamics.controller import Gains
from consensus_core.dynamics.plant import AffinePlant, ParameterBox
from consensus_core.io.presets import example1, example2
from consensus_core.network.graph import Digraph
from consensus_core.optimization.generator import GeneratorGains


@pytest.fixture
def cycle4():
    """Directed 4-cycle 1 -> 2 -> 3 -> 4 -> 1 with unit weights."""
    return Digraph.cycle(4)


@pytest.fixture
def example1_cfg():
    return example1()


@pytest.fixture
def example2_cfg():
    return example2()


@pytest.fixture
def preset_gains():
    return Gains(
        k=np.array([1.0, 2.0]),
        epsilon=6.0,
        gamma=10.0,
        generator=GeneratorGains(alpha=1.0, beta=15.0),
    )


@pytest.fixture
def double_integrator():
    """Fixed double integrator x1' = x2, x2' = u, y = x1 (no parameters)."""
    return AffinePlant(
        A0=np.array([[0.0, 1.0], [0.0, 0.0]]),
        B0=np.array([0.0, 1.0]),
        C0=np.array([1.0, 0.0]),
        A_dev=(),
        B_dev=(),
        C_dev=(),
        box=ParameterBox(np.zeros(0), np.zeros(0)),
    )
