"""
Tests for the distributed optimal signal generator.
"""

import numpy as np
import pytest

from consensus_core.errors import GraphError
from consensus_core.io.presets import example2_costs
from consensus_core.network.graph import Digraph
from consensus_core.optimization.costs import CostEnsemble, Quadratic, global_minimizer
from consensus_core.optimization.generator import (
    GeneratorGains,
    GeneratorState,
    generator_equilibrium,
    generator_equilibrium_check,
    generator_rhs,
    simulate_generator,
    tune_alpha_beta,
)


class TestGeneratorRhs:
    """Right-hand side at hand-evaluated states."""

    def test_consensus_on_common_minimum(self, cycle4):
        costs = CostEnsemble(tuple(Quadratic.create(1.0, 2.5) for _ in range(4)))
        z_dot, v_dot = generator_rhs(
            GeneratorState(np.full(4, 2.5), np.zeros(4)), costs, cycle4, GeneratorGains(1.0, 15.0)
        )
        np.testing.assert_allclose(z_dot, 0.0)
        np.testing.assert_allclose(v_dot, 0.0)

    def test_two_agent_example(self):
        graph = Digraph.from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)])
        costs = CostEnsemble((Quadratic.create(1.0, 0.0), Quadratic.create(1.0, 2.0)))
        z_dot, v_dot = generator_rhs(
            GeneratorState(np.array([0.0, 2.0]), np.zeros(2)), costs, graph, GeneratorGains(1.0, 1.0)
        )
        np.testing.assert_allclose(z_dot, [2.0, -2.0])
        np.testing.assert_allclose(v_dot, [-2.0, 2.0])

    def test_edgeless_graph_is_gradient_flow(self):
        graph = Digraph(np.zeros((3, 3)))
        costs = CostEnsemble(tuple(Quadratic.create(2.0, t) for t in (1.0, 2.0, 3.0)))
        z = np.array([0.0, 0.0, 0.0])
        z_dot, v_dot = generator_rhs(GeneratorState(z, np.ones(3)), costs, graph, GeneratorGains(0.5, 3.0))
        np.testing.assert_allclose(z_dot, -0.5 * costs.local_gradients(z))
        np.testing.assert_allclose(v_dot, 0.0)

    def test_dimension_mismatch(self, cycle4):
        costs = CostEnsemble((Quadratic.create(),))
        with pytest.raises(ValueError):
            generator_rhs(GeneratorState(np.zeros(4), np.zeros(4)), costs, cycle4, GeneratorGains(1.0, 1.0))

    def test_gains_positive(self):
        with pytest.raises(ValueError):
            GeneratorGains(alpha=0.0, beta=1.0)


class TestTuning:
    """Formula gains."""

    @pytest.mark.parametrize(
        "l_lower, l_upper, lambda2, lambda_n, alpha, beta",
        [
            (1.0, 1.0, 1.0, 2.0, 2.0, 96.0),
            (0.5, 1.5, 1.0, 2.0, 9.0, 1944.0),
            (1.0, 1.0, 1.0, 1.0, 2.0, 24.0),
        ],
    )
    def test_formula(self, l_lower, l_upper, lambda2, lambda_n, alpha, beta):
        gains = tune_alpha_beta(l_lower, l_upper, lambda2, lambda_n)
        assert gains.alpha == pytest.approx(alpha)
        assert gains.beta == pytest.approx(beta)

    def test_disconnected_graph(self):
        with pytest.raises(GraphError):
            tune_alpha_beta(1.0, 1.0, 0.0, 2.0)


class TestEquilibrium:
    """Equilibrium construction and check."""

    def test_constructed_equilibrium(self, cycle4):
        costs = example2_costs()
        gains = GeneratorGains(1.0, 15.0)
        state = generator_equilibrium(costs, cycle4, gains)
        assert generator_equilibrium_check(state, costs, cycle4, gains)
        np.testing.assert_allclose(state.z, global_minimizer(costs))

    def test_average_consensus_equilibrium(self, cycle4, example1_cfg):
        gains = GeneratorGains(1.0, 15.0)
        state = generator_equilibrium(example1_cfg.costs, cycle4, gains)
        assert generator_equilibrium_check(state, example1_cfg.costs, cycle4, gains, y_star=4.0)

    def test_zero_estimate_is_not_equilibrium(self, cycle4):
        costs = example2_costs()
        state = GeneratorState(np.zeros(4), np.zeros(4))
        assert not generator_equilibrium_check(state, costs, cycle4, GeneratorGains(1.0, 15.0))


@pytest.mark.slow
class TestConvergence:
    """Generator-only runs on the heterogeneous costs."""

    @pytest.fixture
    def setup(self, cycle4):
        return example2_costs(), cycle4, GeneratorGains(1.0, 15.0)

    def test_converges_to_optimum(self, setup):
        costs, graph, gains = setup
        y_star = global_minimizer(costs)
        initial = GeneratorState(np.array([1.0, 3.0, 5.0, 7.0]), np.zeros(4))
        traj = simulate_generator(costs, graph, gains, initial, t_final=30.0, h=5e-3)
        assert np.linalg.norm(traj.z[-1] - y_star) <= 1e-3
        assert traj.log_error_slope(y_star, 5.0, 25.0) < 0.0

    def test_free_of_initialization(self, setup):
        costs, graph, gains = setup
        rng = np.random.default_rng(7)
        limits = []
        for _ in range(10):
            initial = GeneratorState(rng.uniform(-5, 5, 4), rng.uniform(-5, 5, 4))
            traj = simulate_generator(costs, graph, gains, initial, t_final=30.0, h=5e-3, record_stride=100)
            limits.append(traj.z[-1])
        limits = np.array(limits)
        assert np.max(np.abs(limits - limits[0])) <= 1e-6

    def test_flux_sum_conserved(self, setup):
        costs, graph, gains = setup
        rng = np.random.default_rng(19)
        initial = GeneratorState(rng.uniform(-5, 5, 4), rng.uniform(-5, 5, 4))
        traj = simulate_generator(costs, graph, gains, initial, t_final=50.0, h=1e-3, record_stride=100)
        total = traj.v.sum(axis=1)
        assert traj.times[-1] == pytest.approx(50.0)
        assert np.max(np.abs(total - initial.v.sum())) <= 1e-9
