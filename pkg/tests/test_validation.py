"""
Tests for the scenario checks behind ``consensus-sim analyze``.
"""

import dataclasses

import numpy as np
import pytest

from consensus_core.design.tuning import GainSpec
from consensus_core.dynamics.plant import AffinePlant, ParameterBox
from consensus_core.errors import ConvergenceError
from consensus_core.network.graph import Digraph
from consensus_core.optimization.costs import CostEnsemble
from consensus_core.simulation.engine import InitialConditions, ParameterSchedule, SimConfig
from consensus_core.validation import Severity, validate_scenario


def error_codes(result):
    return [m.code for m in result.errors]


class TestPresets:
    """Built-in scenarios satisfy every standing assumption."""

    def test_example1(self, example1_cfg):
        result = validate_scenario(example1_cfg)
        assert result.is_valid, [str(m) for m in result.errors]
        assert result.details["lambda2"] == pytest.approx(1.0)
        assert result.details["lambda_n"] == pytest.approx(2.0)
        assert result.details["y_star"] == pytest.approx(4.0)
        assert result.details["relative_degree"] == 2

    def test_example2(self, example2_cfg):
        result = validate_scenario(example2_cfg)
        assert result.is_valid, [str(m) for m in result.errors]
        assert result.details["y_star"] == pytest.approx(3.24, abs=0.01)
        assert result.details["b1_range"] == pytest.approx([0.25, 2.25])
        assert "GRAPH003" in result.codes()
        assert not result.warnings

    def test_text_summary(self, example1_cfg):
        text = validate_scenario(example1_cfg).to_text()
        assert "lambda_2 = 1" in text
        assert "Verdict: PASS" in text
        assert text.count("PASS") == 6


class TestGraphChecks:
    """Connectivity and balance."""

    def test_unbalanced(self, example1_cfg):
        graph = Digraph.from_edges(4, [(0, 1, 2.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)])
        result = validate_scenario(dataclasses.replace(example1_cfg, graph=graph))
        assert not result.is_valid
        assert "GRAPH002" in error_codes(result)
        assert "GRAPH001" not in error_codes(result)
        assert not result.group_passed("GRAPH")
        assert result.group_passed("COST")

    def test_not_strongly_connected(self, example1_cfg):
        graph = Digraph.from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
        result = validate_scenario(dataclasses.replace(example1_cfg, graph=graph))
        assert "GRAPH001" in error_codes(result)
        assert "Verdict: FAIL" in result.to_text()


class TestCostChecks:
    """Declared convexity constants."""

    def test_overclaimed_constant(self, example2_cfg):
        costs = list(example2_cfg.costs)
        costs[3] = dataclasses.replace(costs[3], l_lower=5.0, l_upper=5.0)
        result = validate_scenario(dataclasses.replace(example2_cfg, costs=CostEnsemble(tuple(costs))))
        bad = [m for m in result.errors if m.code == "COST001"]
        assert len(bad) == 1
        assert bad[0].location == "costs[3]"


class TestPlantChecks:
    """Parameter sweep findings."""

    def test_sign_flip(self, example1_cfg):
        plant = AffinePlant(
            A0=np.array([[0.0, 1.0], [0.0, 0.0]]),
            B0=np.array([0.0, 1.0]),
            C0=np.array([1.0, 0.0]),
            A_dev=(np.zeros((2, 2)),),
            B_dev=(np.array([0.0, 2.0]),),
            C_dev=(np.zeros(2),),
            box=ParameterBox(np.array([-1.0]), np.array([1.0])),
        )
        result = validate_scenario(dataclasses.replace(example1_cfg, plant=plant))
        assert "PLANT002" in error_codes(result)

    def test_no_relative_degree(self, example1_cfg):
        plant = AffinePlant(
            A0=np.eye(2), B0=[1.0, 0.0], C0=[0.0, 1.0],
            A_dev=(), B_dev=(), C_dev=(), box=ParameterBox.from_intervals([]),
        )
        cfg = dataclasses.replace(example1_cfg, plant=plant, sim=SimConfig())
        result = validate_scenario(cfg)
        assert "PLANT001" in error_codes(result)
        assert "DIM001" not in error_codes(result)

    def test_zero_solver_failure_is_reported(self, example2_cfg, monkeypatch):
        def stalled(coeffs, tol=1e-10, max_iter=500):
            raise ConvergenceError("no convergence after 500 iterations", residual=1.0)

        monkeypatch.setattr("consensus_core.dynamics.plant.durand_kerner", stalled)
        result = validate_scenario(example2_cfg)
        assert not result.is_valid
        assert "PLANT004" in error_codes(result)
        assert result.details["relative_degree"] == 2
        assert not result.group_passed("PLANT")


class TestConsistencyChecks:
    """Gains, initial values and schedule against the plant."""

    def test_k_length(self, example1_cfg):
        gains = GainSpec(k=(1.0, 3.0, 3.0), alpha=1.0, beta=15.0, epsilon=6.0, gamma=10.0)
        result = validate_scenario(example1_cfg.with_gains(gains))
        assert "DIM001" in error_codes(result)

    def test_initial_shape(self, example1_cfg):
        sim = SimConfig(initial=InitialConditions(x=np.zeros(3)))
        result = validate_scenario(dataclasses.replace(example1_cfg, sim=sim))
        assert "DIM002" in error_codes(result)

    def test_schedule_width(self, example1_cfg):
        sim = SimConfig(schedule=ParameterSchedule.constant([0.0, 0.0]))
        result = validate_scenario(dataclasses.replace(example1_cfg, sim=sim))
        assert "SCHED001" in error_codes(result)

    def test_schedule_warnings(self, example1_cfg):
        schedule = ParameterSchedule(np.array([0.0, 60.0]), np.array([[2.0], [0.0]]))
        sim = SimConfig(t_final=50.0, schedule=schedule)
        result = validate_scenario(dataclasses.replace(example1_cfg, sim=sim))
        assert result.is_valid
        codes = [m.code for m in result.warnings]
        assert codes == ["SCHED002", "SCHED003"]
        assert all(m.severity == Severity.WARNING for m in result.warnings)

    def test_result_serialises(self, example1_cfg):
        data = validate_scenario(example1_cfg).to_dict()
        assert data["is_valid"] is True
        assert {"severity", "code", "message", "location"} <= set(data["messages"][0])
