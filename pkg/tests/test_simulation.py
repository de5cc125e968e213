"""
Tests for the closed-loop engine and the convergence report.
"""

import numpy as np
import pytest
from scipy.linalg import expm

from consensus_core.dynamics.controller import Gains
from consensus_core.dynamics.plant import AffinePlant, ParameterBox
from consensus_core.errors import SimulationDivergedError
from consensus_core.network.graph import Digraph
from consensus_core.optimization.costs import CostEnsemble, Quadratic
from consensus_core.optimization.generator import GeneratorGains
from consensus_core.simulation.engine import (
    ClosedLoop,
    InitialConditions,
    ParameterSchedule,
    Scenario,
    SimConfig,
    StateLayout,
    Trajectory,
    closed_loop_equilibrium,
    closed_loop_rhs,
    simulate,
)
from consensus_core.simulation.report import convergence_report


def single_agent(plant, epsilon=0.0, k=(1.0, 2.0)):
    return Scenario(
        graph=Digraph(np.zeros((1, 1))),
        plant=plant,
        costs=CostEnsemble((Quadratic.create(1.0, 0.0),)),
        gains=Gains(k=np.array(k), epsilon=epsilon, gamma=1.0, generator=GeneratorGains(1.0, 1.0)),
    )


def fixed_plant(a, b, c):
    return AffinePlant(A0=a, B0=b, C0=c, A_dev=(), B_dev=(), C_dev=(), box=ParameterBox.from_intervals([]))


def synthetic_trajectory(times, y, y_star=0.0, schedule=None):
    y = np.asarray(y, dtype=float).reshape(len(times), -1)
    t, n = y.shape
    meta = {"schedule": schedule.to_list()} if schedule is not None else {}
    return Trajectory(
        times=np.asarray(times, dtype=float),
        y=y,
        u=np.ones_like(y),
        z=np.full_like(y, y_star),
        v=np.zeros_like(y),
        xi0=np.zeros_like(y),
        x=np.zeros((t, n, 0)),
        chi=np.zeros((t, n, 0)),
        meta=meta,
    )


class TestLayoutAndSchedule:
    """State packing and piecewise-constant parameters."""

    def test_layout_slices(self):
        layout = StateLayout(n_agents=4, n_state=3, n_obs=2)
        assert layout.size == 4 * (3 + 1 + 2 + 1 + 1)
        state = np.arange(layout.size, dtype=float)
        parts = layout.unpack(state)
        assert parts["x"].shape == (4, 3)
        assert parts["chi"].shape == (4, 2)
        repacked = layout.pack(parts["x"], parts["xi0"], parts["chi"], parts["z"], parts["v"])
        np.testing.assert_array_equal(repacked, state)

    def test_translation_is_unit(self):
        d = StateLayout(4, 2, 2).v_translation()
        assert np.linalg.norm(d) == pytest.approx(1.0)

    def test_schedule_lookup(self):
        schedule = ParameterSchedule(np.array([0.0, 25.0]), np.array([[0.4], [0.1]]))
        assert schedule.w_at(24.999)[0] == 0.4
        assert schedule.w_at(25.0)[0] == 0.1
        phases = schedule.phases(50.0)
        assert [(a, b) for a, b, _ in phases] == [(0.0, 25.0), (25.0, 50.0)]
        assert len(schedule.phases(10.0)) == 1

    def test_schedule_must_start_at_zero(self):
        with pytest.raises(ValueError):
            ParameterSchedule(np.array([1.0]), np.array([[0.0]]))

    def test_schedule_times_increasing(self):
        with pytest.raises(ValueError):
            ParameterSchedule(np.array([0.0, 2.0, 2.0]), np.zeros((3, 1)))

    def test_schedule_plant_mismatch(self, example2_cfg):
        cfg = SimConfig(schedule=ParameterSchedule.constant([0.0]))
        with pytest.raises(ValueError):
            cfg.schedule_for(example2_cfg.plant)

    def test_sim_config_validation(self):
        with pytest.raises(ValueError):
            SimConfig(h=0.0)
        with pytest.raises(ValueError):
            SimConfig(controller="state")


class TestInitialConditions:
    """Default and seeded initial states."""

    def test_default_observer_starts_at_output(self, example1_cfg, preset_gains):
        loop = ClosedLoop(example1_cfg.scenario(preset_gains))
        x0 = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0]])
        state = InitialConditions(x=x0).resolve(loop.layout, example1_cfg.plant.materialize())
        parts = loop.layout.unpack(state)
        np.testing.assert_array_equal(parts["chi"][:, 0], [1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(parts["chi"][:, 1], 0.0)
        np.testing.assert_array_equal(parts["z"], 0.0)

    def test_random_is_seeded(self, example2_cfg, preset_gains):
        loop = ClosedLoop(example2_cfg.scenario(preset_gains))
        mats = example2_cfg.plant.materialize()
        init = InitialConditions(mode="random")
        a = init.resolve(loop.layout, mats, seed=3)
        b = init.resolve(loop.layout, mats, seed=3)
        c = init.resolve(loop.layout, mats, seed=4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)
        assert np.max(np.abs(loop.layout.unpack(a)["x"])) <= 1.0

    def test_wrong_size(self, example1_cfg, preset_gains):
        loop = ClosedLoop(example1_cfg.scenario(preset_gains))
        with pytest.raises(ValueError):
            InitialConditions(z=np.zeros(3)).resolve(loop.layout, example1_cfg.plant.materialize())


class TestClosedLoop:
    """Right-hand side, its compiled form and equilibria."""

    @pytest.mark.parametrize("controller", ["output", "partial_state"])
    def test_compiled_matches_explicit(self, example2_cfg, preset_gains, controller):
        loop = ClosedLoop(example2_cfg.scenario(preset_gains), controller)
        mats = example2_cfg.plant.materialize([0.4, 0.3, -0.2, -0.4])
        compiled = loop.compile(mats)
        rng = np.random.default_rng(1)
        for _ in range(5):
            state = rng.uniform(-3.0, 3.0, loop.layout.size)
            explicit = loop.rhs(state, mats)
            np.testing.assert_allclose(compiled(0.0, state), explicit, atol=1e-9 * max(1.0, np.abs(explicit).max()))
            np.testing.assert_allclose(compiled.control(state), loop.control(state, mats), atol=1e-9)

    def test_rhs_uses_schedule(self, example2_cfg, preset_gains):
        scenario = example2_cfg.scenario(preset_gains)
        loop = ClosedLoop(scenario)
        state = np.random.default_rng(2).uniform(-1.0, 1.0, loop.layout.size)
        late = closed_loop_rhs(state, 30.0, scenario, example2_cfg.sim)
        expected = loop.rhs(state, example2_cfg.plant.materialize([0.1, -0.2, -0.3, 0.2]))
        np.testing.assert_allclose(late, expected)

    def test_example1_equilibrium(self, example1_cfg, preset_gains):
        scenario = example1_cfg.scenario(preset_gains)
        for w in ([0.0], [-0.5], [1.0]):
            state = closed_loop_equilibrium(scenario, w)
            derivative = ClosedLoop(scenario).rhs(state, example1_cfg.plant.materialize(w))
            np.testing.assert_allclose(derivative, 0.0, atol=1e-8)

    def test_example2_equilibrium(self, example2_cfg, preset_gains):
        scenario = example2_cfg.scenario(preset_gains)
        w = [0.1, -0.2, -0.3, 0.2]
        state = closed_loop_equilibrium(scenario, w)
        derivative = ClosedLoop(scenario).rhs(state, example2_cfg.plant.materialize(w))
        np.testing.assert_allclose(derivative, 0.0, atol=1e-8)

    def test_equilibrium_needs_gain(self, example1_cfg, preset_gains):
        with pytest.raises(ValueError):
            closed_loop_equilibrium(example1_cfg.scenario(preset_gains.replace(epsilon=0.0)))

    def test_controllers_agree_on_exact_estimates(self, example1_cfg, preset_gains):
        scenario = example1_cfg.scenario(preset_gains)
        state = closed_loop_equilibrium(scenario, [0.5])
        state[ClosedLoop(scenario).layout.xi0] += 0.25
        mats = example1_cfg.plant.materialize([0.5])
        u_out = ClosedLoop(scenario, "output").control(state, mats)
        u_state = ClosedLoop(scenario, "partial_state").control(state, mats)
        np.testing.assert_allclose(u_out, u_state, atol=1e-12)

    def test_open_loop_matches_matrix_exponential(self):
        a = np.array([[-1.0, 0.5], [0.0, -2.0]])
        plant = fixed_plant(a, [0.0, 1.0], [1.0, 0.0])
        x0 = np.array([1.0, 1.0])
        cfg = SimConfig(h=1e-3, t_final=2.0, record_stride=100, initial=InitialConditions(x=x0, z=np.array([1.0])))
        traj = simulate(single_agent(plant), cfg)
        for t, x, z in zip(traj.times, traj.x[:, 0, :], traj.z[:, 0]):
            np.testing.assert_allclose(x, expm(a * t) @ x0, atol=1e-10)
            assert z == pytest.approx(np.exp(-t), abs=1e-10)
        np.testing.assert_allclose(traj.u, 0.0)


class TestSimulate:
    """Recording, divergence and determinism."""

    def test_records_horizon_exactly(self, example1_cfg, preset_gains):
        cfg = SimConfig(h=1e-3, t_final=0.0105, record_stride=1)
        traj = simulate(example1_cfg.scenario(preset_gains), cfg)
        assert traj.times[0] == 0.0
        assert traj.times[-1] == 0.0105
        assert np.all(np.diff(traj.times) > 0)
        assert traj.x.shape == (len(traj), 4, 2)
        assert traj.chi.shape == (len(traj), 4, 2)

    def test_steps_land_on_switch(self, example2_cfg, preset_gains):
        schedule = ParameterSchedule(np.array([0.0, 0.0105]), np.array([[0.0] * 4, [0.1] * 4]))
        cfg = SimConfig(h=1e-3, t_final=0.02, record_stride=1, schedule=schedule)
        traj = simulate(example2_cfg.scenario(preset_gains), cfg)
        assert np.any(np.isclose(traj.times, 0.0105, rtol=0, atol=1e-15))
        assert traj.times[-1] == 0.02
        assert traj.schedule.times.tolist() == [0.0, 0.0105]

    def test_divergence_carries_partial_trajectory(self):
        plant = fixed_plant(np.array([[5.0]]), [1.0], [1.0])
        cfg = SimConfig(h=1e-2, t_final=20.0, record_stride=1, initial=InitialConditions(x=np.array([1.0])))
        with pytest.raises(SimulationDivergedError) as info:
            simulate(single_agent(plant, k=(1.0,)), cfg)
        err = info.value
        assert 4.0 < err.time < 7.0
        assert err.trajectory is not None
        assert len(err.trajectory) > 1
        assert err.trajectory.times[-1] <= err.time

    def test_divergence_time_is_failing_step(self):
        plant = fixed_plant(np.array([[5.0]]), [1.0], [1.0])
        cfg = SimConfig(h=1e-2, t_final=20.0, record_stride=1, initial=InitialConditions(x=np.array([1.0])))
        with pytest.raises(SimulationDivergedError) as info:
            simulate(single_agent(plant, k=(1.0,)), cfg)
        err = info.value
        # every step is recorded, so the last sample is the last valid state
        assert err.trajectory.times[-1] == pytest.approx(err.time - 1e-2, abs=1e-9)
        assert err.time == pytest.approx(round(err.time / 1e-2) * 1e-2, abs=1e-9)
        assert np.max(np.abs(err.last_state)) <= 1e12
        assert err.trajectory.x[-1, 0, 0] == err.last_state[0]

    def test_switch_sample_belongs_to_next_phase(self, example2_cfg, preset_gains):
        before, after = [0.0, 0.0, 0.0, -0.4], [0.0, 0.0, 0.0, 0.4]
        schedule = ParameterSchedule(np.array([0.0, 0.05]), np.array([before, after]))
        cfg = SimConfig(
            h=1e-2, t_final=0.1, record_stride=1, schedule=schedule,
            initial=InitialConditions(mode="random"), seed=5,
        )
        traj = simulate(example2_cfg.scenario(preset_gains), cfg)
        at_switch = np.flatnonzero(np.isclose(traj.times, 0.05, rtol=0, atol=1e-12))
        assert at_switch.size == 1
        j = int(at_switch[0])
        c_after = example2_cfg.plant.materialize(after).C
        c_before = example2_cfg.plant.materialize(before).C
        np.testing.assert_allclose(traj.y[j], traj.x[j] @ c_after, rtol=0, atol=1e-15)
        assert not np.allclose(traj.y[j], traj.x[j] @ c_before)

        report = convergence_report(traj, example2_cfg.y_star(), 0.05)
        assert [p.t_start for p in report.phases] == [0.0, 0.05]
        assert report.phases[0].final_error == pytest.approx(abs(traj.y[j - 1] - example2_cfg.y_star()).max())

    def test_flux_sum_conserved(self, example2_cfg):
        cfg = SimConfig(h=1e-3, t_final=5.0, initial=InitialConditions(mode="random"), seed=3)
        traj = simulate(example2_cfg.scenario(), cfg)
        total = traj.v.sum(axis=1)
        assert np.max(np.abs(total - total[0])) <= 1e-9

    def test_deterministic(self, example2_cfg, preset_gains):
        scenario = example2_cfg.scenario(preset_gains)
        cfg = SimConfig(h=1e-3, t_final=1.0, initial=InitialConditions(mode="random"), seed=11)
        a = simulate(scenario, cfg)
        b = simulate(scenario, cfg)
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.u, b.u)

    def test_meta(self, example1_cfg, preset_gains):
        traj = simulate(example1_cfg.scenario(preset_gains), SimConfig(t_final=0.01))
        assert traj.meta["controller"] == "output"
        assert traj.meta["schedule"] == [{"t": 0.0, "w": [0.0]}]


@pytest.mark.slow
class TestPresetRuns:
    """Full-horizon runs of the built-in scenarios."""

    def test_example1_hover(self, example1_cfg, preset_gains):
        traj = simulate(example1_cfg.scenario(preset_gains), example1_cfg.sim)
        report = convergence_report(traj, 4.0, 0.05)
        assert report.settled
        assert report.settle_time < 40.0
        np.testing.assert_allclose(traj.u[-1], 9.8, atol=1e-2)
        np.testing.assert_allclose(traj.z[-1], 4.0, atol=1e-3)

    def test_example1_partial_state(self, example1_cfg, preset_gains):
        cfg = example1_cfg.sim
        output = simulate(example1_cfg.scenario(preset_gains), cfg)
        partial = simulate(
            example1_cfg.scenario(preset_gains),
            SimConfig(t_final=cfg.t_final, initial=cfg.initial, controller="partial_state"),
        )
        np.testing.assert_allclose(partial.y[-1], output.y[-1], atol=1e-3)

    @pytest.mark.parametrize("w", [1.0, 0.0, -0.5], ids=["half_mass", "nominal", "double_mass"])
    def test_example1_gravity_rejection(self, example1_cfg, preset_gains, w):
        cfg = SimConfig(t_final=80.0, schedule=ParameterSchedule.constant([w]), initial=example1_cfg.sim.initial)
        traj = simulate(example1_cfg.scenario(preset_gains), cfg)
        report = convergence_report(traj, 4.0, 0.05)
        assert report.settled
        np.testing.assert_allclose(traj.y[-1], 4.0, atol=0.05)
        # hover thrust g * M with M = M0 / (1 + w)
        np.testing.assert_allclose(traj.u[-1], 9.8 / (1.0 + w), atol=1e-2)

    def test_example2_switching(self, example2_cfg):
        y_star = example2_cfg.y_star()
        traj = simulate(example2_cfg.scenario(), example2_cfg.sim)
        report = convergence_report(traj, y_star, 0.05)
        assert len(report.phases) == 2
        assert report.settled
        assert all(p.settled for p in report.phases)
        assert report.final_error <= 1e-2

    def test_example2_every_box_corner(self, example2_cfg):
        scenario = example2_cfg.scenario()
        y_star = example2_cfg.y_star()
        corners = example2_cfg.plant.box.corners()
        assert len(corners) == 16
        for corner in corners:
            cfg = SimConfig(
                t_final=50.0,
                record_stride=50,
                schedule=ParameterSchedule.constant(corner),
                initial=InitialConditions(mode="random"),
            )
            report = convergence_report(simulate(scenario, cfg), y_star, 0.05)
            assert report.settled, f"w = {np.asarray(corner).tolist()}"
            assert report.final_error <= 0.05


class TestReport:
    """Settling statistics on synthetic series."""

    def test_sustained_settle_time(self):
        traj = synthetic_trajectory([0, 1, 2, 3], [1.0, 0.5, 0.01, 0.02])
        report = convergence_report(traj, 0.0, 0.05)
        assert report.settled
        assert report.settle_time == 2.0
        assert report.final_error == pytest.approx(0.02)

    def test_reentry_resets_settle_time(self):
        traj = synthetic_trajectory([0, 1, 2, 3, 4], [0.01, 0.01, 0.2, 0.01, 0.0])
        assert convergence_report(traj, 0.0, 0.05).settle_time == 3.0

    def test_settled_from_start(self):
        traj = synthetic_trajectory([0, 1], [0.0, 0.0])
        assert convergence_report(traj, 0.0, 0.05).settle_time == 0.0

    def test_not_settled_at_end(self):
        report = convergence_report(synthetic_trajectory([0, 1], [0.0, 1.0]), 0.0, 0.05)
        assert not report.settled
        assert report.settle_time is None
        assert "NOT SETTLED" in report.to_text()

    def test_diverged_never_settles(self):
        report = convergence_report(synthetic_trajectory([0, 1], [0.0, 0.0]), 0.0, 0.05, diverged=True)
        assert not report.settled
        assert report.to_dict()["diverged"] is True

    def test_every_phase_must_settle(self):
        schedule = ParameterSchedule(np.array([0.0, 2.0]), np.array([[0.0], [1.0]]))
        traj = synthetic_trajectory([0, 1, 2, 3, 4], [1.0, 0.0, 0.0, 0.0, 0.0], schedule=schedule)
        report = convergence_report(traj, 0.0, 0.05)
        assert [p.settle_time for p in report.phases] == [1.0, 2.0]
        assert report.settled

        traj = synthetic_trajectory([0, 1, 2, 3, 4], [0.0, 1.0, 0.0, 0.0, 0.0], schedule=schedule)
        report = convergence_report(traj, 0.0, 0.05)
        assert not report.phases[0].settled
        assert not report.settled

    def test_multi_agent_uses_worst_error(self):
        traj = synthetic_trajectory([0, 1], [[0.0, 0.0], [0.01, -0.3]])
        report = convergence_report(traj, 0.0, 0.05)
        assert report.final_error == pytest.approx(0.3)

    def test_invalid_tolerance(self):
        with pytest.raises(ValueError):
            convergence_report(synthetic_trajectory([0], [0.0]), 0.0, 0.0)
