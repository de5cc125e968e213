"""
Closed-loop simulation engine.

The full closed loop stacks, for N agents with plant order n and observer
size m_obs (m for m >= 2, else 0), the state

    [x (N*n, agent-major) | xi0 (N) | chi (N*m_obs, agent-major) | z (N) | v (N)]

Within one parameter phase everything but the cost gradients is affine in
that state. ``ClosedLoop.compile`` probes the explicit right-hand side once
per phase and returns the affine part as a dense matrix; the gradients are
injected at the z slots on every evaluation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..dynamics.controller import (
    ControllerState,
    Gains,
    control_output,
    integral_rhs,
    observer_rhs,
    partial_state_control,
)
from ..dynamics.plant import AffinePlant, PlantMatrices
from ..errors import SimulationDivergedError
from ..network.graph import Digraph
from ..optimization.costs import CostEnsemble, global_minimizer
from ..optimization.generator import GeneratorState, generator_equilibrium, generator_rhs
from .integrator import rk4_step

logger = logging.getLogger(__name__)

CONTROLLER_MODES = ("output", "partial_state")
DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class Scenario:
    """Network, shared plant, local costs and gains of one closed loop."""

    graph: Digraph
    plant: AffinePlant
    costs: CostEnsemble
    gains: Gains
    name: str = "scenario"

    def __post_init__(self) -> None:
        if len(self.costs) != self.graph.n:
            raise ValueError(f"{len(self.costs)} costs for a graph with {self.graph.n} agents")

    @property
    def n_agents(self) -> int:
        return self.graph.n

    def replace(self, **changes: Any) -> "Scenario":
        fields = {
            "graph": self.graph,
            "plant": self.plant,
            "costs": self.costs,
            "gains": self.gains,
            "name": self.name,
        }
        fields.update(changes)
        return Scenario(**fields)


@dataclass(frozen=True)
class StateLayout:
    """Slices of the stacked closed-loop state."""

    n_agents: int
    n_state: int
    n_obs: int

    @property
    def x(self) -> slice:
        return slice(0, self.n_agents * self.n_state)

    @property
    def xi0(self) -> slice:
        start = self.x.stop
        return slice(start, start + self.n_agents)

    @property
    def chi(self) -> slice:
        start = self.xi0.stop
        return slice(start, start + self.n_agents * self.n_obs)

    @property
    def z(self) -> slice:
        start = self.chi.stop
        return slice(start, start + self.n_agents)

    @property
    def v(self) -> slice:
        start = self.z.stop
        return slice(start, start + self.n_agents)

    @property
    def size(self) -> int:
        return self.v.stop

    def unpack(self, state: NDArray[np.float64]) -> Dict[str, NDArray[np.float64]]:
        """Reshaped views: x (N, n), xi0 (N,), chi (N, m_obs), z (N,), v (N,)."""
        if state.shape[-1] != self.size:
            raise ValueError(f"state has {state.shape[-1]} entries, layout expects {self.size}")
        return {
            "x": state[self.x].reshape(self.n_agents, self.n_state),
            "xi0": state[self.xi0],
            "chi": state[self.chi].reshape(self.n_agents, self.n_obs),
            "z": state[self.z],
            "v": state[self.v],
        }

    def pack(
        self,
        x: NDArray[np.float64],
        xi0: NDArray[np.float64],
        chi: NDArray[np.float64],
        z: NDArray[np.float64],
        v: NDArray[np.float64],
    ) -> NDArray[np.float64]:
        state = np.empty(self.size)
        state[self.x] = np.asarray(x, dtype=np.float64).reshape(-1)
        state[self.xi0] = xi0
        state[self.chi] = np.asarray(chi, dtype=np.float64).reshape(-1)
        state[self.z] = z
        state[self.v] = v
        return state

    def v_translation(self) -> NDArray[np.float64]:
        """Unit vector along 1_N in the v block (the structural zero mode)."""
        d = np.zeros(self.size)
        d[self.v] = 1.0 / math.sqrt(self.n_agents)
        return d


@dataclass(frozen=True, eq=False)
class ParameterSchedule:
    """Piecewise-constant w(t): values[i] holds on [times[i], times[i+1])."""

    times: NDArray[np.float64]
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        times = np.atleast_1d(np.asarray(self.times, dtype=np.float64))
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(times.size, -1)
        if times.size == 0 or times[0] != 0.0:
            raise ValueError("schedule must start at t = 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("schedule times must be strictly increasing")
        if values.shape[0] != times.size:
            raise ValueError(f"{times.size} switch times but {values.shape[0]} parameter vectors")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, w: Sequence[float]) -> "ParameterSchedule":
        return cls(np.array([0.0]), np.atleast_2d(np.asarray(w, dtype=np.float64)))

    def w_at(self, t: float) -> NDArray[np.float64]:
        index = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.values[max(index, 0)]

    def phases(self, t_final: float) -> List[Tuple[float, float, NDArray[np.float64]]]:
        """(t_start, t_end, w) for every phase that starts before t_final."""
        out = []
        for i, start in enumerate(self.times):
            if start >= t_final:
                break
            end = float(self.times[i + 1]) if i + 1 < self.times.size else t_final
            out.append((float(start), min(end, t_final), self.values[i]))
        return out

    def to_list(self) -> List[Dict[str, Any]]:
        return [{"t": float(t), "w": [float(x) for x in w]} for t, w in zip(self.times, self.values)]

    @classmethod
    def from_list(cls, data: Sequence[Dict[str, Any]], n_w: int = 0) -> "ParameterSchedule":
        if not data:
            return cls.constant(np.zeros(n_w))
        return cls(
            np.array([float(entry["t"]) for entry in data]),
            np.array([[float(x) for x in entry["w"]] for entry in data]).reshape(len(data), -1),
        )


@dataclass(frozen=True, eq=False)
class InitialConditions:
    """
    Initial closed-loop state.

    ``default``: x = 0, xi0 = 0, z = 0, v = 0. ``random``: those not given
    explicitly are drawn uniform on [-1, 1] from ``default_rng(seed)``, in
    the order x, xi0, z, v. The observer starts at chi = (y(0), 0, ..., 0)
    unless given.
    """

    mode: str = "default"
    x: Optional[NDArray[np.float64]] = None
    xi0: Optional[NDArray[np.float64]] = None
    chi: Optional[NDArray[np.float64]] = None
    z: Optional[NDArray[np.float64]] = None
    v: Optional[NDArray[np.float64]] = None

    def __post_init__(self) -> None:
        if self.mode not in ("default", "random"):
            raise ValueError(f"initial mode must be 'default' or 'random', got {self.mode!r}")

    def resolve(self, layout: StateLayout, mats: PlantMatrices, seed: int = 0) -> NDArray[np.float64]:
        n_agents, n = layout.n_agents, layout.n_state
        rng = np.random.default_rng(seed)

        def pick(value: Optional[NDArray], shape: Tuple[int, ...]) -> NDArray[np.float64]:
            if value is not None:
                arr = np.asarray(value, dtype=np.float64)
                if arr.size != int(np.prod(shape)):
                    raise ValueError(f"initial value needs shape {shape}, got {arr.shape}")
                return arr.reshape(shape)
            if self.mode == "random":
                return rng.uniform(-1.0, 1.0, size=shape)
            return np.zeros(shape)

        x = pick(self.x, (n_agents, n))
        xi0 = pick(self.xi0, (n_agents,))
        z = pick(self.z, (n_agents,))
        v = pick(self.v, (n_agents,))
        if self.chi is not None:
            chi = np.asarray(self.chi, dtype=np.float64).reshape(n_agents, layout.n_obs)
        else:
            chi = np.zeros((n_agents, layout.n_obs))
            if layout.n_obs:
                chi[:, 0] = x @ mats.C
        return layout.pack(x, xi0, chi, z, v)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"mode": self.mode}
        for name in ("x", "xi0", "chi", "z", "v"):
            value = getattr(self, name)
            if value is not None:
                data[name] = np.asarray(value, dtype=np.float64).tolist()
        return data


@dataclass(frozen=True)
class SimConfig:
    """Integration, recording and scheduling settings of one run."""

    h: float = 1e-3
    t_final: float = 50.0
    record_stride: int = 10
    schedule: Optional[ParameterSchedule] = None
    initial: InitialConditions = field(default_factory=InitialConditions)
    seed: int = 0
    controller: str = "output"
    tol: float = 0.05

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")
        if self.controller not in CONTROLLER_MODES:
            raise ValueError(f"controller must be one of {CONTROLLER_MODES}, got {self.controller!r}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")

    def schedule_for(self, plant: AffinePlant) -> ParameterSchedule:
        if self.schedule is None:
            return ParameterSchedule.constant(np.zeros(plant.n_w))
        if self.schedule.values.shape[1] != plant.n_w:
            raise ValueError(
                f"schedule vectors have {self.schedule.values.shape[1]} entries, plant has {plant.n_w} parameters"
            )
        return self.schedule


@dataclass(frozen=True, eq=False)
class CompiledLoop:
    """Affine closed loop of one phase plus the gradient injection at z."""

    matrix: NDArray[np.float64]
    offset: NDArray[np.float64]
    control_matrix: NDArray[np.float64]
    control_offset: NDArray[np.float64]
    z_slice: slice
    alpha: float
    costs: CostEnsemble

    def __call__(self, t: float, state: NDArray[np.float64]) -> NDArray[np.float64]:
        derivative = self.matrix @ state + self.offset
        derivative[self.z_slice] -= self.alpha * self.costs.local_gradients(state[self.z_slice])
        return derivative

    def control(self, state: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.control_matrix @ state + self.control_offset


class ClosedLoop:
    """Plants, controllers and generator of a scenario wired together."""

    def __init__(self, scenario: Scenario, controller: str = "output"):
        if controller not in CONTROLLER_MODES:
            raise ValueError(f"controller must be one of {CONTROLLER_MODES}, got {controller!r}")
        self.scenario = scenario
        self.controller = controller
        self.layout = StateLayout(
            n_agents=scenario.n_agents,
            n_state=scenario.plant.n,
            n_obs=scenario.gains.observer_size,
        )

    def control(self, state: NDArray[np.float64], mats: PlantMatrices) -> NDArray[np.float64]:
        """Per-agent control inputs u_i at ``state``."""
        parts = self.layout.unpack(state)
        gains = self.scenario.gains
        if self.controller == "partial_state":
            return partial_state_control(gains, parts["xi0"], parts["x"], parts["z"], mats)
        y = parts["x"] @ mats.C
        return control_output(gains, ControllerState(parts["xi0"], parts["chi"]), y, parts["z"])

    def rhs(self, state: NDArray[np.float64], mats: PlantMatrices) -> NDArray[np.float64]:
        """Explicit module-by-module right-hand side."""
        sc = self.scenario
        parts = self.layout.unpack(state)
        x, z = parts["x"], parts["z"]
        y = x @ mats.C

        z_dot, v_dot = generator_rhs(GeneratorState(z, parts["v"]), sc.costs, sc.graph, sc.gains.generator)
        u = self.control(state, mats)
        x_dot = x @ mats.A.T + np.outer(u, mats.B) + mats.E
        if self.layout.n_obs:
            chi_dot = observer_rhs(sc.gains, parts["chi"], y)
        else:
            chi_dot = np.zeros((self.layout.n_agents, 0))
        return self.layout.pack(x_dot, integral_rhs(y, z), chi_dot, z_dot, v_dot)

    def _affine_part(self, state: NDArray[np.float64], mats: PlantMatrices) -> NDArray[np.float64]:
        derivative = self.rhs(state, mats)
        z = state[self.layout.z]
        derivative[self.layout.z] += self.scenario.gains.alpha * self.scenario.costs.local_gradients(z)
        return derivative

    def compile(self, mats: PlantMatrices) -> CompiledLoop:
        size = self.layout.size
        zero = np.zeros(size)
        offset = self._affine_part(zero, mats)
        control_offset = self.control(zero, mats)
        matrix = np.empty((size, size))
        control_matrix = np.empty((self.layout.n_agents, size))
        for j in range(size):
            probe = np.zeros(size)
            probe[j] = 1.0
            matrix[:, j] = self._affine_part(probe, mats) - offset
            control_matrix[:, j] = self.control(probe, mats) - control_offset
        return CompiledLoop(
            matrix=matrix,
            offset=offset,
            control_matrix=control_matrix,
            control_offset=control_offset,
            z_slice=self.layout.z,
            alpha=self.scenario.gains.alpha,
            costs=self.scenario.costs,
        )

    def linear_matrix(self, mats: PlantMatrices) -> NDArray[np.float64]:
        """
        State matrix of the closed loop; exact when every cost is quadratic
        (use ``CostEnsemble.linearized`` for a local model).
        """
        size = self.layout.size
        base = self.rhs(np.zeros(size), mats)
        matrix = np.empty((size, size))
        for j in range(size):
            probe = np.zeros(size)
            probe[j] = 1.0
            matrix[:, j] = self.rhs(probe, mats) - base
        return matrix


def closed_loop_rhs(
    state: NDArray[np.float64],
    t: float,
    scenario: Scenario,
    cfg: Optional[SimConfig] = None,
) -> NDArray[np.float64]:
    """Closed-loop derivative at time t with w = w(t) from the schedule."""
    cfg = cfg or SimConfig()
    w = cfg.schedule_for(scenario.plant).w_at(t)
    loop = ClosedLoop(scenario, cfg.controller)
    return loop.rhs(np.asarray(state, dtype=np.float64), scenario.plant.materialize(w))


def closed_loop_equilibrium(
    scenario: Scenario,
    w: Optional[Sequence[float]] = None,
    y_star: Optional[float] = None,
) -> NDArray[np.float64]:
    """
    Consensus equilibrium at a parameter point: y_i = z_i = y*, x' = 0,
    generator at (1 y*, v*), observer at (y*, 0, ..., 0).

    Requires epsilon > 0 (xi0 absorbs the steady-state input).
    """
    sc = scenario
    if sc.gains.epsilon <= 0:
        raise ValueError("equilibrium needs epsilon > 0")
    if y_star is None:
        y_star = global_minimizer(sc.costs)
    mats = sc.plant.materialize(w)
    n = mats.n
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = mats.A
    kkt[:n, n] = mats.B
    kkt[n, :n] = mats.C
    sol = np.linalg.solve(kkt, np.concatenate([-mats.E, [y_star]]))
    x_star, u_star = sol[:n], sol[n]

    layout = StateLayout(sc.n_agents, n, sc.gains.observer_size)
    gen = generator_equilibrium(sc.costs, sc.graph, sc.gains.generator, y_star)
    chi = np.zeros((sc.n_agents, layout.n_obs))
    if layout.n_obs:
        chi[:, 0] = y_star
    xi0 = np.full(sc.n_agents, -u_star / (sc.gains.epsilon * sc.gains.k[0]))
    return layout.pack(np.tile(x_star, (sc.n_agents, 1)), xi0, chi, gen.z, gen.v)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Recorded closed-loop run.

    Attributes:
        times: (T,) recorded instants
        y, u, z, v, xi0: (T, N) per-agent series
        x: (T, N, n) plant states
        chi: (T, N, m_obs) observer states
        meta: schedule, step size, controller mode, scenario name
    """

    times: NDArray[np.float64]
    y: NDArray[np.float64]
    u: NDArray[np.float64]
    z: NDArray[np.float64]
    v: NDArray[np.float64]
    xi0: NDArray[np.float64]
    x: NDArray[np.float64]
    chi: NDArray[np.float64]
    meta: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def n_agents(self) -> int:
        return int(self.y.shape[1])

    @property
    def schedule(self) -> Optional[ParameterSchedule]:
        data = self.meta.get("schedule")
        return ParameterSchedule.from_list(data) if data else None


def _build_trajectory(
    layout: StateLayout,
    times: List[float],
    states: List[NDArray[np.float64]],
    controls: List[NDArray[np.float64]],
    c_rows: List[NDArray[np.float64]],
    meta: Dict[str, Any],
) -> Trajectory:
    data = np.array(states).reshape(len(states), layout.size)
    x = data[:, layout.x].reshape(len(states), layout.n_agents, layout.n_state)
    y = np.einsum("tin,tn->ti", x, np.array(c_rows)) if states else np.zeros((0, layout.n_agents))
    return Trajectory(
        times=np.array(times),
        y=y,
        u=np.array(controls).reshape(len(states), layout.n_agents),
        z=data[:, layout.z],
        v=data[:, layout.v],
        xi0=data[:, layout.xi0],
        x=x,
        chi=data[:, layout.chi].reshape(len(states), layout.n_agents, layout.n_obs),
        meta=meta,
    )


def _phase_steps(span: float, h: float) -> int:
    ratio = span / h
    steps = round(ratio)
    if abs(ratio - steps) > 1e-9 * max(1.0, ratio):
        steps = math.ceil(ratio)
    return max(1, int(steps))


def simulate(scenario: Scenario, cfg: SimConfig) -> Trajectory:
    """
    Integrate the closed loop from t = 0 to cfg.t_final with fixed-step RK4.

    Step boundaries land exactly on every parameter switch (the last step of
    a phase is shortened when h does not divide it). The state is recorded
    at t = 0, every ``record_stride`` steps and at t_final.

    Raises:
        SimulationDivergedError: If any |state| exceeds 1e12 or turns
            non-finite; carries the partial trajectory
    """
    loop = ClosedLoop(scenario, cfg.controller)
    layout = loop.layout
    schedule = cfg.schedule_for(scenario.plant)
    meta = {
        "scenario": scenario.name,
        "controller": cfg.controller,
        "h": cfg.h,
        "t_final": cfg.t_final,
        "seed": cfg.seed,
        "schedule": schedule.to_list(),
    }

    mats0 = scenario.plant.materialize(schedule.w_at(0.0))
    state = cfg.initial.resolve(layout, mats0, cfg.seed)
    times: List[float] = []
    states: List[NDArray[np.float64]] = []
    controls: List[NDArray[np.float64]] = []
    c_rows: List[NDArray[np.float64]] = []

    logger.info(
        "Simulating %s: N=%d, n=%d, %s controller, h=%g, t_final=%g",
        scenario.name, layout.n_agents, layout.n_state, cfg.controller, cfg.h, cfg.t_final,
    )
    step = 0
    # a sample due exactly at a switch is taken with the new phase's C and control
    boundary_due = False
    phases = schedule.phases(cfg.t_final)
    for index, (t_start, t_end, w) in enumerate(phases):
        mats = scenario.plant.materialize(w)
        compiled = loop.compile(mats)
        logger.info("Phase %d on [%g, %g] with w = %s", index, t_start, t_end, np.asarray(w).tolist())
        if index == 0 or boundary_due:
            boundary_due = False
            times.append(float(t_start))
            states.append(state.copy())
            controls.append(compiled.control(state))
            c_rows.append(mats.C)

        n_steps = _phase_steps(t_end - t_start, cfg.h)
        last_phase = index == len(phases) - 1
        for i in range(n_steps):
            t = t_start + i * cfg.h
            t_next = t_end if i == n_steps - 1 else t_start + (i + 1) * cfg.h
            try:
                new_state = rk4_step(compiled, state, t, t_next - t)
            except SimulationDivergedError as exc:
                exc.trajectory = _build_trajectory(layout, times, states, controls, c_rows, meta)
                raise
            peak = float(np.max(np.abs(new_state)))
            if not math.isfinite(peak) or peak > DIVERGENCE_LIMIT:
                logger.error("Divergence at t=%g (max |state| = %.3e)", t_next, peak)
                raise SimulationDivergedError(
                    f"closed loop diverged at t = {t_next:.6g} (max |state| = {peak:.3e})",
                    time=t_next,
                    last_state=state,
                    trajectory=_build_trajectory(layout, times, states, controls, c_rows, meta),
                )
            state = new_state
            step += 1
            if step % cfg.record_stride == 0 and not last_phase and i == n_steps - 1:
                boundary_due = True
            elif step % cfg.record_stride == 0 or (last_phase and i == n_steps - 1):
                times.append(t_next)
                states.append(state.copy())
                controls.append(compiled.control(state))
                c_rows.append(mats.C)

    logger.info("Simulation of %s finished after %d steps", scenario.name, step)
    return _build_trajectory(layout, times, states, controls, c_rows, meta)
