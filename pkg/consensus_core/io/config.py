"""
Scenario config: one versioned JSON document holding graph, plant, costs,
gains and simulation settings.

Loading validates the structure first (``validate_schema``), checks the
schema version, then parses every section into the library's frozen
dataclasses. Any problem surfaces as ``ConfigError``.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from .. import __version__ as CORE_VERSION
from ..design.tuning import DEFAULT_GAMMA_MAX, GainSpec, resolve_gains
from ..dynamics.controller import Gains
from ..dynamics.plant import AffinePlant
from ..errors import ConfigError
from ..network.graph import Digraph
from ..optimization.costs import CostEnsemble, global_minimizer
from ..simulation.engine import InitialConditions, ParameterSchedule, Scenario, SimConfig
from .schema import SCHEMA_VERSION, VersionCompatibility, check_version_compatibility, validate_schema

logger = logging.getLogger(__name__)

AUTO = "auto"


def _auto_or_float(value: Any) -> Optional[float]:
    return None if value == AUTO or value is None else float(value)


def gains_from_dict(data: Dict[str, Any]) -> GainSpec:
    """Parse the gains section; "auto" (or a missing entry) becomes None."""
    k = data.get("k", AUTO)
    return GainSpec(
        k=None if k == AUTO else tuple(float(x) for x in k),
        lambda0=float(data.get("lambda0", 1.0)),
        alpha=_auto_or_float(data.get("alpha", AUTO)),
        beta=_auto_or_float(data.get("beta", AUTO)),
        tuning=data.get("tuning", "manual"),
        epsilon=_auto_or_float(data.get("epsilon", AUTO)),
        gamma=_auto_or_float(data.get("gamma", AUTO)),
        gamma_max=float(data.get("gamma_max", DEFAULT_GAMMA_MAX)),
    )


def initial_from_dict(data: Dict[str, Any]) -> InitialConditions:
    arrays = {
        name: np.asarray(data[name], dtype=np.float64)
        for name in ("x", "xi0", "chi", "z", "v")
        if name in data
    }
    return InitialConditions(mode=data.get("mode", "default"), **arrays)


def sim_from_dict(data: Dict[str, Any], n_w: int) -> SimConfig:
    """Parse the sim section. An empty schedule means w = 0 throughout."""
    schedule_data = data.get("schedule", [])
    schedule = ParameterSchedule.from_list(schedule_data, n_w) if schedule_data else None
    defaults = SimConfig()
    return SimConfig(
        h=float(data.get("h", defaults.h)),
        t_final=float(data.get("t_final", defaults.t_final)),
        record_stride=int(data.get("record_stride", defaults.record_stride)),
        schedule=schedule,
        initial=initial_from_dict(data.get("initial", {})),
        seed=int(data.get("seed", defaults.seed)),
        controller=data.get("controller", defaults.controller),
        tol=float(data.get("tol", defaults.tol)),
    )


def sim_to_dict(sim: SimConfig) -> Dict[str, Any]:
    return {
        "h": sim.h,
        "t_final": sim.t_final,
        "record_stride": sim.record_stride,
        "tol": sim.tol,
        "schedule": sim.schedule.to_list() if sim.schedule is not None else [],
        "initial": sim.initial.to_dict(),
        "seed": sim.seed,
        "controller": sim.controller,
    }


@dataclass(frozen=True)
class ScenarioConfig:
    """
    A complete scenario as read from (or written to) a config file.

    Attributes:
        graph: Communication digraph
        plant: Shared uncertain plant
        costs: Local costs, one per agent
        gains: Gain policy; "auto" entries are resolved on demand
        sim: Integration and recording settings
        name: Scenario label used in logs and reports
        preset: Name of the built-in preset this config came from, if any
    """

    graph: Digraph
    plant: AffinePlant
    costs: CostEnsemble
    gains: GainSpec = field(default_factory=GainSpec)
    sim: SimConfig = field(default_factory=SimConfig)
    name: str = "scenario"
    preset: Optional[str] = None

    def __post_init__(self) -> None:
        if len(self.costs) != self.graph.n:
            raise ValueError(f"{len(self.costs)} costs for a graph with {self.graph.n} agents")

    @property
    def n_agents(self) -> int:
        return self.graph.n

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "name": self.name,
            "graph": self.graph.to_dict(),
            "plant": self.plant.to_dict(),
            "costs": self.costs.to_list(),
            "gains": self.gains.to_dict(),
            "sim": sim_to_dict(self.sim),
        }
        if self.preset is not None:
            data["preset"] = self.preset
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioConfig":
        """
        Parse a ``scenario`` object.

        Raises:
            ConfigError: If any section is missing or holds invalid values
        """
        section = "scenario"
        try:
            section = "graph"
            graph = Digraph.from_dict(data["graph"])
            section = "plant"
            plant = AffinePlant.from_dict(data["plant"])
            section = "costs"
            costs = CostEnsemble.from_list(data["costs"])
            section = "gains"
            gains = gains_from_dict(data.get("gains", {}))
            section = "sim"
            sim = sim_from_dict(data.get("sim", {}), plant.n_w)
            section = "scenario"
            return cls(
                graph=graph,
                plant=plant,
                costs=costs,
                gains=gains,
                sim=sim,
                name=str(data.get("name", "scenario")),
                preset=data.get("preset"),
            )
        except (KeyError, TypeError, ValueError) as e:
            detail = f"missing field {e}" if isinstance(e, KeyError) else str(e)
            raise ConfigError(f"invalid {section} section: {detail}") from e

    def y_star(self) -> float:
        """Oracle optimum of the configured costs."""
        return global_minimizer(self.costs)

    def resolved_gains(self, grid: Optional[Sequence[NDArray]] = None) -> Gains:
        """Concrete gains with every "auto" entry filled in."""
        return resolve_gains(self.gains, self.plant, self.costs, self.graph, grid)

    def scenario(self, gains: Optional[Gains] = None) -> Scenario:
        """Simulation scenario; resolves the gain policy when ``gains`` is not given."""
        return Scenario(
            graph=self.graph,
            plant=self.plant,
            costs=self.costs,
            gains=gains if gains is not None else self.resolved_gains(),
            name=self.name,
        )

    def with_gains(self, gains: GainSpec) -> "ScenarioConfig":
        return dataclasses.replace(self, gains=gains)

    def with_overrides(
        self,
        tol: Optional[float] = None,
        seed: Optional[int] = None,
        t_final: Optional[float] = None,
    ) -> "ScenarioConfig":
        """Copy with command-line overrides applied to the sim section."""
        changes: Dict[str, Any] = {}
        if tol is not None:
            changes["tol"] = tol
        if seed is not None:
            changes["seed"] = seed
        if t_final is not None:
            changes["t_final"] = t_final
        if not changes:
            return self
        try:
            sim = dataclasses.replace(self.sim, **changes)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return dataclasses.replace(self, sim=sim)


def config_to_document(cfg: ScenarioConfig, app_version: Optional[str] = None) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "app_version": app_version or CORE_VERSION,
        "scenario": cfg.to_dict(),
    }


def config_from_document(data: Any) -> Tuple[ScenarioConfig, List[str]]:
    """
    Validate and parse a whole config document.

    Returns:
        Tuple of (ScenarioConfig, list of warning messages)

    Raises:
        ConfigError: On structural errors, an incompatible major version or
            invalid section contents
    """
    is_valid, errors = validate_schema(data)
    if not is_valid:
        raise ConfigError(f"Schema validation failed: {'; '.join(errors)}")

    warnings_list: List[str] = []
    compat, version_msg = check_version_compatibility(data["schema_version"])
    if compat == VersionCompatibility.WARN_NEWER_MINOR:
        logger.warning(version_msg)
        warnings_list.append(version_msg)

    return ScenarioConfig.from_dict(data["scenario"]), warnings_list


def load_config(path: Path) -> Tuple[ScenarioConfig, List[str]]:
    """
    Load a scenario config from a JSON file.

    Raises:
        ConfigError: If the file is missing, is not valid JSON (with the
            offending line) or fails validation
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON format: {e.msg}", line=e.lineno) from e
    logger.info("Loaded config %s", path)
    return config_from_document(data)


def dump_config(
    cfg: ScenarioConfig,
    path: Path,
    app_version: Optional[str] = None,
    indent: int = 2,
) -> None:
    """Write a scenario config as a versioned JSON document."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config_to_document(cfg, app_version), f, indent=indent)
