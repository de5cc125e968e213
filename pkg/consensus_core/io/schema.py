"""
Scenario config schema versioning and structural validation.

Semantic versioning rules for config files:
- same major version: compatible
- newer minor version: load with a warning
- different major version: reject
"""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, List, Tuple

SCHEMA_VERSION = "0.1.0"

SCENARIO_SECTIONS = ("graph", "plant", "costs", "gains")


class VersionCompatibility(Enum):
    """Compatibility status between versions."""
    COMPATIBLE = "compatible"
    WARN_NEWER_MINOR = "warn_newer_minor"
    REJECT_MAJOR = "reject_major"


@dataclass
class VersionInfo:
    """Parsed semantic version."""
    major: int
    minor: int
    patch: int

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.patch}"

    @classmethod
    def parse(cls, version_str: str) -> "VersionInfo":
        match = re.match(r"^(\d+)\.(\d+)\.(\d+)", str(version_str))
        if not match:
            raise ValueError(f"Invalid version format: {version_str}")
        return cls(*(int(g) for g in match.groups()))


def check_version_compatibility(
    file_version: str,
    current_version: str = SCHEMA_VERSION,
) -> Tuple[VersionCompatibility, str]:
    """
    Compare a config's schema version against the supported one.

    Returns:
        Tuple of (compatibility status, message)
    """
    try:
        file_v = VersionInfo.parse(file_version)
        current_v = VersionInfo.parse(current_version)
    except ValueError as e:
        return VersionCompatibility.REJECT_MAJOR, str(e)

    if file_v.major != current_v.major:
        return (
            VersionCompatibility.REJECT_MAJOR,
            f"Incompatible major version: config is {file_v.major}.x.x, supported {current_v.major}.x.x",
        )
    if file_v.minor > current_v.minor:
        return (
            VersionCompatibility.WARN_NEWER_MINOR,
            f"Config is from a newer schema ({file_version}); unknown fields are ignored",
        )
    return VersionCompatibility.COMPATIBLE, "Version compatible"


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_number_or_auto(value: Any) -> bool:
    return _is_number(value) or value == "auto"


def validate_schema(data: Any) -> Tuple[bool, List[str]]:
    """
    Structural check of a scenario config document.

    Only shapes and types are checked here; values are validated when the
    sections are parsed into domain objects.

    Returns:
        Tuple of (is_valid, list of error messages)
    """
    if not isinstance(data, dict):
        return False, ["Config root must be a JSON object"]
    errors: List[str] = []

    for field in ("schema_version", "scenario"):
        if field not in data:
            errors.append(f"Missing required field: {field}")
    if errors:
        return False, errors

    compat, msg = check_version_compatibility(data["schema_version"])
    if compat == VersionCompatibility.REJECT_MAJOR:
        return False, [msg]

    scenario = data["scenario"]
    if not isinstance(scenario, dict):
        return False, ["scenario must be an object"]
    for section in SCENARIO_SECTIONS:
        if section not in scenario:
            errors.append(f"Missing scenario section: {section}")
    if errors:
        return False, errors

    graph = scenario["graph"]
    if not isinstance(graph, dict) or not isinstance(graph.get("n"), int):
        errors.append("graph.n must be an integer")
    elif not isinstance(graph.get("edges", []), list):
        errors.append("graph.edges must be a list")
    else:
        for i, edge in enumerate(graph.get("edges", [])):
            if not isinstance(edge, dict) or not {"from", "to"} <= set(edge):
                errors.append(f"graph.edges[{i}] needs 'from' and 'to'")

    plant = scenario["plant"]
    if not isinstance(plant, dict):
        errors.append("plant must be an object")
    else:
        for key in ("A0", "B0", "C0"):
            if key not in plant:
                errors.append(f"Missing plant field: {key}")
        if "box" in plant and not isinstance(plant["box"], list):
            errors.append("plant.box must be a list of [lower, upper] intervals")

    costs = scenario["costs"]
    if not isinstance(costs, list) or not costs:
        errors.append("costs must be a nonempty list")
    else:
        for i, cost in enumerate(costs):
            if not isinstance(cost, dict) or "family" not in cost:
                errors.append(f"costs[{i}] needs a 'family'")
        if isinstance(graph, dict) and isinstance(graph.get("n"), int) and len(costs) != graph["n"]:
            errors.append(f"costs has {len(costs)} entries but graph.n = {graph['n']}")

    gains = scenario["gains"]
    if not isinstance(gains, dict):
        errors.append("gains must be an object")
    else:
        k = gains.get("k", "auto")
        if not (k == "auto" or (isinstance(k, list) and all(_is_number(x) for x in k))):
            errors.append("gains.k must be a list of numbers or 'auto'")
        for key in ("alpha", "beta", "epsilon", "gamma"):
            if not _is_number_or_auto(gains.get(key, "auto")):
                errors.append(f"Invalid type for gains.{key}: expected number or 'auto'")
        if gains.get("tuning", "manual") not in ("manual", "formula"):
            errors.append("gains.tuning must be 'manual' or 'formula'")

    sim = scenario.get("sim", {})
    if not isinstance(sim, dict):
        errors.append("sim must be an object")
    else:
        for key in ("h", "t_final", "tol"):
            if key in sim and not _is_number(sim[key]):
                errors.append(f"Invalid type for sim.{key}: expected number")
        if "record_stride" in sim and not isinstance(sim["record_stride"], int):
            errors.append("sim.record_stride must be an integer")
        if sim.get("controller", "output") not in ("output", "partial_state"):
            errors.append("sim.controller must be 'output' or 'partial_state'")
        schedule = sim.get("schedule", [])
        if not isinstance(schedule, list):
            errors.append("sim.schedule must be a list")
        else:
            for i, entry in enumerate(schedule):
                if not isinstance(entry, dict) or "t" not in entry or "w" not in entry:
                    errors.append(f"sim.schedule[{i}] needs 't' and 'w'")

    return len(errors) == 0, errors
