"""
Scenario validation checks.

Runs the standing assumptions against a scenario config and reports every
finding as a coded message instead of raising:

- GRAPH*: the network must be strongly connected and weight-balanced
- COST*: each local cost must be strongly convex with a Lipschitz gradient
  for its declared constants
- PLANT*: relative degree, sign of the high-frequency gain and minimum
  phase over the parameter box (PLANT004 when the zero finder stalls)
- DIM*, SCHED*: consistency of gains, initial values and the schedule
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..dynamics.plant import check_assumption3, relative_degree
from ..errors import ConvergenceError, NonCoerciveError, RelativeDegreeError
from ..io.config import ScenarioConfig
from ..network.graph import is_strongly_connected, is_weight_balanced, laplacian
from ..optimization.costs import global_minimizer, verify_assumption1
from ..simulation.engine import StateLayout

logger = logging.getLogger(__name__)

ASSUMPTION_GROUPS = (
    ("Costs (convexity)", "COST"),
    ("Graph (balanced)", "GRAPH"),
    ("Plant (min. phase)", "PLANT"),
    ("Consistency", "DIM"),
    ("Schedule", "SCHED"),
)


class Severity(Enum):
    """Validation message severity levels."""
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"


@dataclass
class ValidationMessage:
    """A single validation finding."""
    severity: Severity
    code: str
    message: str
    location: str = ""  # e.g. "costs[2]" or "w=[0.5, -0.5]"

    def __str__(self) -> str:
        prefix = f"[{self.severity.value.upper()}]"
        loc = f" ({self.location})" if self.location else ""
        return f"{prefix} {self.code}{loc} {self.message}"

    def to_dict(self) -> Dict[str, str]:
        return {
            "severity": self.severity.value,
            "code": self.code,
            "message": self.message,
            "location": self.location,
        }


@dataclass
class ValidationResult:
    """Complete validation result for a scenario."""
    is_valid: bool
    messages: List[ValidationMessage] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def errors(self) -> List[ValidationMessage]:
        return [m for m in self.messages if m.severity == Severity.ERROR]

    @property
    def warnings(self) -> List[ValidationMessage]:
        return [m for m in self.messages if m.severity == Severity.WARNING]

    @property
    def info(self) -> List[ValidationMessage]:
        return [m for m in self.messages if m.severity == Severity.INFO]

    def add(self, severity: Severity, code: str, message: str, location: str = "") -> None:
        """Add a validation message."""
        self.messages.append(ValidationMessage(severity, code, message, location))
        if severity == Severity.ERROR:
            self.is_valid = False

    def codes(self) -> List[str]:
        return [m.code for m in self.messages]

    def group_passed(self, prefix: str) -> bool:
        """True if no error-level message carries a code starting with ``prefix``."""
        return not any(m.code.startswith(prefix) for m in self.errors)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "is_valid": self.is_valid,
            "messages": [m.to_dict() for m in self.messages],
            "details": self.details,
        }

    def to_text(self) -> str:
        lines = ["Scenario Analysis", "=" * 40, ""]
        if "lambda2" in self.details:
            lines.append(
                f"Sym(L) spectrum: lambda_2 = {self.details['lambda2']:.6g}, "
                f"lambda_N = {self.details['lambda_n']:.6g}"
            )
        if "relative_degree" in self.details:
            lo, hi = self.details["b1_range"]
            lines.append(f"Relative degree:  {self.details['relative_degree']}  (b1 in [{lo:.6g}, {hi:.6g}])")
        if "y_star" in self.details:
            lines.append(f"Optimum y*:       {self.details['y_star']:.6f}")
        lines.append("")
        for label, prefix in ASSUMPTION_GROUPS:
            lines.append(f"{label:<24} {'PASS' if self.group_passed(prefix) else 'FAIL'}")
        findings = [m for m in self.messages if m.severity != Severity.INFO]
        if findings:
            lines += ["", "Findings:"]
            lines += [f"  {m}" for m in findings]
        lines += ["", f"Verdict: {'PASS' if self.is_valid else 'FAIL'}"]
        return "\n".join(lines)


def validate_scenario(
    cfg: ScenarioConfig,
    interval: Tuple[float, float] = (-20.0, 20.0),
    samples: int = 200,
    grid: Optional[Sequence[np.ndarray]] = None,
) -> ValidationResult:
    """
    Check a scenario against the standing assumptions.

    Args:
        cfg: Scenario to check
        interval: Sampling interval of the convexity check
        samples: Sample count of the convexity check
        grid: Parameter points for the plant sweep (corners plus a 3-per-axis grid by default)

    Returns:
        ValidationResult with all findings
    """
    result = ValidationResult(is_valid=True)

    _validate_graph(cfg, result)
    _validate_costs(cfg, interval, samples, result)
    m = _validate_plant(cfg, grid, result)
    _validate_dimensions(cfg, m, result)
    _validate_schedule(cfg, result)

    logger.info(
        "Validation of %s: %d errors, %d warnings",
        cfg.name, len(result.errors), len(result.warnings),
    )
    return result


def _validate_graph(cfg: ScenarioConfig, result: ValidationResult) -> None:
    graph = cfg.graph
    if not is_strongly_connected(graph):
        result.add(Severity.ERROR, "GRAPH001", "Graph is not strongly connected", "graph")
    if not is_weight_balanced(graph):
        imbalance = graph.weights.sum(axis=1) - graph.weights.sum(axis=0)
        worst = int(np.argmax(np.abs(imbalance)))
        result.add(
            Severity.ERROR, "GRAPH002",
            f"Graph is not weight-balanced (in/out degree gap {imbalance[worst]:+.6g})",
            f"node {worst + 1}",
        )
    spectrum = laplacian(graph)
    result.details["lambda2"] = spectrum.lambda2
    result.details["lambda_n"] = spectrum.lambda_n
    result.add(
        Severity.INFO, "GRAPH003",
        f"Sym(L) eigenvalues {np.round(spectrum.eigenvalues, 9).tolist()}",
        "graph",
    )


def _validate_costs(
    cfg: ScenarioConfig,
    interval: Tuple[float, float],
    samples: int,
    result: ValidationResult,
) -> None:
    for i, f in enumerate(cfg.costs):
        if not verify_assumption1(f, interval, samples):
            result.add(
                Severity.ERROR, "COST001",
                f"{f.family} is not {f.l_lower:g}-strongly convex with "
                f"{f.l_upper:g}-Lipschitz gradient on [{interval[0]:g}, {interval[1]:g}]",
                f"costs[{i}]",
            )
    try:
        result.details["y_star"] = global_minimizer(cfg.costs)
    except NonCoerciveError as e:
        result.add(Severity.ERROR, "COST002", str(e), "costs")


def _validate_plant(
    cfg: ScenarioConfig,
    grid: Optional[Sequence[np.ndarray]],
    result: ValidationResult,
) -> Optional[int]:
    """Returns the nominal relative degree (None if undefined)."""
    nominal = cfg.plant.materialize()
    try:
        m, b1 = relative_degree(nominal.A, nominal.B, nominal.C)
    except RelativeDegreeError as e:
        result.add(Severity.ERROR, "PLANT001", str(e), "w=0")
        return None

    try:
        report = check_assumption3(cfg.plant, grid)
    except ConvergenceError as e:
        result.add(Severity.ERROR, "PLANT004", f"transmission zeros did not converge: {e}", "plant")
        result.details["relative_degree"] = m
        result.details["b1_range"] = [b1, b1]
        return m
    for w, reason in report.violators:
        result.add(Severity.ERROR, "PLANT002", reason, f"w={np.round(w, 6).tolist()}")
    result.details["relative_degree"] = m
    result.details["b1_range"] = list(report.b1_range) if report.samples else [b1, b1]
    result.details["plant_samples"] = len(report.samples) + len(report.violators)
    result.add(
        Severity.INFO, "PLANT003",
        f"relative degree {m} over {result.details['plant_samples']} parameter points",
        "plant",
    )
    return m


def _validate_dimensions(cfg: ScenarioConfig, m: Optional[int], result: ValidationResult) -> None:
    if m is None:
        return
    if cfg.gains.k is not None and len(cfg.gains.k) != m:
        result.add(
            Severity.ERROR, "DIM001",
            f"k has {len(cfg.gains.k)} entries but the plant has relative degree {m}",
            "gains.k",
        )
    n_obs = m if m >= 2 else 0
    layout = StateLayout(cfg.n_agents, cfg.plant.n, n_obs)
    try:
        cfg.sim.initial.resolve(layout, cfg.plant.materialize(), cfg.sim.seed)
    except ValueError as e:
        result.add(Severity.ERROR, "DIM002", f"initial conditions: {e}", "sim.initial")


def _validate_schedule(cfg: ScenarioConfig, result: ValidationResult) -> None:
    schedule = cfg.sim.schedule
    if schedule is None:
        return
    if schedule.values.shape[1] != cfg.plant.n_w:
        result.add(
            Severity.ERROR, "SCHED001",
            f"schedule vectors have {schedule.values.shape[1]} entries, plant has {cfg.plant.n_w} parameters",
            "sim.schedule",
        )
        return
    for t, w in zip(schedule.times, schedule.values):
        if not cfg.plant.box.contains(w):
            result.add(
                Severity.WARNING, "SCHED002",
                f"w = {w.tolist()} lies outside the parameter box",
                f"t={t:g}",
            )
        if t >= cfg.sim.t_final:
            result.add(
                Severity.WARNING, "SCHED003",
                f"switch at t = {t:g} is past the horizon {cfg.sim.t_final:g}",
                f"t={t:g}",
            )
