"""
Convergence summary of a recorded run.

A run is settled when max_i |y_i - y*| <= tol from some recorded instant on
until the end; with a parameter schedule the same test is applied inside
every phase, and the run counts as settled only if every phase settles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .engine import ParameterSchedule, Trajectory


def _sustained_settle_time(
    times: NDArray[np.float64],
    errors: NDArray[np.float64],
    tol: float,
) -> Optional[float]:
    """First recorded t after which every error stays <= tol (None if never)."""
    if errors.size == 0 or errors[-1] > tol:
        return None
    outside = np.flatnonzero(errors > tol)
    if outside.size == 0:
        return float(times[0])
    return float(times[outside[-1] + 1])


@dataclass
class PhaseStats:
    """Per-phase figures of a scheduled run."""

    index: int
    t_start: float
    t_end: float
    w: List[float]
    final_error: float
    settled: bool
    settle_time: Optional[float]
    max_abs_u: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "w": self.w,
            "final_error": self.final_error,
            "settled": self.settled,
            "settle_time": self.settle_time,
            "max_abs_u": self.max_abs_u,
        }


@dataclass
class ConvergenceReport:
    """
    Distance-to-optimum summary.

    Attributes:
        y_star: Oracle optimum the outputs are compared against
        tol: Settling band
        final_error: max_i |y_i(t_end) - y*| at the last recorded instant
        settled: True iff the whole run and every phase settle
        settle_time: Sustained settle time over the whole run (None if not settled)
        max_abs_u: Peak |u_i| over the run
        final_u: u_i at the last recorded instant
        phases: Per-phase statistics (one entry for an unscheduled run)
    """

    y_star: float
    tol: float
    t_end: float
    final_error: float
    settled: bool
    settle_time: Optional[float]
    max_abs_u: float
    final_u: List[float] = field(default_factory=list)
    phases: List[PhaseStats] = field(default_factory=list)
    diverged: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "y_star": self.y_star,
            "tol": self.tol,
            "t_end": self.t_end,
            "final_error": self.final_error,
            "settled": self.settled,
            "settle_time": self.settle_time,
            "max_abs_u": self.max_abs_u,
            "final_u": self.final_u,
            "diverged": self.diverged,
            "phases": [p.to_dict() for p in self.phases],
        }

    def to_text(self) -> str:
        settle = f"{self.settle_time:.3f} s" if self.settle_time is not None else "not settled"
        lines = [
            "Convergence Report",
            "=" * 40,
            "",
            f"Optimum y*:        {self.y_star:.6f}",
            f"Tolerance:         {self.tol:g}",
            f"Final time:        {self.t_end:.3f} s",
            f"Final max error:   {self.final_error:.3e}",
            f"Settle time:       {settle}",
            f"Max |u|:           {self.max_abs_u:.4f}",
            f"Final u:           {', '.join(f'{u:.4f}' for u in self.final_u)}",
        ]
        if self.diverged:
            lines.append("Run DIVERGED before the horizon")
        if len(self.phases) > 1:
            lines += ["", "Phases:"]
            for p in self.phases:
                ps = f"{p.settle_time:.3f} s" if p.settle_time is not None else "not settled"
                lines.append(
                    f"  [{p.index}] t in [{p.t_start:g}, {p.t_end:g}]  w = {p.w}  "
                    f"final error {p.final_error:.3e}  settle {ps}  max |u| {p.max_abs_u:.4f}"
                )
        lines += ["", f"Verdict: {'SETTLED' if self.settled else 'NOT SETTLED'}"]
        return "\n".join(lines)


def convergence_report(
    traj: Trajectory,
    y_star: float,
    tol: float,
    schedule: Optional[ParameterSchedule] = None,
    diverged: bool = False,
) -> ConvergenceReport:
    """
    Final error, sustained settle times (overall and per phase) and peak |u|.

    ``schedule`` defaults to the one stored in the trajectory metadata.
    """
    if len(traj) == 0:
        raise ValueError("trajectory is empty")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    times = traj.times
    errors = np.max(np.abs(traj.y - y_star), axis=1)
    abs_u = np.max(np.abs(traj.u), axis=1)
    t_end = float(times[-1])

    schedule = schedule or traj.schedule
    bounds: Sequence = schedule.phases(t_end) if schedule is not None and t_end > 0 else []
    if not bounds:
        bounds = [(float(times[0]), t_end, np.zeros(0))]

    phases = []
    for index, (t_start, t_stop, w) in enumerate(bounds):
        last = index == len(bounds) - 1
        mask = (times >= t_start) & ((times <= t_stop) if last else (times < t_stop))
        if not np.any(mask):
            continue
        settle = _sustained_settle_time(times[mask], errors[mask], tol)
        phases.append(
            PhaseStats(
                index=index,
                t_start=float(t_start),
                t_end=float(t_stop),
                w=[float(x) for x in w],
                final_error=float(errors[mask][-1]),
                settled=settle is not None,
                settle_time=settle,
                max_abs_u=float(np.max(abs_u[mask])),
            )
        )

    overall = _sustained_settle_time(times, errors, tol)
    settled = overall is not None and all(p.settled for p in phases) and not diverged
    return ConvergenceReport(
        y_star=float(y_star),
        tol=float(tol),
        t_end=t_end,
        final_error=float(errors[-1]),
        settled=settled,
        settle_time=overall if settled else None,
        max_abs_u=float(np.max(abs_u)),
        final_u=[float(u) for u in traj.u[-1]],
        phases=phases,
        diverged=diverged,
    )
