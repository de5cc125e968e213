"""
PNG figures of a recorded run: optimal-solution estimates z_i(t), outputs
y_i(t) and control efforts u_i(t), with dashed markers at parameter switches.

Uses the object-oriented Figure API on an Agg canvas so no display or GUI
backend is needed.
"""

import logging
from pathlib import Path
from typing import List, Optional

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from ..simulation.engine import Trajectory

logger = logging.getLogger(__name__)

AGENT_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

FIGURES = (
    ("estimates", "z", "Estimates of the optimal solution", "z_i"),
    ("outputs", "y", "Agent outputs", "y_i"),
    ("controls", "u", "Control efforts", "u_i"),
)


def apply_layout_to_figure(fig: Figure) -> None:
    """Apply layout in a version-compatible way."""
    try:
        fig.set_layout_engine("constrained")
        return
    except AttributeError:
        pass
    try:
        fig.tight_layout()
    except ValueError:
        fig.subplots_adjust(left=0.1, right=0.97, top=0.9, bottom=0.12)


def _series_figure(
    traj: Trajectory,
    series: np.ndarray,
    title: str,
    ylabel: str,
    y_star: Optional[float],
) -> Figure:
    fig = Figure(figsize=(6, 4), dpi=100)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(111)
    for i in range(series.shape[1]):
        ax.plot(
            traj.times,
            series[:, i],
            color=AGENT_COLORS[i % len(AGENT_COLORS)],
            linewidth=1.2,
            label=f"agent {i + 1}",
        )
    if y_star is not None:
        ax.axhline(y_star, color="black", linestyle=":", linewidth=1, label="y*")

    schedule = traj.schedule
    if schedule is not None:
        for t_switch in schedule.times[1:]:
            if t_switch <= traj.times[-1]:
                ax.axvline(t_switch, color="gray", linestyle="--", linewidth=1)

    ax.set_xlabel("t (s)")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, linestyle="-", linewidth=0.5, alpha=0.5)
    ax.legend(loc="best", fontsize=8)
    apply_layout_to_figure(fig)
    return fig


def export_run_figures(
    traj: Trajectory,
    out_dir: Path,
    y_star: Optional[float] = None,
) -> List[Path]:
    """
    Write estimates.png, outputs.png and controls.png into ``out_dir``.

    Returns:
        Paths of the written files
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for stem, attr, title, ylabel in FIGURES:
        reference = y_star if attr in ("z", "y") else None
        fig = _series_figure(traj, getattr(traj, attr), title, ylabel, reference)
        path = out_dir / f"{stem}.png"
        fig.savefig(path)
        written.append(path)
    logger.info("Wrote figures %s", [p.name for p in written])
    return written
