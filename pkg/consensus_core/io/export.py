"""
Export and re-import of simulation results.

Trajectory CSV: header ``t, y1..yN, u1..uN, z1..zN``, one row per recorded
instant, every value written with 17 significant digits so a re-read
reproduces the recorded doubles exactly. Reports go to JSON (versioned like
configs) and to plain text.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .. import __version__ as CORE_VERSION
from ..errors import ConfigError
from ..simulation.engine import Trajectory
from .schema import SCHEMA_VERSION

logger = logging.getLogger(__name__)

CSV_FORMAT = ".17g"


def trajectory_header(n_agents: int) -> List[str]:
    """Column names t, y1..yN, u1..uN, z1..zN."""
    header = ["t"]
    for series in ("y", "u", "z"):
        header += [f"{series}{i}" for i in range(1, n_agents + 1)]
    return header


def export_trajectory_csv(traj: Trajectory, path: Path) -> None:
    """
    Write the recorded outputs, controls and estimates to CSV.

    Args:
        traj: Recorded run
        path: Output file path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(trajectory_header(traj.n_agents))
        for i in range(len(traj)):
            row = np.concatenate([[traj.times[i]], traj.y[i], traj.u[i], traj.z[i]])
            writer.writerow([format(float(value), CSV_FORMAT) for value in row])
    logger.info("Wrote %d rows to %s", len(traj), path)


def import_trajectory_csv(path: Path, meta: Optional[Dict[str, Any]] = None) -> Trajectory:
    """
    Read a trajectory CSV written by ``export_trajectory_csv``.

    Only t, y, u and z are stored; v and xi0 come back as NaN and the plant
    and observer states as empty arrays.

    Raises:
        ConfigError: On a missing or malformed file; carries the 1-based
            line number of the first bad row
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Trajectory file not found: {path}")

    with open(path, "r", newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))

    if not rows:
        raise ConfigError("empty trajectory file", line=1)
    header = [name.strip() for name in rows[0]]
    if len(header) < 4 or (len(header) - 1) % 3 != 0:
        raise ConfigError(f"unexpected header with {len(header)} columns", line=1)
    n_agents = (len(header) - 1) // 3
    if header != trajectory_header(n_agents):
        raise ConfigError("header must read t, y1..yN, u1..uN, z1..zN", line=1)

    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ConfigError(f"expected {len(header)} values, found {len(row)}", line=lineno)
        try:
            values.append([float(cell) for cell in row])
        except ValueError as e:
            raise ConfigError(f"non-numeric value: {e}", line=lineno) from e
        if len(values) > 1 and values[-1][0] <= values[-2][0]:
            raise ConfigError("time column must be strictly increasing", line=lineno)
    if not values:
        raise ConfigError("trajectory file has no data rows", line=2)

    data = np.array(values)
    n_rows = data.shape[0]
    y = data[:, 1:1 + n_agents]
    return Trajectory(
        times=data[:, 0],
        y=y,
        u=data[:, 1 + n_agents:1 + 2 * n_agents],
        z=data[:, 1 + 2 * n_agents:],
        v=np.full_like(y, np.nan),
        xi0=np.full_like(y, np.nan),
        x=np.zeros((n_rows, n_agents, 0)),
        chi=np.zeros((n_rows, n_agents, 0)),
        meta=dict(meta or {}, source=str(path)),
    )


def export_report_json(
    payload: Dict[str, Any],
    path: Path,
    app_version: Optional[str] = None,
    indent: int = 2,
) -> None:
    """
    Write a report payload (convergence, certificate, analysis) to JSON.

    The payload is wrapped with the schema and app versions for traceability.
    """
    if app_version is None:
        app_version = CORE_VERSION
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(
            {"schema_version": SCHEMA_VERSION, "app_version": app_version, **payload},
            f,
            indent=indent,
        )


def export_text(text: str, path: Path) -> None:
    """Write a human-readable summary."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text if text.endswith("\n") else text + "\n")
