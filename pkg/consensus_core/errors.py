"""Domain exceptions raised by the core library."""

from __future__ import annotations

from typing import Any, Optional, Sequence


class ConsensusError(Exception):
    """Base class for all domain errors of the library."""


class ConvergenceError(ConsensusError):
    """An iterative numerical kernel stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NotHurwitzError(ConsensusError):
    """A matrix or polynomial expected to be Hurwitz is not."""


class RelativeDegreeError(ConsensusError):
    """The plant has no well-defined relative degree at the analysed point."""


class NonCoerciveError(ConsensusError):
    """The aggregate gradient shows no sign change (costs not coercive)."""


class GraphError(ConsensusError):
    """The network does not support the requested operation."""


class AssumptionError(ConsensusError):
    """A standing assumption fails where it is a precondition."""


class TuningError(ConsensusError):
    """No admissible gain was found."""

    def __init__(self, message: str, margins: Optional[Sequence[tuple[float, float]]] = None):
        super().__init__(message)
        self.margins = list(margins or [])


class SimulationDivergedError(ConsensusError):
    """The closed loop left the admissible state region."""

    def __init__(self, message: str, time: float, last_state: Any, trajectory: Any = None):
        super().__init__(message)
        self.time = time
        self.last_state = last_state
        self.trajectory = trajectory


class ConfigError(ConsensusError):
    """A scenario config or trajectory file cannot be used."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
