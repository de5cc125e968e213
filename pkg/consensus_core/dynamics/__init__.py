"""Agent plant models and per-agent control laws."""

from .plant import (
    ParameterBox,
    PlantMatrices,
    AffinePlant,
    PlantAnalysis,
    Assumption3Report,
    NormalForm,
    relative_degree,
    transmission_zeros,
    analyze,
    check_assumption3,
    normal_form,
)
from .controller import (
    Gains,
    ControllerState,
    control_output,
    observer_rhs,
    integral_rhs,
    partial_state_control,
    initial_controller_state,
)

__all__ = [
    "ParameterBox",
    "PlantMatrices",
    "AffinePlant",
    "PlantAnalysis",
    "Assumption3Report",
    "NormalForm",
    "relative_degree",
    "transmission_zeros",
    "analyze",
    "check_assumption3",
    "normal_form",
    "Gains",
    "ControllerState",
    "control_output",
    "observer_rhs",
    "integral_rhs",
    "partial_state_control",
    "initial_controller_state",
]
