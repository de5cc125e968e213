"""Validation module: standing-assumption checks of a scenario."""

from .checks import Severity, ValidationMessage, ValidationResult, validate_scenario

__all__ = [
    "Severity",
    "ValidationMessage",
    "ValidationResult",
    "validate_scenario",
]
