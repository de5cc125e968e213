"""IO module: versioned scenario configs, result export and built-in presets."""

from .schema import SCHEMA_VERSION, validate_schema, check_version_compatibility
from .config import (
    ScenarioConfig,
    config_from_document,
    config_to_document,
    load_config,
    dump_config,
)
from .export import (
    export_trajectory_csv,
    import_trajectory_csv,
    export_report_json,
    export_text,
)
from .presets import PRESETS, get_preset, example1, example2

__all__ = [
    "SCHEMA_VERSION",
    "validate_schema",
    "check_version_compatibility",
    "ScenarioConfig",
    "config_from_document",
    "config_to_document",
    "load_config",
    "dump_config",
    "export_trajectory_csv",
    "import_trajectory_csv",
    "export_report_json",
    "export_text",
    "PRESETS",
    "get_preset",
    "example1",
    "example2",
]
