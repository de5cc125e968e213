"""
Tests for schema validation.
"""

import pytest

from consensus_core.io.config import config_to_document
from consensus_core.io.schema import (
    SCHEMA_VERSION, VersionInfo, VersionCompatibility,
    check_version_compatibility, validate_schema
)


def minimal_document():
    return {
        "schema_version": "0.1.0",
        "app_version": "0.1.0",
        "scenario": {
            "graph": {"n": 2, "edges": [{"from": 1, "to": 2}, {"from": 2, "to": 1}]},
            "plant": {"A0": [[-1.0]], "B0": [1.0], "C0": [1.0]},
            "costs": [{"family": "quadratic", "target": 1.0}, {"family": "quadratic", "target": 3.0}],
            "gains": {"k": [1.0], "alpha": 1, "beta": 2, "epsilon": 1, "gamma": "auto"},
        },
    }


class TestVersionInfo:
    """Test VersionInfo parsing."""

    def test_parse_valid(self):
        v = VersionInfo.parse("1.2.3")
        assert (v.major, v.minor, v.patch) == (1, 2, 3)

    def test_parse_invalid(self):
        with pytest.raises(ValueError):
            VersionInfo.parse("invalid")

    def test_str(self):
        assert str(VersionInfo(1, 2, 3)) == "1.2.3"


class TestVersionCompatibility:
    """Test version compatibility checking."""

    def test_same_version_compatible(self):
        compat, _ = check_version_compatibility(SCHEMA_VERSION, SCHEMA_VERSION)
        assert compat == VersionCompatibility.COMPATIBLE

    def test_older_minor_compatible(self):
        compat, _ = check_version_compatibility("0.0.5", "0.1.0")
        assert compat == VersionCompatibility.COMPATIBLE

    def test_newer_minor_warns(self):
        compat, _ = check_version_compatibility("0.2.0", "0.1.0")
        assert compat == VersionCompatibility.WARN_NEWER_MINOR

    def test_different_major_rejects(self):
        compat, _ = check_version_compatibility("1.0.0", "0.1.0")
        assert compat == VersionCompatibility.REJECT_MAJOR

    def test_invalid_version_rejects(self):
        compat, _ = check_version_compatibility("invalid", "0.1.0")
        assert compat == VersionCompatibility.REJECT_MAJOR


class TestSchemaValidation:
    """Test schema structure validation."""

    def test_valid_minimal(self):
        is_valid, errors = validate_schema(minimal_document())
        assert is_valid, f"Unexpected errors: {errors}"

    def test_presets_are_valid(self, example1_cfg, example2_cfg):
        for cfg in (example1_cfg, example2_cfg):
            is_valid, errors = validate_schema(config_to_document(cfg))
            assert is_valid, f"Unexpected errors: {errors}"

    def test_root_must_be_object(self):
        is_valid, errors = validate_schema([1, 2])
        assert not is_valid

    def test_missing_schema_version(self):
        data = minimal_document()
        del data["schema_version"]
        is_valid, errors = validate_schema(data)
        assert not is_valid
        assert any("schema_version" in e for e in errors)

    def test_missing_scenario_section(self):
        data = minimal_document()
        del data["scenario"]["costs"]
        is_valid, errors = validate_schema(data)
        assert not is_valid
        assert any("costs" in e for e in errors)

    def test_edge_needs_endpoints(self):
        data = minimal_document()
        data["scenario"]["graph"]["edges"].append({"from": 1})
        is_valid, errors = validate_schema(data)
        assert not is_valid
        assert any("graph.edges[2]" in e for e in errors)

    def test_cost_count_matches_graph(self):
        data = minimal_document()
        data["scenario"]["costs"].pop()
        is_valid, errors = validate_schema(data)
        assert not is_valid
        assert any("graph.n = 2" in e for e in errors)

    def test_gain_types(self):
        data = minimal_document()
        data["scenario"]["gains"]["epsilon"] = "large"
        data["scenario"]["gains"]["k"] = "fast"
        is_valid, errors = validate_schema(data)
        assert not is_valid
        assert any("gains.epsilon" in e for e in errors)
        assert any("gains.k" in e for e in errors)

    def test_boolean_is_not_a_number(self):
        data = minimal_document()
        data["scenario"]["gains"]["alpha"] = True
        is_valid, _ = validate_schema(data)
        assert not is_valid

    def test_sim_section(self):
        data = minimal_document()
        data["scenario"]["sim"] = {"h": "small", "controller": "state", "schedule": [{"t": 0}]}
        is_valid, errors = validate_schema(data)
        assert not is_valid
        assert len(errors) == 3

    def test_incompatible_major_version(self):
        data = minimal_document()
        data["schema_version"] = "99.0.0"
        is_valid, errors = validate_schema(data)
        assert not is_valid
        assert any("major" in e for e in errors)
