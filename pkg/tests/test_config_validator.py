"""
Test cases for configuration validation system.
"""

from core.config_manager import default_config
from utils.config_validator import FACET_IDS, ValidationResult, config_validator


class TestConfigValidator:
    """Test configuration validation functionality."""

    def setup_method(self):
        """Setup test environment."""
        self.config = default_config()

    def test_valid_configuration(self):
        """The defaults validate without errors."""
        result = config_validator.validate_config(self.config)
        assert result.is_valid
        assert len(result.errors) == 0

    def test_missing_required_fields(self):
        """Test validation fails when required fields are missing."""
        result = config_validator.validate_config({})
        assert not result.is_valid

        error_text = " ".join(result.errors)
        assert "workspace" in error_text
        assert "gateway.modelId" in error_text
        assert "generation.facets" in error_text

    def test_invalid_types(self):
        """Booleans do not pass as counts and strings do not pass as numbers."""
        self.config["generation"]["itemsPerFacet"] = True
        self.config["gateway"]["temperature"] = "hot"

        result = config_validator.validate_config(self.config)
        assert not result.is_valid
        assert any("itemsPerFacet" in e and "type" in e for e in result.errors)
        assert any("temperature" in e and "type" in e for e in result.errors)

    def test_ranges(self):
        """Numeric bounds are enforced."""
        self.config["gateway"]["maxAttempts"] = 0
        self.config["report"]["decimalPlaces"] = 1

        result = config_validator.validate_config(self.config)
        assert any("maxAttempts" in e and "less than minimum" in e for e in result.errors)
        assert any("decimalPlaces" in e for e in result.errors)

    def test_model_id_pattern(self):
        """Model identifiers may not contain whitespace."""
        self.config["gateway"]["modelId"] = "gpt 4"
        result = config_validator.validate_config(self.config)
        assert any("gateway.modelId" in e and "does not match pattern" in e for e in result.errors)

        self.config["gateway"]["modelId"] = "org/model-7b:latest"
        assert config_validator.validate_config(self.config).is_valid
        assert config_validator.get_config_schema()["gateway"]["modelId"]["pattern"] == r"^\S+$"

    def test_facets(self):
        """Facets must be known and unique."""
        self.config["generation"]["facets"] = ["compliance", "compliance"]
        result = config_validator.validate_config(self.config)
        assert any("repeat" in e for e in result.errors)

        self.config["generation"]["facets"] = []
        result = config_validator.validate_config(self.config)
        assert any("At least one facet" in e for e in result.errors)

    def test_prompt_specs(self):
        """Prompt spec maps are keyed by known facets."""
        self.config["generation"]["promptSpecs"] = {"anxiety": "a.json"}
        result = config_validator.validate_config(self.config)
        assert any("unknown facet" in e for e in result.errors)

    def test_high_temperature_warns(self):
        """High temperatures are valid but warned about."""
        self.config["gateway"]["temperature"] = 1.8
        result = config_validator.validate_config(self.config)
        assert result.is_valid
        assert any("lose coherence" in w for w in result.warnings)

    def test_mock_and_endpoint_info(self):
        """A mock script next to an endpoint is noted."""
        self.config["gateway"]["mockScript"] = "fixtures/mock_script.yaml"
        result = config_validator.validate_config(self.config)
        assert result.is_valid
        assert any("mock script takes precedence" in i for i in result.info)

    def test_get_value_by_path(self):
        """Dotted paths walk nested mappings."""
        assert config_validator.get_value_by_path(self.config, "inclusion.ageMax") == 60
        assert config_validator.get_value_by_path(self.config, "inclusion.missing") is None
        assert config_validator.get_value_by_path(self.config, "seed.deeper") is None

    def test_schema_lists_every_rule(self):
        """The schema mirrors the rule set."""
        schema = config_validator.get_config_schema()
        assert schema["gateway"]["temperature"]["max_value"] == 2.0
        assert schema["generation"]["promptVersion"]["allowed_values"] == ["v0", "v1", "v2"]
        assert set(FACET_IDS) == {f for f in self.config["generation"]["facets"]}


class TestValidationResult:
    """Test the result container."""

    def test_add_error_invalidates(self):
        """Errors flip validity; warnings and info do not."""
        result = ValidationResult(is_valid=True, errors=[], warnings=[], info=[])
        result.add_warning("w")
        result.add_info("i")
        assert result.is_valid
        result.add_error("e")
        assert not result.is_valid
        assert result.errors == ["e"]
