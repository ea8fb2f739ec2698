"""
Configuration validation utilities for SJT Forge.
Provides declarative run-configuration validation with detailed error reporting.
"""

import logging
import re
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union
from urllib.parse import urlparse

FACET_IDS = ["self_consciousness", "gregariousness", "openness_to_ideas", "compliance", "self_discipline"]
PROMPT_VERSIONS = ["v0", "v1", "v2"]
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


@dataclass
class ValidationResult:
    """Result of a configuration validation."""

    is_valid: bool
    errors: List[str]
    warnings: List[str]
    info: List[str]

    def add_error(self, message: str):
        """Add an error message."""
        self.errors.append(message)
        self.is_valid = False

    def add_warning(self, message: str):
        """Add a warning message."""
        self.warnings.append(message)

    def add_info(self, message: str):
        """Add an info message."""
        self.info.append(message)


@dataclass
class ValidationRule:
    """Configuration validation rule."""

    key_path: str
    required: bool = True
    data_type: Union[type, tuple] = str
    min_value: Optional[Union[int, float]] = None
    max_value: Optional[Union[int, float]] = None
    min_length: Optional[int] = None
    allowed_values: Optional[List[Any]] = None
    pattern: Optional[str] = None
    custom_validator: Optional[callable] = None
    error_message: Optional[str] = None


class ConfigValidator:
    """Run-configuration validation system."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)
        self.rules: Dict[str, ValidationRule] = {}
        self._setup_validation_rules()

    def _rule(self, key_path: str, data_type: Union[type, tuple] = str, required: bool = False, **kwargs):
        self.rules[key_path] = ValidationRule(key_path=key_path, required=required, data_type=data_type, **kwargs)

    def _setup_validation_rules(self):
        """Rules keyed by dotted camelCase path, in file order."""
        number = (int, float)

        self._rule(
            "logLevel",
            custom_validator=self._validate_log_level,
            error_message=f"logLevel must be one of: {', '.join(LOG_LEVELS)}",
        )
        self._rule("seed", int, min_value=0, error_message="seed must be a non-negative integer")
        self._rule("workspace", required=True, min_length=1, error_message="workspace must name an output directory")

        # Gateway
        self._rule(
            "gateway.modelId",
            required=True,
            min_length=1,
            pattern=r"^\S+$",
            error_message="gateway.modelId must be a model identifier without whitespace",
        )
        self._rule(
            "gateway.temperature",
            number,
            required=True,
            min_value=0.0,
            max_value=2.0,
            error_message="gateway.temperature must be between 0.0 and 2.0",
        )
        self._rule("gateway.maxAttempts", int, required=True, min_value=1, max_value=20)
        self._rule("gateway.requestTimeout", number, min_value=1, max_value=600)
        self._rule(
            "gateway.endpointUrl",
            custom_validator=self._validate_url,
            error_message="gateway.endpointUrl must be an http(s) URL",
        )
        self._rule("gateway.maxInFlight", int, min_value=1, max_value=64)
        self._rule("gateway.mockScript", min_length=1)

        # Generation
        self._rule(
            "generation.promptVersion",
            required=True,
            allowed_values=PROMPT_VERSIONS,
            error_message="generation.promptVersion must be one of: v0, v1, v2",
        )
        self._rule("generation.facets", list, required=True, custom_validator=self._validate_facets)
        self._rule("generation.itemsPerFacet", int, required=True, min_value=1, max_value=50)
        self._rule("generation.maxRounds", int, min_value=1, max_value=20)
        self._rule("generation.delimiter", min_length=1)
        self._rule("generation.questionSentinel", min_length=1)
        self._rule("generation.shuffleOptions", bool)
        self._rule("generation.promptSpecs", dict, custom_validator=self._validate_prompt_specs)

        # Input files; existence is checked when a subcommand needs them
        for key in ("bank", "ratings", "groups", "responses", "meta", "simConfig"):
            self._rule(f"files.{key}", min_length=1)

        # Inclusion criteria
        self._rule("inclusion.ageMin", int, min_value=0, max_value=120)
        self._rule("inclusion.ageMax", int, min_value=0, max_value=120)
        self._rule("inclusion.requireAttention", bool)
        self._rule("inclusion.minMeanRtMs", number, min_value=0)

        # Report
        self._rule("report.decimalPlaces", int, required=True, min_value=2, max_value=10)
        self._rule("report.pDecimalPlaces", int, required=True, min_value=2, max_value=10)
        self._rule(
            "report.starLevels",
            list,
            custom_validator=self._validate_star_levels,
            error_message="report.starLevels must be strictly decreasing probabilities in (0, 1)",
        )

    def _validate_log_level(self, value: str) -> Tuple[bool, str]:
        if value.upper() not in LOG_LEVELS:
            return False, f"Unknown log level: {value}"
        return True, ""

    def _validate_url(self, value: str) -> Tuple[bool, str]:
        parsed = urlparse(value)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            return False, f"Invalid endpoint URL: {value}"
        return True, ""

    def _validate_facets(self, value: List[str]) -> Tuple[bool, str]:
        """Validate facet list."""
        if not value:
            return False, "At least one facet must be configured"
        for facet in value:
            if facet not in FACET_IDS:
                return False, f"Invalid facet: {facet}. Must be one of: {FACET_IDS}"
        if len(set(value)) != len(value):
            return False, "Facets must not repeat"
        return True, ""

    def _validate_prompt_specs(self, value: Dict[str, Any]) -> Tuple[bool, str]:
        for facet, path in value.items():
            if facet not in FACET_IDS:
                return False, f"Prompt spec given for unknown facet: {facet}"
            if not isinstance(path, str) or not path.strip():
                return False, f"Prompt spec path for {facet} must be a non-empty string"
        return True, ""

    def _validate_star_levels(self, value: List[Any]) -> Tuple[bool, str]:
        if not value:
            return False, "At least one star level is required"
        for level in value:
            if not isinstance(level, (int, float)) or not 0 < level < 1:
                return False, f"Star level out of range: {level}"
        if any(b >= a for a, b in zip(value, value[1:])):
            return False, "Star levels must be strictly decreasing"
        return True, ""

    def get_value_by_path(self, config: Dict[str, Any], key_path: str) -> Any:
        """Get value from config by dot notation path."""
        keys = key_path.split(".")
        value = config

        for key in keys:
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return None

        return value

    def validate_type(self, value: Any, expected_type: Union[type, tuple]) -> bool:
        """Validate value type."""
        # bool is an int subclass; a YAML "true" must not pass as a count
        if isinstance(value, bool) and expected_type is not bool:
            if isinstance(expected_type, tuple):
                return bool in expected_type
            return False
        if isinstance(expected_type, tuple):
            return isinstance(value, expected_type)
        if expected_type is float:
            return isinstance(value, (int, float))
        return isinstance(value, expected_type)

    def validate_range(
        self,
        value: Union[int, float],
        min_val: Optional[Union[int, float]],
        max_val: Optional[Union[int, float]],
    ) -> Tuple[bool, str]:
        """Validate numeric range."""
        if min_val is not None and value < min_val:
            return False, f"Value {value} is less than minimum {min_val}"

        if max_val is not None and value > max_val:
            return False, f"Value {value} is greater than maximum {max_val}"

        return True, ""

    def validate_pattern(self, value: str, pattern: str) -> Tuple[bool, str]:
        """Validate string pattern."""
        if not re.match(pattern, value):
            return False, f"Value '{value}' does not match pattern '{pattern}'"
        return True, ""

    def validate_config(self, config: Dict[str, Any]) -> ValidationResult:
        """Validate entire configuration."""
        result = ValidationResult(is_valid=True, errors=[], warnings=[], info=[])

        for key_path, rule in self.rules.items():
            value = self.get_value_by_path(config, key_path)

            if rule.required and value is None:
                error_msg = rule.error_message or f"Required field '{key_path}' is missing"
                result.add_error(f"Required field '{key_path}' is missing: {error_msg}")
                continue

            if not rule.required and value is None:
                continue

            if not self.validate_type(value, rule.data_type):
                expected_type = rule.data_type.__name__ if isinstance(rule.data_type, type) else str(rule.data_type)
                actual_type = type(value).__name__
                result.add_error(f"Field '{key_path}' must be of type {expected_type}, got {actual_type}")
                continue

            if (
                isinstance(value, (int, float))
                and not isinstance(value, bool)
                and (rule.min_value is not None or rule.max_value is not None)
            ):
                is_valid, msg = self.validate_range(value, rule.min_value, rule.max_value)
                if not is_valid:
                    result.add_error(f"Field '{key_path}': {msg}")

            if rule.allowed_values is not None and value not in rule.allowed_values:
                error_msg = rule.error_message or f"Field '{key_path}' must be one of: {rule.allowed_values}"
                result.add_error(error_msg)

            if rule.pattern is not None and isinstance(value, str):
                is_valid, msg = self.validate_pattern(value, rule.pattern)
                if not is_valid:
                    result.add_error(f"Field '{key_path}': {msg}")

            if rule.min_length is not None and isinstance(value, str):
                if len(value.strip()) < rule.min_length:
                    result.add_error(f"Field '{key_path}' must be at least {rule.min_length} characters long")

            if rule.custom_validator is not None:
                is_valid, msg = rule.custom_validator(value)
                if not is_valid:
                    result.add_error(f"Field '{key_path}': {msg}")

        self._validate_cross_fields(config, result)

        if result.errors:
            self.logger.error(f"Configuration validation failed with {len(result.errors)} errors")
            for error in result.errors:
                self.logger.error(f"  - {error}")

        if result.warnings:
            self.logger.warning(f"Configuration validation has {len(result.warnings)} warnings")
            for warning in result.warnings:
                self.logger.warning(f"  - {warning}")

        if result.info:
            self.logger.info(f"Configuration validation info: {len(result.info)} items")
            for info in result.info:
                self.logger.info(f"  - {info}")

        return result

    def _validate_cross_fields(self, config: Dict[str, Any], result: ValidationResult):
        """Validate cross-field dependencies."""

        age_min = self.get_value_by_path(config, "inclusion.ageMin")
        age_max = self.get_value_by_path(config, "inclusion.ageMax")
        if isinstance(age_min, int) and isinstance(age_max, int) and age_min > age_max:
            result.add_error("inclusion.ageMin must not exceed inclusion.ageMax")

        temperature = self.get_value_by_path(config, "gateway.temperature")
        if isinstance(temperature, (int, float)) and temperature >= 1.5:
            result.add_warning(f"gateway.temperature {temperature} is high; completions tend to lose coherence")

        mock_script = self.get_value_by_path(config, "gateway.mockScript")
        endpoint = self.get_value_by_path(config, "gateway.endpointUrl")
        if mock_script and endpoint:
            result.add_info("Both mockScript and endpointUrl are set; the mock script takes precedence")

    def get_config_schema(self) -> Dict[str, Any]:
        """Get configuration schema for documentation."""
        schema: Dict[str, Any] = {}

        for key_path, rule in self.rules.items():
            keys = key_path.split(".")
            current = schema

            for key in keys[:-1]:
                if key not in current:
                    current[key] = {}
                current = current[key]

            current[keys[-1]] = {
                "required": rule.required,
                "type": rule.data_type.__name__ if isinstance(rule.data_type, type) else str(rule.data_type),
                "description": rule.error_message or f"Configuration for {key_path}",
                "allowed_values": rule.allowed_values,
                "min_value": rule.min_value,
                "max_value": rule.max_value,
                "pattern": rule.pattern,
            }

        return schema


# Global validator instance
config_validator = ConfigValidator()
