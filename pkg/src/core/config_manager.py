"""
Run configuration: YAML on disk, normalized, validated and frozen into RunConfig.
"""

import copy
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from core.items import DEFAULT_SENTINEL, Facet
from core.prompts import DEFAULT_DELIMITER, PromptSpec, default_prompt_spec, load_prompt_spec
from core.psychometrics import InclusionCriteria
from gateways.base import DEFAULT_ENDPOINT_URL, DEFAULT_MODEL_ID, GenParams
from stats.correlation import DEFAULT_STAR_LEVELS
from utils.config_io import CONFIG_PATH, config_hash, read_config, write_config
from utils.config_validator import FACET_IDS, ValidationRule, config_validator
from utils.error_handler import ConfigError

logger = logging.getLogger(__name__)

FILE_KEYS = ("bank", "ratings", "groups", "responses", "meta", "simConfig")


def default_config() -> Dict[str, Any]:
    """Settings used when no configuration file exists."""
    return {
        "logLevel": "INFO",
        "seed": 0,
        "workspace": "runs",
        "gateway": {
            "modelId": DEFAULT_MODEL_ID,
            "temperature": 1.0,
            "maxAttempts": 3,
            "requestTimeout": 60,
            "endpointUrl": DEFAULT_ENDPOINT_URL,
            "maxInFlight": 4,
            "mockScript": None,
        },
        "generation": {
            "promptVersion": "v2",
            "facets": list(FACET_IDS),
            "itemsPerFacet": 8,
            "maxRounds": 3,
            "delimiter": DEFAULT_DELIMITER,
            "questionSentinel": DEFAULT_SENTINEL,
            "shuffleOptions": False,
            "promptSpecs": {},
        },
        "files": {key: None for key in FILE_KEYS},
        "inclusion": {
            "ageMin": 18,
            "ageMax": 60,
            "requireAttention": True,
            "minMeanRtMs": 2000,
        },
        "report": {
            "decimalPlaces": 2,
            "pDecimalPlaces": 3,
            "starLevels": list(DEFAULT_STAR_LEVELS),
        },
    }


@dataclass(frozen=True)
class GatewaySettings:
    params: GenParams
    mock_script: Optional[Path] = None


@dataclass(frozen=True)
class GenerationSettings:
    prompt_version: str
    facets: Tuple[Facet, ...]
    items_per_facet: int
    max_rounds: int
    delimiter: str
    question_sentinel: str
    shuffle_options: bool
    prompt_specs: Dict[Facet, Path] = field(default_factory=dict)


@dataclass(frozen=True)
class ReportSettings:
    decimal_places: int = 2
    p_decimal_places: int = 3
    star_levels: Tuple[float, ...] = DEFAULT_STAR_LEVELS


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings of one run. ``raw`` is the normalized mapping the manifest hashes."""

    workspace: Path
    log_level: str
    seed: int
    gateway: GatewaySettings
    generation: GenerationSettings
    files: Dict[str, Optional[Path]]
    inclusion: InclusionCriteria
    report: ReportSettings
    raw: Dict[str, Any] = field(default_factory=dict, compare=False)
    source: Optional[Path] = None

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def require_file(self, key: str) -> Path:
        """Path of a configured input file; ConfigError when unset or absent."""
        if key not in self.files:
            raise ConfigError(f"Unknown file key '{key}'; expected one of {list(FILE_KEYS)}")
        path = self.files[key]
        if path is None:
            raise ConfigError(f"files.{key} is not configured")
        if not path.is_file():
            raise ConfigError(f"files.{key} points to a missing file: {path}")
        return path

    def prompt_spec_for(self, facet: Facet, version: Optional[str] = None, target: Optional[int] = None) -> PromptSpec:
        """The facet's prompt spec file when configured for this version, else the catalogue default."""
        version = version or self.generation.prompt_version
        target = target or self.generation.items_per_facet
        path = self.generation.prompt_specs.get(facet)
        spec = None
        if path is not None:
            if not path.is_file():
                raise ConfigError(f"Prompt spec for {facet.value} not found: {path}")
            spec = load_prompt_spec(path)
            if spec.version != version:
                logger.info(f"{path} is a {spec.version} spec; using the catalogue {version} spec for {facet.value}")
                spec = None
        if spec is None:
            spec = default_prompt_spec(facet, version, target=target)
        return replace(
            spec,
            delimiter=self.generation.delimiter,
            question_sentinel=self.generation.question_sentinel,
        )

    def save(self, path: Path) -> None:
        write_config(self.raw, path=path)


class ConfigManager:
    """Loads a run configuration file and resolves it against overrides."""

    def __init__(self, config_path: Path = CONFIG_PATH):
        self._config_path = Path(config_path)
        self.logger = logging.getLogger(__name__)

    def load(self, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
        raw = self._load_from_disk()
        for key_path, value in (overrides or {}).items():
            if value is not None:
                self._set_value_by_path(raw, key_path, value)
        normalized = self._normalize(raw)

        validation = config_validator.validate_config(normalized)
        if not validation.is_valid:
            raise ConfigError("Invalid configuration: " + "; ".join(validation.errors))
        return self._freeze(normalized)

    # Internal helpers -------------------------------------------------

    def _load_from_disk(self) -> Dict[str, Any]:
        config = default_config()
        if not self._config_path.exists():
            self.logger.warning(f"Configuration file not found: {self._config_path}, using default config")
            return config
        try:
            on_disk = read_config(self._config_path)
        except ValueError as e:
            raise ConfigError(f"{self._config_path}: {e}") from e
        except Exception as e:
            raise ConfigError(f"Cannot read {self._config_path}: {e}") from e
        return self._merge(config, on_disk)

    def _merge(self, base: Dict[str, Any], update: Mapping[str, Any]) -> Dict[str, Any]:
        merged = copy.deepcopy(base)
        for key, value in update.items():
            if isinstance(value, Mapping) and isinstance(merged.get(key), dict) and key != "promptSpecs":
                merged[key] = self._merge(merged[key], value)
            else:
                merged[key] = copy.deepcopy(value)
        return merged

    def _normalize(self, config: Dict[str, Any]) -> Dict[str, Any]:
        normalized = copy.deepcopy(config)
        for key_path, rule in config_validator.rules.items():
            value = config_validator.get_value_by_path(normalized, key_path)
            if value is None:
                continue
            coerced, changed = self._coerce_value(value, rule)
            if changed:
                self._set_value_by_path(normalized, key_path, coerced)

        level = normalized.get("logLevel")
        if isinstance(level, str):
            normalized["logLevel"] = level.strip().upper()

        # Facets: trim, lower-case, deduplicate while keeping order
        facets = config_validator.get_value_by_path(normalized, "generation.facets")
        if isinstance(facets, list):
            cleaned = []
            for raw_facet in facets:
                if not isinstance(raw_facet, str) or not raw_facet.strip():
                    continue
                facet_id = raw_facet.strip().lower().replace("-", "_").replace(" ", "_")
                if facet_id not in cleaned:
                    cleaned.append(facet_id)
            normalized["generation"]["facets"] = cleaned

        version = config_validator.get_value_by_path(normalized, "generation.promptVersion")
        if isinstance(version, str):
            normalized["generation"]["promptVersion"] = version.strip().lower()
        return normalized

    def _coerce_value(self, value: Any, rule: ValidationRule) -> Tuple[Any, bool]:
        target_type = rule.data_type
        if isinstance(target_type, tuple):
            return self._coerce_number(value)
        if target_type is int:
            return self._coerce_int(value)
        if target_type is bool:
            return self._coerce_bool(value)
        if target_type is list:
            return self._coerce_list(value)
        return value, False

    def _coerce_number(self, value: Any) -> Tuple[Any, bool]:
        if not isinstance(value, str) or not value.strip():
            return value, False
        text = value.strip()
        try:
            if text.lstrip("+-").isdigit():
                return int(text), True
            return float(text), True
        except ValueError:
            return value, False

    def _coerce_int(self, value: Any) -> Tuple[Any, bool]:
        if isinstance(value, str):
            text = value.strip()
            if text.lstrip("+-").isdigit():
                return int(text), True
            return value, False
        if isinstance(value, float) and value.is_integer():
            return int(value), True
        return value, False

    def _coerce_bool(self, value: Any) -> Tuple[Any, bool]:
        if isinstance(value, str):
            lowered = value.strip().lower()
            if lowered in {"true", "yes", "1"}:
                return True, True
            if lowered in {"false", "no", "0"}:
                return False, True
        return value, False

    def _coerce_list(self, value: Any) -> Tuple[Any, bool]:
        if isinstance(value, str):
            # Comma separated strings become lists
            return [part.strip() for part in value.split(",") if part.strip()], True
        if isinstance(value, tuple):
            return list(value), True
        return value, False

    def _set_value_by_path(self, config: Dict[str, Any], key_path: str, new_value: Any) -> None:
        keys = key_path.split(".")
        target = config
        for key in keys[:-1]:
            if key not in target or not isinstance(target[key], dict):
                target[key] = {}
            target = target[key]
        target[keys[-1]] = new_value

    def _resolve(self, value: Optional[str]) -> Optional[Path]:
        if value is None:
            return None
        path = Path(value).expanduser()
        if not path.is_absolute() and self._config_path.exists():
            relative_to_config = self._config_path.resolve().parent / path
            if relative_to_config.exists() and not path.exists():
                return relative_to_config
        return path

    def _freeze(self, config: Dict[str, Any]) -> RunConfig:
        gateway = config["gateway"]
        generation = config["generation"]
        inclusion = config.get("inclusion") or {}
        report = config["report"]

        params = GenParams(
            model_id=gateway["modelId"],
            temperature=float(gateway["temperature"]),
            max_attempts=int(gateway["maxAttempts"]),
            request_timeout=float(gateway.get("requestTimeout") or 60.0),
            endpoint_url=gateway.get("endpointUrl") or DEFAULT_ENDPOINT_URL,
            max_in_flight=int(gateway.get("maxInFlight") or 4),
        )
        prompt_specs = {
            Facet.parse(facet): self._resolve(path) for facet, path in (generation.get("promptSpecs") or {}).items()
        }
        files_section = config.get("files") or {}
        defaults = InclusionCriteria()

        return RunConfig(
            workspace=Path(config["workspace"]).expanduser(),
            log_level=config.get("logLevel") or "INFO",
            seed=int(config.get("seed") or 0),
            gateway=GatewaySettings(params=params, mock_script=self._resolve(gateway.get("mockScript"))),
            generation=GenerationSettings(
                prompt_version=generation["promptVersion"],
                facets=tuple(Facet.parse(f) for f in generation["facets"]),
                items_per_facet=int(generation["itemsPerFacet"]),
                max_rounds=int(generation.get("maxRounds") or 3),
                delimiter=generation.get("delimiter") or DEFAULT_DELIMITER,
                question_sentinel=generation.get("questionSentinel") or DEFAULT_SENTINEL,
                shuffle_options=bool(generation.get("shuffleOptions", False)),
                prompt_specs=prompt_specs,
            ),
            files={key: self._resolve(files_section.get(key)) for key in FILE_KEYS},
            inclusion=InclusionCriteria(
                age_min=inclusion.get("ageMin", defaults.age_min),
                age_max=inclusion.get("ageMax", defaults.age_max),
                require_attention=inclusion.get("requireAttention", defaults.require_attention),
                min_mean_rt_ms=float(inclusion.get("minMeanRtMs", defaults.min_mean_rt_ms)),
            ),
            report=ReportSettings(
                decimal_places=int(report["decimalPlaces"]),
                p_decimal_places=int(report["pDecimalPlaces"]),
                star_levels=tuple(float(level) for level in report.get("starLevels") or DEFAULT_STAR_LEVELS),
            ),
            raw=config,
            source=self._config_path if self._config_path.exists() else None,
        )


def load_run_config(path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Load, normalize and validate a run configuration.

    ``overrides`` maps dotted key paths (``gateway.temperature``) to values;
    ``None`` values are ignored so unset CLI flags leave the file untouched.
    """
    return ConfigManager(Path(path) if path is not None else CONFIG_PATH).load(overrides)


__all__ = [
    "FILE_KEYS",
    "ConfigManager",
    "GatewaySettings",
    "GenerationSettings",
    "ReportSettings",
    "RunConfig",
    "default_config",
    "load_run_config",
]
