"""Utility helpers for reading and writing SJT Forge configuration and JSON artifacts."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Dict

import yaml

CONFIG_PATH = Path("config/forge.yaml")


def read_config(path: Path = CONFIG_PATH) -> Dict[str, Any]:
    """Load a YAML mapping; an empty file yields an empty dict."""
    with Path(path).open("r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ValueError("Configuration root must be a mapping")
    return raw


def write_config(config: Dict[str, Any], path: Path = CONFIG_PATH) -> None:
    """Persist the configuration dictionary to disk as YAML."""
    path = Path(path).resolve()
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        yaml.safe_dump(
            config,
            fh,
            default_flow_style=False,
            allow_unicode=True,
            sort_keys=False,
            indent=2,
        )


def config_hash(config: Dict[str, Any]) -> str:
    """Stable sha256 over the canonical JSON form of a config mapping."""
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
