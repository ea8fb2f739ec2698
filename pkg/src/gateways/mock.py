"""
Scripted offline gateway.

A mock script is a YAML (or JSON) mapping::

    prompts:            # exact prompt sha256 -> reply
      3f2a...: "Scenario 3: ..."
    match:              # first entry whose text occurs in the prompt wins
      - contains: self-consciousness
        completion: "Scenario 3: ..."
    default: "..."      # optional fallback

A reply is either completion text, ``{error: <status>}`` to simulate a failed
call, or a list of replies served in order with the last one repeating.
"""

import threading
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml

from gateways.base import BaseGateway, GenParams, prompt_hash
from utils.error_handler import AuthError, ConfigError, GatewayError, TransientGatewayError


def load_mock_script(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Mock script not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            script = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Mock script {path} is not valid YAML/JSON: {e}") from e
    if not isinstance(script, dict):
        raise ConfigError(f"Mock script {path} must be a mapping")
    return script


class MockGateway(BaseGateway):
    name = "mock"

    def __init__(self, script: Mapping[str, Any], **kwargs):
        super().__init__(**kwargs)
        self.script = dict(script)
        self._served: Dict[str, int] = {}
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_file(cls, path: Path, **kwargs) -> "MockGateway":
        return cls(load_mock_script(path), **kwargs)

    def _lookup(self, prompt: str):
        digest = prompt_hash(prompt)
        prompts = self.script.get("prompts") or {}
        if digest in prompts:
            return f"hash:{digest}", prompts[digest]
        lowered = prompt.lower()
        for i, entry in enumerate(self.script.get("match") or []):
            needle = str(entry.get("contains", "")).lower()
            if needle and needle in lowered:
                reply = entry["completions"] if "completions" in entry else entry.get("completion")
                return f"match:{i}", reply
        if "default" in self.script:
            return "default", self.script["default"]
        return None, None

    def _next_reply(self, key: str, reply: Any) -> Any:
        if not isinstance(reply, list):
            return reply
        if not reply:
            return None
        with self._lock:
            served = self._served.get(key, 0)
            self._served[key] = served + 1
        return reply[min(served, len(reply) - 1)]

    def _send(self, prompt: str, params: GenParams) -> str:
        with self._lock:
            self.calls += 1
        key, reply = self._lookup(prompt)
        if key is None:
            raise GatewayError(f"Mock script has no completion for prompt {prompt_hash(prompt)[:12]}")

        reply = self._next_reply(key, reply)
        if isinstance(reply, Mapping) and "error" in reply:
            status = int(reply["error"])
            if status in (401, 403):
                raise AuthError(f"Mock endpoint rejected the credential ({status})")
            if status == 429 or status >= 500:
                raise TransientGatewayError(f"Mock endpoint returned {status}", status_code=status)
            raise GatewayError(f"Mock endpoint returned {status}")
        return "" if reply is None else str(reply)


def mock_from_source(source: Optional[Any]) -> Optional[MockGateway]:
    """MockGateway from a path or an in-memory script; None passes through."""
    if source is None:
        return None
    if isinstance(source, Mapping):
        return MockGateway(source)
    return MockGateway.from_file(Path(source))
