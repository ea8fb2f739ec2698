import hashlib
import logging
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from typing import Any, Dict

from utils.error_handler import (
    ErrorHandler,
    ErrorSeverity,
    GatewayError,
    ParamError,
    TransientGatewayError,
    error_handler,
)

DEFAULT_MODEL_ID = "gpt-4-1106-preview"
DEFAULT_ENDPOINT_URL = "https://api.openai.com/v1/chat/completions"


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GenParams:
    """Sampling and transport settings; temperature is the only sampling knob surfaced."""

    model_id: str = DEFAULT_MODEL_ID
    temperature: float = 1.0
    max_attempts: int = 3
    request_timeout: float = 60.0
    endpoint_url: str = DEFAULT_ENDPOINT_URL
    max_in_flight: int = 4
    backoff_base: float = 1.0
    backoff_factor: float = 2.0

    def validate(self):
        if not isinstance(self.temperature, (int, float)) or not 0.0 <= self.temperature <= 2.0:
            raise ParamError(f"temperature must lie within [0, 2], got {self.temperature}")
        if not isinstance(self.max_attempts, int) or self.max_attempts < 1:
            raise ParamError(f"max_attempts must be a positive integer, got {self.max_attempts}")
        if self.request_timeout <= 0:
            raise ParamError(f"request_timeout must be positive, got {self.request_timeout}")
        if self.max_in_flight < 1:
            raise ParamError(f"max_in_flight must be positive, got {self.max_in_flight}")

    def snapshot(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CompletionRecord:
    prompt_hash: str
    raw_text: str
    params: Dict[str, Any]
    timestamp: str
    attempts: int
    gateway: str = "unknown"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class BaseGateway(ABC):
    """Chat-completion transport. Subclasses implement a single ``_send`` call;
    validation, retries and bookkeeping live here."""

    name = "base"

    def __init__(self, handler: ErrorHandler = error_handler):
        self.handler = handler
        self.logger = logging.getLogger(f"{__name__}.{self.name}")

    @abstractmethod
    def _send(self, prompt: str, params: GenParams) -> str:
        """Return the completion text or raise a GatewayError subclass."""

    def _preflight(self, params: GenParams):
        """Checks run once before the first attempt."""

    def complete(self, prompt: str, params: GenParams) -> CompletionRecord:
        params.validate()
        self._preflight(params)
        attempts = 0

        def attempt() -> str:
            nonlocal attempts
            attempts += 1
            text = self._send(prompt, params)
            if not text or not text.strip():
                raise TransientGatewayError("Endpoint returned an empty completion")
            return text

        retrying = self.handler.retry_with_backoff(
            attempt,
            max_retries=params.max_attempts - 1,
            base_delay=params.backoff_base,
            backoff_factor=params.backoff_factor,
        )
        try:
            text = retrying()
        except TransientGatewayError as exc:
            self.handler.handle_api_error(
                exc,
                {"gateway": self.name, "model": params.model_id, "attempts": attempts},
                ErrorSeverity.ERROR,
            )
            raise GatewayError(f"No completion after {attempts} attempts: {exc}", cause=exc) from exc

        record = CompletionRecord(
            prompt_hash=prompt_hash(prompt),
            raw_text=text,
            params=params.snapshot(),
            timestamp=datetime.now(timezone.utc).isoformat(),
            attempts=attempts,
            gateway=self.name,
        )
        self.logger.info(
            f"Completion {record.prompt_hash[:12]} from {self.name} after {attempts} attempt(s), "
            f"{len(text)} chars"
        )
        return record
