import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, List, Optional, Sequence

from gateways.base import BaseGateway, CompletionRecord, GenParams, prompt_hash
from gateways.mock import MockGateway, load_mock_script, mock_from_source
from gateways.openai_compatible import API_KEY_ENV, OpenAICompatibleGateway

logger = logging.getLogger(__name__)


def get_gateway(kind: Optional[str] = None, mock_script: Optional[Any] = None, **kwargs) -> BaseGateway:
    """
    Create a gateway by name.

    A mock script (path or mapping) always selects the mock gateway.

    Raises:
        ValueError: If the gateway name is not supported.
    """
    if mock_script is not None:
        return mock_from_source(mock_script)

    kind = (kind or "openai").strip().lower()
    if kind in ("openai", "openai_compatible"):
        return OpenAICompatibleGateway(**kwargs)
    elif kind == "mock":
        raise ValueError("Gateway mock needs a mock script.")
    else:
        raise ValueError(f"Gateway {kind} not supported.")


def complete_many(gateway: BaseGateway, prompts: Sequence[str], params: GenParams) -> List[CompletionRecord]:
    """Complete prompts with at most ``params.max_in_flight`` calls in flight; results keep input order."""
    params.validate()
    if not prompts:
        return []
    workers = min(params.max_in_flight, len(prompts))
    logger.debug(f"Completing {len(prompts)} prompts with {workers} worker(s)")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(gateway.complete, prompt, params) for prompt in prompts]
        return [future.result() for future in futures]


__all__ = [
    "API_KEY_ENV",
    "BaseGateway",
    "CompletionRecord",
    "GenParams",
    "MockGateway",
    "OpenAICompatibleGateway",
    "complete_many",
    "get_gateway",
    "load_mock_script",
    "prompt_hash",
]
