import logging
import os
from typing import Optional

import requests
from dotenv import load_dotenv

from gateways.base import BaseGateway, GenParams
from utils.error_handler import AuthError, GatewayError, TransientGatewayError

API_KEY_ENV = "SJT_FORGE_API_KEY"

logger = logging.getLogger(__name__)


def resolve_api_key() -> Optional[str]:
    """Credential from the environment, falling back to a local .env file."""
    load_dotenv()
    key = os.getenv(API_KEY_ENV)
    return key.strip() if key and key.strip() else None


class OpenAICompatibleGateway(BaseGateway):
    """POSTs a single user message to a chat-completions endpoint."""

    name = "openai"

    def __init__(self, api_key: Optional[str] = None, **kwargs):
        super().__init__(**kwargs)
        self.api_key = api_key

    def _preflight(self, params: GenParams):
        if self.api_key is None:
            self.api_key = resolve_api_key()
        if not self.api_key:
            raise AuthError(f"No API key: set {API_KEY_ENV} or use --mock")

    def _send(self, prompt: str, params: GenParams) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}", "Content-Type": "application/json"}
        payload = {
            "model": params.model_id,
            "temperature": params.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }

        try:
            response = requests.post(
                params.endpoint_url, json=payload, headers=headers, timeout=params.request_timeout
            )
        except (requests.ConnectionError, requests.Timeout) as e:
            raise TransientGatewayError(f"Request to {params.endpoint_url} failed: {e}", cause=e) from e
        except requests.RequestException as e:
            raise GatewayError(f"Request to {params.endpoint_url} failed: {e}", cause=e) from e

        status = response.status_code
        if status in (401, 403):
            raise AuthError(f"Endpoint rejected the credential ({status})")
        if status == 429 or status >= 500:
            raise TransientGatewayError(f"Endpoint returned {status}: {response.text[:200]}", status_code=status)
        if status != 200:
            raise GatewayError(f"Endpoint returned {status}: {response.text[:200]}")

        try:
            data = response.json()
            return data["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise GatewayError(f"Unexpected completion payload: {e}", cause=e) from e
