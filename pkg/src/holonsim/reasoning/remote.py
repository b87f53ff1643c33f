"""HTTP client for a remote reasoner model.

Speaks the same wire schema as the mock: POST one structured prompt,
get back `{response, schema_version}`. Anything that goes wrong maps
onto the three backend errors so the caller can fall back cleanly.
The transport is injectable for tests.
"""

from __future__ import annotations

from typing import Callable, Optional

import httpx

from .types import BackendUnavailable, PROMPT_SCHEMA_VERSION, SchemaViolation, Timeout

DEFAULT_TIME_BUDGET_SECONDS = 5.0

Transport = Callable[[str, dict, float], dict]


def _httpx_transport(endpoint: str, body: dict, budget: float) -> dict:
    response = httpx.post(endpoint, json=body, timeout=budget)
    response.raise_for_status()
    return response.json()


class RemoteBackend:
    """Remote model endpoint behind the reasoner wire protocol."""

    name = "remote"

    def __init__(
        self,
        endpoint: str,
        time_budget: float = DEFAULT_TIME_BUDGET_SECONDS,
        transport: Optional[Transport] = None,
    ):
        if not endpoint:
            raise ValueError("remote backend needs an endpoint")
        self.endpoint = endpoint
        self.time_budget = time_budget
        self._transport = transport or _httpx_transport

    def call(self, prompt: dict) -> dict:
        try:
            envelope = self._transport(self.endpoint, prompt, self.time_budget)
        except httpx.TimeoutException as exc:
            raise Timeout(f"remote reasoner exceeded {self.time_budget}s budget") from exc
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"remote reasoner unreachable: {exc}") from exc
        except (ValueError, TypeError) as exc:
            raise SchemaViolation(f"remote reasoner sent a non-document body: {exc}") from exc
        if not isinstance(envelope, dict):
            raise SchemaViolation("remote response must be a document")
        if envelope.get("schema_version") != PROMPT_SCHEMA_VERSION:
            raise SchemaViolation(
                f"schema_version {envelope.get('schema_version')!r} != {PROMPT_SCHEMA_VERSION!r}"
            )
        if not isinstance(envelope.get("response"), dict):
            raise SchemaViolation("remote response missing 'response' document")
        return envelope
