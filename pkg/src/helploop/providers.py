"""Completion providers: the remote HTTP model and a deterministic mock.

The mock is a pure function of (prompt, seed). It echoes a tag derived from
the prompt's stage marker, so pipeline tests can assert which stages ran and
in what order without any model in the loop.
"""

from __future__ import annotations

import hashlib
import os
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum

import httpx

from .errors import ProviderError, ProviderTimeout

__all__ = [
    "CompletionProvider",
    "MockProvider",
    "ProviderConfig",
    "ProviderKind",
    "RemoteProvider",
    "make_provider",
    "mock_complete",
]

API_KEY_ENV = "HELPLOOP_PROVIDER_KEY"

_STAGE_MARKER = re.compile(r"\[stage: (\w+)\]")
_STAGE_TAGS = {
    "fix_generation": "FIX",
    "hint_generation": "HINT",
    "plan_generation": "PLAN",
    "optimization_generation": "OPT",
}


class ProviderKind(str, Enum):
    REMOTE = "remote"
    MOCK = "mock"


@dataclass(frozen=True)
class ProviderConfig:
    provider_kind: ProviderKind = ProviderKind.MOCK
    endpoint: str | None = None
    model_name: str = "mock-model"
    # Matches the promise shown to students: hints take at most two minutes.
    timeout: float = 120.0
    max_retries: int = 1
    mock_seed: int = 0

    def __post_init__(self):
        if self.timeout > 120.0:
            raise ValueError("provider timeout above 120 s breaks the latency promise")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


class CompletionProvider(ABC):
    """One-shot text completion; implementations must be thread-safe."""

    @abstractmethod
    def complete(self, prompt: str) -> str:
        """Returns the completion; raises ProviderError or ProviderTimeout."""


def mock_complete(prompt: str, seed: int) -> str:
    """Deterministic fake completion, tagged with the prompt's stage."""
    marker = _STAGE_MARKER.search(prompt)
    tag = _STAGE_TAGS.get(marker.group(1) if marker else "", "TEXT")
    digest = hashlib.sha256(f"{seed}\n{prompt}".encode("utf-8")).hexdigest()[:16]
    return f"{tag}: deterministic completion {digest}"


class MockProvider(CompletionProvider):
    """Records every prompt it sees; can fail the first N calls for tests."""

    def __init__(self, seed: int = 0, fail_first: int = 0):
        self.seed = seed
        self.calls: list[str] = []
        self._failures_left = fail_first

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        if self._failures_left > 0:
            self._failures_left -= 1
            raise ProviderError("mock provider failure (scripted)")
        return mock_complete(prompt, self.seed)


class RemoteProvider(CompletionProvider):
    """Thin HTTP adapter: POST {model, prompt} to the endpoint.

    Expects a JSON body with a ``completion`` field; the exact remote schema
    is adapter-level configuration, not a domain concern. The API key is read
    from the HELPLOOP_PROVIDER_KEY environment variable.
    """

    def __init__(self, endpoint: str, model_name: str, timeout: float = 120.0):
        self._endpoint = endpoint
        self._model_name = model_name
        self._client = httpx.Client(timeout=timeout)

    def complete(self, prompt: str) -> str:
        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            response = self._client.post(
                self._endpoint,
                json={"model": self._model_name, "prompt": prompt},
                headers=headers,
            )
            response.raise_for_status()
            return str(response.json()["completion"])
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(f"completion timed out: {exc}") from exc
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise ProviderError(f"completion failed: {exc}") from exc

    def close(self) -> None:
        self._client.close()


def make_provider(config: ProviderConfig) -> CompletionProvider:
    if config.provider_kind is ProviderKind.MOCK:
        return MockProvider(seed=config.mock_seed)
    if not config.endpoint:
        raise ProviderError("remote provider requires an endpoint")
    return RemoteProvider(config.endpoint, config.model_name, config.timeout)
