"""Model provider boundary.

One wire contract for all kinds: a request is {role, prompt_text, model_name}
and a response is {text, token_counts}. The deterministic mock serves a
scripted responses file keyed by (role, subject, attempt) so pipeline runs
are byte-reproducible; replay serves previously stored transcripts. Every
provider counts its calls so dry-run tests can assert zero traffic.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import httpx


class ProviderKind(str, Enum):
    LIVE_HTTP = "live_http"
    DETERMINISTIC_MOCK = "deterministic_mock"
    REPLAY = "replay"


@dataclass(frozen=True)
class ProviderBinding:
    name: str
    kind: ProviderKind
    endpoint: str | None = None
    model_name: str | None = None
    timeout_s: float = 120.0
    max_attempts: int = 3
    # retries observed in practice need breathing room against a live model,
    # but a scripted mock must not sleep
    backoff_base_s: float | None = None
    max_payload_bytes: int | None = None
    script_path: str | None = None
    transcripts_path: str | None = None
    api_key_env: str | None = None

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.kind is ProviderKind.LIVE_HTTP and not (self.endpoint and self.model_name):
            raise ValueError("live_http binding requires endpoint and model_name")

    @property
    def backoff_base(self) -> float:
        if self.backoff_base_s is not None:
            return self.backoff_base_s
        return 2.0 if self.kind is ProviderKind.LIVE_HTTP else 0.0


@dataclass
class ProviderResponse:
    text: str
    token_counts: tuple[int, int] | None = None


class ProviderError(Exception):
    """Transport or provider-side failure for one attempt; retryable."""


@dataclass
class CallRecord:
    role: str
    subject: str
    attempt: int


class BaseProvider:
    def __init__(self, binding: ProviderBinding):
        self.binding = binding
        self.calls: list[CallRecord] = []

    @property
    def name(self) -> str:
        return self.binding.name

    def send(self, role: str, prompt_text: str, subject: str, attempt: int) -> ProviderResponse:
        self.calls.append(CallRecord(role=role, subject=subject, attempt=attempt))
        return self._send(role, prompt_text, subject, attempt)

    def _send(self, role: str, prompt_text: str, subject: str, attempt: int) -> ProviderResponse:
        raise NotImplementedError


class LiveHttpProvider(BaseProvider):
    """POSTs {role, prompt_text, model_name} and expects {text, token_counts}."""

    def __init__(self, binding: ProviderBinding, transport: httpx.BaseTransport | None = None):
        super().__init__(binding)
        headers = {}
        if binding.api_key_env:
            key = os.environ.get(binding.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(
            timeout=binding.timeout_s, headers=headers, transport=transport
        )

    def _send(self, role: str, prompt_text: str, subject: str, attempt: int) -> ProviderResponse:
        try:
            response = self._client.post(
                self.binding.endpoint,
                json={
                    "role": role,
                    "prompt_text": prompt_text,
                    "model_name": self.binding.model_name,
                },
            )
        except httpx.HTTPError as exc:
            raise ProviderError(f"transport failure: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError(f"provider returned HTTP {response.status_code}")
        try:
            body = response.json()
            text = body["text"]
        except (ValueError, KeyError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc
        counts = body.get("token_counts")
        return ProviderResponse(
            text=text,
            token_counts=tuple(counts) if counts else None,
        )

    def close(self) -> None:
        self._client.close()


class DeterministicMockProvider(BaseProvider):
    """Serves a scripted responses file: JSONL of {role, subject, attempt?, text|error}.

    An entry with a matching attempt wins over an any-attempt entry; a
    scripted "error" or a missing entry is a provider_error for that attempt.
    """

    def __init__(self, binding: ProviderBinding):
        super().__init__(binding)
        self._exact: dict[tuple[str, str, int], dict] = {}
        self._any: dict[tuple[str, str], dict] = {}
        if binding.script_path:
            path = Path(binding.script_path)
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    entry = json.loads(line)
                    key = (entry["role"], entry["subject"])
                    if entry.get("attempt") is None:
                        self._any[key] = entry
                    else:
                        self._exact[(*key, int(entry["attempt"]))] = entry

    def _send(self, role: str, prompt_text: str, subject: str, attempt: int) -> ProviderResponse:
        entry = self._exact.get((role, subject, attempt)) or self._any.get((role, subject))
        if entry is None:
            raise ProviderError(f"no scripted response for ({role}, {subject}, {attempt})")
        if "error" in entry:
            raise ProviderError(str(entry["error"]))
        counts = entry.get("token_counts")
        return ProviderResponse(
            text=entry["text"],
            token_counts=tuple(counts) if counts else None,
        )


class ReplayProvider(BaseProvider):
    """Plays back stored transcripts keyed by (role, subject, attempt)."""

    def __init__(self, binding: ProviderBinding):
        super().__init__(binding)
        if not binding.transcripts_path:
            raise ValueError("replay binding requires transcripts_path")
        self._index: dict[tuple[str, str, int], dict] = {}
        with Path(binding.transcripts_path).open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                key = (record["agent_role"], record["subject"], int(record["attempt"]))
                self._index[key] = record

    def _send(self, role: str, prompt_text: str, subject: str, attempt: int) -> ProviderResponse:
        record = self._index.get((role, subject, attempt))
        if record is None:
            raise ProviderError(f"no stored transcript for ({role}, {subject}, {attempt})")
        if record["outcome"] == "provider_error":
            raise ProviderError("replayed provider_error")
        counts = record.get("token_counts")
        return ProviderResponse(
            text=record["raw_response"],
            token_counts=tuple(counts) if counts else None,
        )


def build_provider(binding: ProviderBinding) -> BaseProvider:
    if binding.kind is ProviderKind.LIVE_HTTP:
        return LiveHttpProvider(binding)
    if binding.kind is ProviderKind.DETERMINISTIC_MOCK:
        return DeterministicMockProvider(binding)
    if binding.kind is ProviderKind.REPLAY:
        return ReplayProvider(binding)
    raise ValueError(f"unknown provider kind {binding.kind!r}")
