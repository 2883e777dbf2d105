"""Completion backends: live chat-completions HTTP, scripted, record/replay.

Every prompt in the framework flows through the single ``complete`` entry
point, so any backend that satisfies the Backend protocol (an object with
``complete(request) -> CompletionResult``) can drive a simulation.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass

import requests as _requests

from .errors import (
    CassetteIOError,
    CassetteMiss,
    EndpointError,
    RetriesExhausted,
    ScriptExhausted,
    Timeout,
)

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class CompletionRequest:
    user_text: str
    system_text: str = ""
    temperature: float = 0.7
    max_tokens: int = 256
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.user_text:
            raise ValueError("user_text must be non-empty")


@dataclass
class CompletionResult:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    latency: float = 0.0


@dataclass
class BackendConfig:
    base_url: str
    model: str
    api_key_env: str = ""
    timeout: float = 30.0
    retries: int = 2
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if not 0 <= self.retries <= 5:
            raise ValueError("retries must be between 0 and 5")


def request_digest(request: CompletionRequest) -> str:
    """Stable cross-process digest of a request's semantic content."""
    canonical = json.dumps({
        "system": request.system_text,
        "user": request.user_text,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
        "stop": list(request.stop_sequences),
    }, sort_keys=True, ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ScriptedBackend:
    """Deterministic backend serving a fixed list of responses in order.

    Records every request it sees, which lets tests assert on the exact
    prompts a component issued.
    """

    def __init__(self, responses):
        self._responses = list(responses)
        self._cursor = 0
        self._lock = threading.Lock()
        self.requests: list[CompletionRequest] = []

    def complete(self, request: CompletionRequest) -> CompletionResult:
        with self._lock:
            self.requests.append(request)
            if self._cursor >= len(self._responses):
                raise ScriptExhausted(
                    f"script exhausted after {len(self._responses)} responses")
            text = self._responses[self._cursor]
            self._cursor += 1
        return CompletionResult(text=text)

    @property
    def calls(self) -> int:
        return self._cursor


class HTTPBackend:
    """Chat-completions-compatible HTTP backend with retry and backoff.

    Transient failures (connection errors, timeouts, 429, 5xx) are retried
    up to ``config.retries`` times with exponential backoff; other 4xx
    responses fail immediately.
    """

    def __init__(self, config: BackendConfig, session=None, sleep=time.sleep):
        self.config = config
        self._session = session or _requests.Session()
        self._sleep = sleep

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env) if self.config.api_key_env else None
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, request: CompletionRequest) -> CompletionResult:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        payload = {
            "model": self.config.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if request.stop_sequences:
            payload["stop"] = list(request.stop_sequences)

        last_error: Exception | None = None
        for attempt in range(self.config.retries + 1):
            if attempt:
                self._sleep(self.config.backoff_base * (2 ** (attempt - 1)))
            start = time.monotonic()
            try:
                resp = self._session.post(url, json=payload,
                                          headers=self._headers(),
                                          timeout=self.config.timeout)
            except _requests.Timeout as e:
                last_error = Timeout(str(e))
                continue
            except _requests.RequestException as e:
                last_error = e
                continue
            if resp.status_code in RETRYABLE_STATUS:
                last_error = EndpointError(resp.status_code, resp.text)
                continue
            if resp.status_code >= 400:
                raise EndpointError(resp.status_code, resp.text)
            data = resp.json()
            usage = data.get("usage") or {}
            return CompletionResult(
                text=data["choices"][0]["message"]["content"],
                prompt_tokens=usage.get("prompt_tokens"),
                completion_tokens=usage.get("completion_tokens"),
                latency=time.monotonic() - start,
            )
        raise RetriesExhausted(
            f"{self.config.retries + 1} attempts failed; last: {last_error}")


class CassetteBackend:
    """Record/replay wrapper around any backend.

    Record mode forwards to the inner backend and appends (digest, request,
    response) records to the cassette file. Replay mode serves responses by
    request digest without touching the inner backend and fails on a miss.
    Repeated identical requests replay in recorded order.
    """

    def __init__(self, path: str, mode: str, inner=None):
        if mode not in ("record", "replay"):
            raise ValueError(f"unknown cassette mode {mode!r}")
        if mode == "record" and inner is None:
            raise ValueError("record mode requires an inner backend")
        self.path = path
        self.mode = mode
        self.inner = inner
        self._lock = threading.Lock()
        self._responses: dict[str, list[str]] = {}
        self._served: dict[str, int] = {}
        if mode == "replay":
            self._load()

    def _load(self) -> None:
        try:
            with open(self.path, encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    self._responses.setdefault(record["digest"], []).append(
                        record["response"])
        except OSError as e:
            raise CassetteIOError(f"cannot read cassette {self.path}: {e}") from e
        except (json.JSONDecodeError, KeyError) as e:
            raise CassetteIOError(f"corrupt cassette {self.path}: {e}") from e

    def complete(self, request: CompletionRequest) -> CompletionResult:
        digest = request_digest(request)
        if self.mode == "replay":
            with self._lock:
                recorded = self._responses.get(digest)
                if not recorded:
                    raise CassetteMiss(digest)
                index = self._served.get(digest, 0)
                text = recorded[min(index, len(recorded) - 1)]
                self._served[digest] = index + 1
            return CompletionResult(text=text)
        result = self.inner.complete(request)
        record = {
            "digest": digest,
            "request": {"system": request.system_text, "user": request.user_text},
            "response": result.text,
        }
        with self._lock:
            try:
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(record) + "\n")
            except OSError as e:
                raise CassetteIOError(f"cannot write cassette {self.path}: {e}") from e
        return result
