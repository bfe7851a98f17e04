"""Completion backends: scripted fixtures, OpenAI-compatible HTTP, caching.

The pipeline only ever talks to LlmGateway.complete(). Behind it sits either
a deterministic ScriptFixture (tests, replays) or a real HTTP backend with
retry and rate limiting; an optional response cache short-circuits repeats.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

import requests

from clarifact.errors import (
    AuthFailure,
    BackendExhausted,
    RequestRejected,
    ScriptMiss,
)

log = logging.getLogger(__name__)

_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in _ROLES:
            raise ValueError(f"role must be one of {_ROLES}, got {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class CompletionRequest:
    """One chat completion call.

    ``tag`` is a free-form label for logging/analysis; it never reaches the
    wire and never affects the digest, so retagging a request cannot bust
    the cache or change a scripted match.
    """

    messages: tuple[ChatMessage, ...]
    model: str = "gpt-4"
    temperature: float = 0.0
    max_tokens: Optional[int] = None
    tag: str = ""

    def digest(self) -> str:
        payload = {
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def joined_content(self) -> str:
        return "\n".join(m.content for m in self.messages)


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int
    completion_tokens: int

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass(frozen=True)
class Completion:
    text: str
    usage: TokenUsage
    cached: bool = False
    latency: float = 0.0


def _estimate_usage(request: CompletionRequest, text: str) -> TokenUsage:
    # Whitespace word counts; good enough when the backend reports nothing.
    prompt = sum(len(m.content.split()) for m in request.messages)
    return TokenUsage(prompt_tokens=prompt, completion_tokens=len(text.split()))


class CompletionBackend(Protocol):
    def complete(self, request: CompletionRequest) -> Completion: ...


# ---------------------------------------------------------------------------
# Scripted backend
# ---------------------------------------------------------------------------

@dataclass
class ScriptEntry:
    """One scripted reply.

    ``match`` is either a 64-hex request digest (exact match) or a substring
    looked up in the newline-joined message contents.
    """

    match: str
    response: str
    use_count: int = 0

    def matches(self, request: CompletionRequest) -> bool:
        if len(self.match) == 64 and all(c in "0123456789abcdef" for c in self.match):
            return self.match == request.digest()
        return self.match in request.joined_content()


class ScriptFixture:
    """Deterministic backend that replays scripted responses.

    Selection prefers the first matching entry that has not been consumed
    yet, falling back to the first match overall — so a sequence of entries
    with the same trigger is consumed in order, and a single entry can
    serve unlimited repeats. Strict mode raises ScriptMiss when nothing
    matches; lenient mode returns ``default_response``.
    """

    def __init__(
        self,
        entries: Sequence[ScriptEntry],
        strict: bool = True,
        default_response: str = "0.5",
    ):
        self.entries = list(entries)
        self.strict = strict
        self.default_response = default_response
        self.calls: list[str] = []
        self.prompts: list[str] = []
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path, strict: bool = True) -> "ScriptFixture":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(raw, dict):
            entries = raw.get("entries", [])
            strict = bool(raw.get("strict", strict))
            default = str(raw.get("default_response", "0.5"))
        else:
            entries, default = raw, "0.5"
        parsed = [
            ScriptEntry(match=str(e["match"]), response=str(e["response"]))
            for e in entries
        ]
        return cls(parsed, strict=strict, default_response=default)

    def complete(self, request: CompletionRequest) -> Completion:
        with self._lock:
            self.calls.append(request.digest())
            self.prompts.append(request.joined_content())
            matches = [e for e in self.entries if e.matches(request)]
            chosen: Optional[ScriptEntry] = None
            for entry in matches:
                if entry.use_count == 0:
                    chosen = entry
                    break
            if chosen is None and matches:
                chosen = matches[0]
            if chosen is None:
                if self.strict:
                    raise ScriptMiss(
                        f"no scripted entry matches request {request.digest()}"
                    )
                text = self.default_response
            else:
                chosen.use_count += 1
                text = chosen.response
        return Completion(text=text, usage=_estimate_usage(request, text))


# ---------------------------------------------------------------------------
# HTTP backend
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 5
    base_delay: float = 1.0
    max_delay: float = 30.0

    def delay(self, attempt: int) -> float:
        return min(self.max_delay, self.base_delay * (2**attempt))


class RateLimiter:
    """Token-bucket limiter shared across worker threads."""

    def __init__(self, requests_per_minute: int):
        if requests_per_minute <= 0:
            raise ValueError("requests_per_minute must be positive")
        self.capacity = float(requests_per_minute)
        self.tokens = float(requests_per_minute)
        self.fill_rate = requests_per_minute / 60.0
        self.updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self.tokens = min(
                    self.capacity, self.tokens + (now - self.updated) * self.fill_rate
                )
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.fill_rate
            time.sleep(wait)


class OpenAIBackend:
    """Chat-completions client for any OpenAI-compatible endpoint.

    Transient failures (429, 5xx, timeouts, connection drops) are retried
    with exponential backoff up to the policy's attempt budget; 401/403
    raise AuthFailure immediately; other 4xx raise RequestRejected and are
    never resent — a request the server has deemed invalid will not become
    valid by repetition.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str,
        retry: Optional[RetryPolicy] = None,
        timeout: float = 60.0,
        session: Optional[requests.Session] = None,
        sleep=time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.retry = retry or RetryPolicy()
        self.timeout = timeout
        self.session = session or requests.Session()
        self._sleep = sleep

    def complete(self, request: CompletionRequest) -> Completion:
        payload: dict = {
            "model": request.model,
            "messages": [
                {"role": m.role, "content": m.content} for m in request.messages
            ],
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens

        url = f"{self.base_url}/chat/completions"
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error = "no attempts made"

        for attempt in range(self.retry.max_attempts):
            started = time.monotonic()
            try:
                response = self.session.post(
                    url, json=payload, headers=headers, timeout=self.timeout
                )
            except (requests.Timeout, requests.ConnectionError) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                log.warning("attempt %d failed (%s); backing off", attempt + 1, last_error)
                self._sleep(self.retry.delay(attempt))
                continue

            if response.status_code in (401, 403):
                raise AuthFailure(f"backend returned {response.status_code}")
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                log.warning("attempt %d failed (%s); backing off", attempt + 1, last_error)
                self._sleep(self.retry.delay(attempt))
                continue
            if response.status_code >= 400:
                raise RequestRejected(
                    f"backend rejected request: HTTP {response.status_code} "
                    f"{response.text[:200]}"
                )

            body = response.json()
            text = body["choices"][0]["message"]["content"]
            usage = body.get("usage")
            if usage:
                parsed_usage = TokenUsage(
                    prompt_tokens=int(usage.get("prompt_tokens", 0)),
                    completion_tokens=int(usage.get("completion_tokens", 0)),
                )
            else:
                parsed_usage = _estimate_usage(request, text)
            return Completion(
                text=text,
                usage=parsed_usage,
                latency=time.monotonic() - started,
            )

        raise BackendExhausted(
            f"gave up after {self.retry.max_attempts} attempts; last error: {last_error}"
        )


# ---------------------------------------------------------------------------
# Gateway with caching
# ---------------------------------------------------------------------------

class ResponseCacheProtocol(Protocol):
    def get(self, digest: str) -> Optional[str]: ...
    def put(self, digest: str, text: str, model: str = "") -> None: ...


class MemoryCache:
    def __init__(self) -> None:
        self._data: dict[str, str] = {}
        self._lock = threading.Lock()

    def get(self, digest: str) -> Optional[str]:
        with self._lock:
            return self._data.get(digest)

    def put(self, digest: str, text: str, model: str = "") -> None:
        with self._lock:
            self._data[digest] = text


@dataclass
class GatewayStats:
    requests: int = 0
    cache_hits: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0


class LlmGateway:
    """Front door for all completions: cache check, rate limit, backend call."""

    def __init__(
        self,
        backend: CompletionBackend,
        cache: Optional[ResponseCacheProtocol] = None,
        rate_limiter: Optional[RateLimiter] = None,
    ):
        self.backend = backend
        self.cache = cache
        self.rate_limiter = rate_limiter
        self.stats = GatewayStats()
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> Completion:
        digest = request.digest()
        if self.cache is not None:
            hit = self.cache.get(digest)
            if hit is not None:
                with self._lock:
                    self.stats.requests += 1
                    self.stats.cache_hits += 1
                return Completion(
                    text=hit,
                    usage=_estimate_usage(request, hit),
                    cached=True,
                    latency=0.0,
                )
        if self.rate_limiter is not None:
            self.rate_limiter.acquire()
        completion = self.backend.complete(request)
        if self.cache is not None:
            self.cache.put(digest, completion.text, model=request.model)
        with self._lock:
            self.stats.requests += 1
            self.stats.prompt_tokens += completion.usage.prompt_tokens
            self.stats.completion_tokens += completion.usage.completion_tokens
        return completion
