"""Provider-agnostic chat-completion client with a record/replay cache.

Responses are cached one file per request digest, so every pipeline, linker,
and test can run deterministically offline. The wire protocol is the de-facto
chat-completions HTTP shape (POST, bearer credential) with a configurable
base URL.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

from .model import TokenUsage

FIELD_SEPARATOR = b"\x1f"


class GatewayError(RuntimeError):
    """Base class for gateway failures."""


class StrictMissError(GatewayError):
    """Cache miss in replay_strict mode."""

    def __init__(self, digest: str):
        super().__init__(f"replay_strict cache miss for digest {digest}")
        self.digest = digest


class ProviderError(GatewayError):
    """Provider HTTP failure that survived the retry budget."""


class DecodeError(GatewayError):
    """Provider returned a payload the client cannot interpret."""


@dataclass(frozen=True)
class ChatRequest:
    """One single-message chat completion request."""

    model: str
    prompt: str
    temperature: float = 0.0
    max_tokens: int | None = None

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens is not None and self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive when given")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: TokenUsage
    usage_estimated: bool = False


class GatewayMode(str, enum.Enum):
    """str-valued so JSON/config round-trips stay trivial."""

    PASSTHROUGH = "passthrough"
    RECORD = "record"
    REPLAY_STRICT = "replay_strict"
    REPLAY_FALLBACK = "replay_fallback"


def canonical_key(req: ChatRequest) -> str:
    """Content digest of a request: SHA-256 over the canonical serialization.

    Fields in fixed order (model, prompt, temperature with exactly 4 decimal
    places, max_tokens or the literal "none"), joined by byte 0x1F.
    """
    parts = [
        req.model.encode("utf-8"),
        req.prompt.encode("utf-8"),
        f"{req.temperature:.4f}".encode("ascii"),
        (b"none" if req.max_tokens is None else str(req.max_tokens).encode("ascii")),
    ]
    return hashlib.sha256(FIELD_SEPARATOR.join(parts)).hexdigest()


def estimate_usage(req: ChatRequest, text: str) -> TokenUsage:
    """Fallback token estimate when the provider omits usage: ceil(chars/4)."""
    return TokenUsage(
        prompt_tokens=math.ceil(len(req.prompt) / 4),
        completion_tokens=math.ceil(len(text) / 4),
    )


class Provider(Protocol):
    """Anything that can turn a ChatRequest into a ChatResponse."""

    def __call__(self, req: ChatRequest) -> ChatResponse: ...


class HttpProvider:
    """Chat-completions HTTP client.

    Credentials are read from the environment variable named in config and
    never written to disk. Retries: ``attempts`` tries with exponential
    backoff starting at ``backoff_s``, only on transport errors and HTTP
    429/5xx, so deterministic request content is never re-rolled.
    """

    RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})

    def __init__(
        self,
        base_url: str,
        api_key_env: str = "TIERSQL_API_KEY",
        timeout_s: float = 60.0,
        attempts: int = 3,
        backoff_s: float = 1.0,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self.attempts = attempts
        self.backoff_s = backoff_s
        self._sleep = sleeper

    def __call__(self, req: ChatRequest) -> ChatResponse:
        import requests

        key = os.environ.get(self.api_key_env, "")
        body = {
            "model": req.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
        }
        if req.max_tokens is not None:
            body["max_tokens"] = req.max_tokens

        last_error: Exception | None = None
        for attempt in range(self.attempts):
            if attempt:
                self._sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                resp = requests.post(
                    f"{self.base_url}/chat/completions",
                    json=body,
                    headers={"Authorization": f"Bearer {key}"},
                    timeout=self.timeout_s,
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code in self.RETRYABLE_STATUS:
                last_error = ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                continue
            if resp.status_code != 200:
                raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return _decode_payload(req, resp.text)
        raise ProviderError(f"provider failed after {self.attempts} attempts: {last_error}")


def _decode_payload(req: ChatRequest, payload: str) -> ChatResponse:
    try:
        data = json.loads(payload)
        text = data["choices"][0]["message"]["content"]
    except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
        raise DecodeError(f"malformed provider payload: {exc}") from exc
    if not isinstance(text, str):
        raise DecodeError("completion content is not a string")
    usage = data.get("usage") or {}
    prompt_tokens = usage.get("prompt_tokens")
    completion_tokens = usage.get("completion_tokens")
    if isinstance(prompt_tokens, int) and isinstance(completion_tokens, int):
        return ChatResponse(text, TokenUsage(prompt_tokens, completion_tokens))
    return ChatResponse(text, estimate_usage(req, text), usage_estimated=True)


class Gateway:
    """Mode-aware completion front-end shared by all phases.

    Shareable across concurrent workers: provider calls are throttled by a
    semaphore (at most ``concurrency`` in flight) and cache writes go through
    atomic rename, single-writer-per-key with identical content by
    construction.
    """

    def __init__(
        self,
        mode: GatewayMode,
        cache_dir: str | Path | None = None,
        provider: Provider | None = None,
        concurrency: int = 4,
    ):
        self.mode = GatewayMode(mode)
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.provider = provider
        if self.mode is not GatewayMode.REPLAY_STRICT and provider is None:
            raise ValueError(f"mode {self.mode.value} requires a provider")
        if self.mode is not GatewayMode.PASSTHROUGH and self.cache_dir is None:
            raise ValueError(f"mode {self.mode.value} requires a cache directory")
        if concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        self._gate = threading.BoundedSemaphore(concurrency)

    def complete(self, req: ChatRequest) -> ChatResponse:
        digest = canonical_key(req)
        if self.mode is GatewayMode.PASSTHROUGH:
            return self._call_provider(req)
        cached = self._read_cache(digest)
        if cached is not None:
            return cached
        if self.mode is GatewayMode.REPLAY_STRICT:
            raise StrictMissError(digest)
        resp = self._call_provider(req)
        if self.mode is GatewayMode.RECORD:
            self._write_cache(digest, req, resp)
        return resp

    def _call_provider(self, req: ChatRequest) -> ChatResponse:
        assert self.provider is not None
        with self._gate:
            resp = self.provider(req)
        if resp.usage.prompt_tokens == 0 and resp.usage.completion_tokens == 0 and resp.text:
            return ChatResponse(resp.text, estimate_usage(req, resp.text), usage_estimated=True)
        return resp

    def _cache_path(self, digest: str) -> Path:
        assert self.cache_dir is not None
        return self.cache_dir / f"{digest}.json"

    def _read_cache(self, digest: str) -> ChatResponse | None:
        path = self._cache_path(digest)
        if not path.exists():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        resp = data["response"]
        return ChatResponse(
            text=resp["text"],
            usage=TokenUsage(resp["usage"]["prompt_tokens"], resp["usage"]["completion_tokens"]),
            usage_estimated=bool(resp.get("usage_estimated", False)),
        )

    def _write_cache(self, digest: str, req: ChatRequest, resp: ChatResponse) -> None:
        # Request stored alongside the response for auditability.
        path = self._cache_path(digest)
        path.parent.mkdir(parents=True, exist_ok=True)
        record = {
            "request": {
                "model": req.model,
                "prompt": req.prompt,
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
            },
            "response": {
                "text": resp.text,
                "usage": {
                    "prompt_tokens": resp.usage.prompt_tokens,
                    "completion_tokens": resp.usage.completion_tokens,
                },
                "usage_estimated": resp.usage_estimated,
            },
        }
        tmp = path.with_suffix(f".tmp{os.getpid()}.{threading.get_ident()}")
        tmp.write_text(json.dumps(record, ensure_ascii=False, indent=1), encoding="utf-8")
        os.replace(tmp, path)
