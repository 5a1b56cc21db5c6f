"""Chat-completion client with a live OpenAI-style HTTP backend, a
deterministic replay backend, retry/backoff, and final-answer extraction.

Transcript caches are JSONL records
{"backend": ..., "prompt_hash": ..., "response_text": ..., "finish_reason": ...};
every live response is persisted before being returned, so any live run can
be replayed offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .dataset import OptionLabel


class ClientError(RuntimeError):
    pass


class ReplayMiss(ClientError):
    """The replay transcript has no entry for a prompt hash."""


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ChatRequest:
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 1024
    tag: str = ""

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ClientError("prompt must be non-empty")
        if self.temperature < 0:
            raise ClientError("temperature must be >= 0")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    finish_reason: str = "stop"
    latency: float = 0.0
    tokens_used: int | None = None


class TranscriptCache:
    """Append-only map (backend id, prompt hash) -> response, persisted as JSONL."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._entries: dict[tuple[str, str], ChatResponse] = {}
        if self.path and self.path.exists():
            self._load()

    def _load(self) -> None:
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                key = (rec["backend"], rec["prompt_hash"])
                self._entries[key] = ChatResponse(
                    text=rec["response_text"],
                    finish_reason=rec.get("finish_reason", "stop"),
                )

    def get(self, backend: str, phash: str) -> ChatResponse | None:
        return self._entries.get((backend, phash))

    def put(self, backend: str, phash: str, response: ChatResponse) -> None:
        key = (backend, phash)
        if key in self._entries:
            return
        self._entries[key] = response
        if self.path:
            with self.path.open("a", encoding="utf-8") as fh:
                rec = {
                    "backend": backend,
                    "prompt_hash": phash,
                    "response_text": response.text,
                    "finish_reason": response.finish_reason,
                }
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    def __len__(self) -> int:
        return len(self._entries)


class Backend(Protocol):
    backend_id: str

    def complete(self, request: ChatRequest) -> ChatResponse: ...


class ReplayBackend:
    """Serves recorded responses only; a miss is an error naming the hash."""

    def __init__(self, transcript: TranscriptCache, backend_id: str = "replay"):
        self.backend_id = backend_id
        self.transcript = transcript

    def complete(self, request: ChatRequest) -> ChatResponse:
        phash = prompt_hash(request.prompt)
        response = self.transcript.get(self.backend_id, phash)
        if response is None:
            raise ReplayMiss(
                f"replay transcript has no response for prompt hash {phash} "
                f"(tag {request.tag!r})"
            )
        return response


class HTTPBackend:
    """OpenAI-style chat-completions backend."""

    def __init__(
        self,
        base_url: str,
        model_name: str,
        api_key: str | None = None,
        api_key_env: str = "METAMCQ_API_KEY",
        timeout: float = 60.0,
    ):
        self.backend_id = model_name
        self.base_url = base_url.rstrip("/")
        self.model_name = model_name
        self.api_key = api_key or os.environ.get(api_key_env, "")
        self.timeout = timeout

    def complete(self, request: ChatRequest) -> ChatResponse:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        start = time.monotonic()
        resp = requests.post(
            f"{self.base_url}/chat/completions",
            headers=headers,
            json=payload,
            timeout=self.timeout,
        )
        if resp.status_code == 401:
            raise ClientError("authentication failed (check the API key env var)")
        if resp.status_code >= 500 or resp.status_code == 429:
            raise TransientError(f"backend returned {resp.status_code}")
        resp.raise_for_status()
        body = resp.json()
        choice = body["choices"][0]
        usage = body.get("usage", {})
        return ChatResponse(
            text=choice["message"]["content"],
            finish_reason=choice.get("finish_reason", "stop"),
            latency=time.monotonic() - start,
            tokens_used=usage.get("total_tokens"),
        )


class TransientError(ClientError):
    """Retryable failure (rate limit, 5xx, connection reset)."""


@dataclass
class LLMClient:
    """Uniform completion interface with retries and transcript caching."""

    backend: Backend
    cache: TranscriptCache = field(default_factory=TranscriptCache)
    retries: int = 3
    backoff: float = 1.0

    def complete(self, request: ChatRequest) -> ChatResponse:
        phash = prompt_hash(request.prompt)
        cached = self.cache.get(self.backend.backend_id, phash)
        if cached is not None:
            return cached
        last: Exception | None = None
        for attempt in range(self.retries):
            try:
                response = self.backend.complete(request)
                self.cache.put(self.backend.backend_id, phash, response)
                return response
            except ReplayMiss:
                raise
            except TransientError as exc:
                last = exc
                if attempt < self.retries - 1:
                    time.sleep(self.backoff * 2**attempt)
        raise ClientError(
            f"backend {self.backend.backend_id!r} failed after {self.retries} attempts"
        ) from last


# Final-answer patterns for both languages; the option letter may be
# fullwidth or lowercase, with optional punctuation around it.
_ANSWER_RE = re.compile(
    r"(?:the\s+answer\s+is|答案是|答案为)\s*[:：]?\s*[\"'“”‘’(（\[【]?\s*([A-D])",
    re.IGNORECASE,
)
_BARE_RE = re.compile(r"^([A-D])\s*[.。．!！]?$", re.IGNORECASE)


def extract_answer(text: str) -> OptionLabel | None:
    """Pull the final answer letter out of a model response.

    Scans for "The answer is X" / "答案是X"; the last occurrence wins.
    A response that is exactly one option letter counts as that letter.
    Returns None when no pattern matches (absence is a value).
    """
    if not text:
        return None
    # NFKC folds fullwidth letters/punctuation to their ASCII forms.
    normalized = unicodedata.normalize("NFKC", text)
    matches = _ANSWER_RE.findall(normalized)
    if matches:
        return OptionLabel(matches[-1].upper())
    bare = _BARE_RE.match(normalized.strip())
    if bare:
        return OptionLabel(bare.group(1).upper())
    return None
