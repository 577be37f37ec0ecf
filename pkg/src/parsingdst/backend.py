"""Language-model backends: an OpenAI-compatible HTTP client and a replay table.

Fixture and cache files are newline-delimited JSON records
``{"key": sha256(prompt), "completion": str, "meta": {...}}``.
"""
from __future__ import annotations

import functools
import hashlib
import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import httpx

from .errors import BackendTimeout, FixtureMiss, MissingFile, RemoteError, SchemaViolation
from .schema import STOP_TOKEN

logger = logging.getLogger(__name__)

API_KEY_ENV = "LLM_API_KEY"
DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
RETRYABLE_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "replay"  # "remote" | "replay"
    model: str = "gpt-3.5-turbo"
    endpoint: str = DEFAULT_ENDPOINT
    temperature: float = 0.0
    stop: Tuple[str, ...] = (STOP_TOKEN,)
    max_retries: int = 3
    timeout: float = 60.0
    fixture_path: Optional[str] = None
    cache_path: Optional[str] = None
    max_in_flight: int = 4
    max_tokens: Optional[int] = None
    backoff_base: float = 1.0

    def __post_init__(self):
        if self.kind not in ("remote", "replay"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "replay" and not self.fixture_path:
            raise ValueError("replay backend needs a fixture path")
        if self.max_retries < 0 or self.max_in_flight < 1:
            raise ValueError("max_retries must be >= 0 and max_in_flight >= 1")


def prompt_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def load_fixtures(path) -> Dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"fixture file not found: {path}")
    table = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key, completion = rec["key"], rec["completion"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise SchemaViolation(f"{path}:{lineno}: not a fixture record") from None
            if key in table and table[key] != completion:
                raise SchemaViolation(f"{path}:{lineno}: conflicting duplicate key {key}")
            table[key] = completion
    return table


def append_fixture(path, prompt: str, completion: str, meta=None) -> None:
    rec = {"key": prompt_key(prompt), "completion": completion, "meta": meta or {}}
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


class ReplayBackend:
    def __init__(self, fixture_path):
        self.fixture_path = fixture_path
        self.table = load_fixtures(fixture_path)

    def translate(self, prompt: str) -> str:
        key = prompt_key(prompt)
        try:
            return self.table[key]
        except KeyError:
            raise FixtureMiss(key, prompt) from None


class RemoteBackend:
    """Chat-completions client with retry, an in-flight cap and a replayable cache."""

    def __init__(self, cfg: BackendConfig, transport: Optional[httpx.BaseTransport] = None,
                 sleep=time.sleep):
        self.cfg = cfg
        self._client = httpx.Client(timeout=cfg.timeout, transport=transport)
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(cfg.max_in_flight)
        self._cache_lock = threading.Lock()
        self._cached = set()
        if cfg.cache_path and Path(cfg.cache_path).is_file():
            self._cached = set(load_fixtures(cfg.cache_path))

    @property
    def completion_style(self) -> bool:
        path = httpx.URL(self.cfg.endpoint).path.rstrip("/")
        return path.endswith("/completions") and not path.endswith("/chat/completions")

    def request_body(self, prompt: str) -> bytes:
        cfg = self.cfg
        payload = {"model": cfg.model, "temperature": cfg.temperature, "stop": list(cfg.stop)}
        if self.completion_style:
            payload["prompt"] = prompt
        else:
            payload["messages"] = [{"role": "user", "content": prompt}]
        if cfg.max_tokens is not None:
            payload["max_tokens"] = cfg.max_tokens
        return json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")

    def _headers(self):
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(API_KEY_ENV)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _extract(self, data) -> str:
        try:
            choice = data["choices"][0]
            if self.completion_style:
                return choice["text"]
            return choice["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise RemoteError(f"unexpected response shape: {str(data)[:200]}", status=200) from None

    def _backoff(self, attempt):
        delay = self.cfg.backoff_base * (2 ** attempt)
        self._sleep(delay + random.uniform(0, delay / 2))

    def translate(self, prompt: str) -> str:
        body = self.request_body(prompt)
        last_status, last_exc, timed_out = None, None, False
        with self._slots:
            for attempt in range(self.cfg.max_retries + 1):
                try:
                    resp = self._client.post(self.cfg.endpoint, content=body, headers=self._headers())
                except httpx.TimeoutException as e:
                    last_exc, timed_out, last_status = e, True, None
                except httpx.TransportError as e:
                    last_exc, timed_out, last_status = e, False, None
                else:
                    if resp.status_code == 200:
                        text = self._extract(resp.json())
                        self._remember(prompt, text)
                        return text
                    last_status, timed_out = resp.status_code, False
                    last_exc = RemoteError(f"HTTP {resp.status_code}: {resp.text[:200]}", resp.status_code)
                    if resp.status_code not in RETRYABLE_STATUS:
                        raise last_exc
                logger.warning("remote attempt %d/%d failed: %s", attempt + 1, self.cfg.max_retries + 1, last_exc)
                if attempt < self.cfg.max_retries:
                    self._backoff(attempt)
        attempts = self.cfg.max_retries + 1
        if timed_out:
            raise BackendTimeout(f"timed out after {attempts} attempts")
        raise RemoteError(f"request failed after {attempts} attempts: {last_exc}", last_status)

    def _remember(self, prompt, text):
        if not self.cfg.cache_path:
            return
        key = prompt_key(prompt)
        with self._cache_lock:
            if key in self._cached:
                return
            append_fixture(self.cfg.cache_path, prompt, text, {"model": self.cfg.model})
            self._cached.add(key)

    def close(self):
        self._client.close()


def make_backend(cfg: BackendConfig, **kwargs):
    if cfg.kind == "replay":
        return ReplayBackend(cfg.fixture_path)
    return RemoteBackend(cfg, **kwargs)


@functools.lru_cache(maxsize=8)
def _shared_backend(cfg: BackendConfig):
    return make_backend(cfg)


def translate(prompt: str, cfg: BackendConfig) -> str:
    return _shared_backend(cfg).translate(prompt)
