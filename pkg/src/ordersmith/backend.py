"""Log-prob backends: the query protocol, caching/counting wrappers, HTTP client.

A backend answers one question: given a prompt and a list of candidate
next tokens, what log-probability does the model assign each candidate?

Wire format for the HTTP backend (POST to the configured URL):

    request:  {"model": str | null, "prompt": str, "candidates": [str, ...]}
    response: 200 {"log_probs": [float, ...]}   aligned with candidates
              422 {"error": str}                 non-retryable scoring failure

Transient transport failures and 5xx responses are retried 3 times with
exponential backoff before BackendUnavailableError. Endpoint and key come
from config or the ORDERSMITH_BACKEND_URL / ORDERSMITH_API_KEY env vars.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import httpx
import numpy as np

from .dist import LabelDist, LabelSpace
from .errors import (
    BackendUnavailableError,
    CacheCorruptError,
    ProtocolError,
    TokenizationError,
)

ENV_URL = "ORDERSMITH_BACKEND_URL"
ENV_KEY = "ORDERSMITH_API_KEY"


@runtime_checkable
class Backend(Protocol):
    """Anything that scores candidate next tokens for a prompt."""

    @property
    def identity(self) -> str:
        """Stable string naming this backend (part of every cache key)."""
        ...

    def query(self, prompt: str, candidates: Sequence[str]) -> list[float]:
        """Log-probabilities aligned with candidates."""
        ...


def _validate_log_probs(log_probs: Sequence[float], n_candidates: int) -> list[float]:
    vals = [float(v) for v in log_probs]
    if len(vals) != n_candidates:
        raise ProtocolError(
            f"backend returned {len(vals)} log-probs for {n_candidates} candidates"
        )
    if not all(math.isfinite(v) for v in vals):
        raise ProtocolError(f"non-finite log-prob in {vals}")
    return vals


def label_distribution(backend: Backend, prompt: str, space: LabelSpace) -> LabelDist:
    """Model label distribution: verbalizer log-probs, exp'd and renormalized."""
    log_probs = _validate_log_probs(
        backend.query(prompt, space.verbalizers), space.size
    )
    arr = np.asarray(log_probs, dtype=np.float64)
    exps = np.exp(arr - arr.max())
    return LabelDist(exps / exps.sum(), space)


def cache_key(identity: str, prompt: str, candidates: Sequence[str]) -> str:
    """Stable hex key over (backend identity, prompt, ordered candidate list)."""
    payload = json.dumps([identity, prompt, list(candidates)], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class LogProbCache:
    """Append-only log-prob store, optionally persisted one record per line.

    File record: hex key, tab, JSON array of candidate tokens, tab, JSON
    array of log-probs. Unparseable lines are skipped so interrupted writes
    never poison a resume. Reads are lock-free; appends are serialized.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._records: dict[str, list[float]] = {}
        self._lock = threading.Lock()
        self.skipped_records = 0
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            try:
                key, log_probs = self._parse_line(line)
            except CacheCorruptError:
                self.skipped_records += 1
                continue
            self._records[key] = log_probs

    @staticmethod
    def _parse_line(line: str) -> tuple[str, list[float]]:
        parts = line.split("\t")
        if len(parts) != 3:
            raise CacheCorruptError(f"expected 3 tab-separated fields, got {len(parts)}")
        key, cand_json, lp_json = parts
        try:
            candidates = json.loads(cand_json)
            log_probs = json.loads(lp_json)
        except json.JSONDecodeError as exc:
            raise CacheCorruptError(str(exc)) from exc
        if not isinstance(candidates, list) or not isinstance(log_probs, list):
            raise CacheCorruptError("fields are not JSON arrays")
        try:
            vals = [float(v) for v in log_probs]
        except (TypeError, ValueError) as exc:
            raise CacheCorruptError(str(exc)) from exc
        if not all(math.isfinite(v) for v in vals):
            raise CacheCorruptError("non-finite cached log-prob")
        return key, vals

    def get(self, key: str) -> list[float] | None:
        rec = self._records.get(key)
        return list(rec) if rec is not None else None

    def put(self, key: str, candidates: Sequence[str], log_probs: Sequence[float]) -> None:
        vals = [float(v) for v in log_probs]
        with self._lock:
            self._records[key] = vals
            if self.path is not None:
                line = "\t".join(
                    (key, json.dumps(list(candidates), ensure_ascii=False), json.dumps(vals))
                )
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    fh.flush()

    def __len__(self) -> int:
        return len(self._records)


class CachedBackend:
    """Returns byte-identical answers for repeated queries without a real call."""

    def __init__(self, backend: Backend, cache: LogProbCache):
        self._backend = backend
        self.cache = cache

    @property
    def identity(self) -> str:
        return self._backend.identity

    def query(self, prompt: str, candidates: Sequence[str]) -> list[float]:
        key = cache_key(self.identity, prompt, candidates)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        log_probs = self._backend.query(prompt, candidates)
        self.cache.put(key, candidates, log_probs)
        return list(log_probs)


class CountingBackend:
    """Counts real backend calls; optionally records the prompts it forwarded."""

    def __init__(self, backend: Backend, record_prompts: bool = False):
        self._backend = backend
        self._lock = threading.Lock()
        self.calls = 0
        self.prompts: list[str] | None = [] if record_prompts else None

    @property
    def identity(self) -> str:
        return self._backend.identity

    def query(self, prompt: str, candidates: Sequence[str]) -> list[float]:
        with self._lock:
            self.calls += 1
            if self.prompts is not None:
                self.prompts.append(prompt)
        return self._backend.query(prompt, candidates)


def with_cache(backend: Backend, cache: LogProbCache) -> CachedBackend:
    return CachedBackend(backend, cache)


def with_counter(backend: Backend, record_prompts: bool = False) -> CountingBackend:
    return CountingBackend(backend, record_prompts=record_prompts)


class HttpBackend:
    """Client for any server honoring the wire format above.

    Holds at most max_in_flight concurrent requests; callers from any number
    of threads are throttled by a semaphore.
    """

    def __init__(
        self,
        url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_start: float = 0.25,
        max_in_flight: int = 4,
        transport: httpx.BaseTransport | None = None,
    ):
        self.url = url or os.environ.get(ENV_URL)
        if not self.url:
            raise BackendUnavailableError(
                f"no backend URL configured (set {ENV_URL} or pass url=)"
            )
        self.model = model
        self.api_key = api_key or os.environ.get(ENV_KEY)
        self.max_retries = max_retries
        self.backoff_start = backoff_start
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)
        self._slots = threading.Semaphore(max_in_flight)

    @property
    def identity(self) -> str:
        return f"http:{self.url}:{self.model or ''}"

    def query(self, prompt: str, candidates: Sequence[str]) -> list[float]:
        body = {"model": self.model, "prompt": prompt, "candidates": list(candidates)}
        last_exc: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt > 0:
                time.sleep(self.backoff_start * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self._client.post(self.url, json=body)
            except httpx.HTTPError as exc:
                last_exc = exc
                continue
            if resp.status_code >= 500:
                last_exc = ProtocolError(f"server error {resp.status_code}")
                continue
            return self._parse_response(resp, len(candidates))
        raise BackendUnavailableError(
            f"backend at {self.url} unreachable after {self.max_retries} retries: {last_exc}"
        )

    @staticmethod
    def _parse_response(resp: httpx.Response, n_candidates: int) -> list[float]:
        try:
            payload = resp.json()
        except (json.JSONDecodeError, ValueError) as exc:
            raise ProtocolError(f"non-JSON response: {exc}") from exc
        if resp.status_code == 422:
            message = str(payload.get("error", "unprocessable request"))
            if "token" in message.lower():
                raise TokenizationError(message)
            raise ProtocolError(message)
        if resp.status_code != 200:
            raise ProtocolError(f"unexpected status {resp.status_code}: {payload}")
        if "log_probs" not in payload:
            raise ProtocolError(f"response missing log_probs: {payload}")
        return _validate_log_probs(payload["log_probs"], n_candidates)

    def close(self) -> None:
        self._client.close()
