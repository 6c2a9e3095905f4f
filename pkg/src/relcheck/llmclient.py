"""Chat-completion client with a content-addressed response cache.

Only this module touches the network. Cached prompts never reach it, so a warm
cache replays a whole run offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from collections.abc import Callable, Iterable, Mapping
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any

import httpx

log = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 409, 425, 429}) | frozenset(range(500, 600))


class JobStatus(str, Enum):
    PENDING = "pending"
    DONE = "done"
    FAILED = "failed"


class MissingCredentialError(RuntimeError):
    pass


class RequestFailed(RuntimeError):
    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


@dataclass(frozen=True)
class EndpointConfig:
    endpoint_url: str = "https://api.openai.com/v1/chat/completions"
    api_key_env: str = "OPENAI_API_KEY"
    model_name: str = "gpt-4o"
    parallelism: int = 4
    temperature: float = 0.0
    max_tokens: int = 2048
    timeout: float = 120.0
    max_retries: int = 5
    backoff_base: float = 1.0
    backoff_cap: float = 60.0

    def __post_init__(self) -> None:
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @property
    def params(self) -> dict[str, Any]:
        return {"temperature": self.temperature, "max_tokens": self.max_tokens}

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> EndpointConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**dict(data))

    @classmethod
    def from_file(cls, path: str | Path) -> EndpointConfig:
        return cls.from_mapping(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class QueryJob:
    task_id: str
    prompt: str
    model_name: str
    params: dict[str, Any] = field(default_factory=dict)
    status: JobStatus = JobStatus.PENDING
    response: str | None = None
    error: str | None = None
    attempts: int = 0
    cached: bool = False

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {"task_id": self.task_id, "raw": self.response, "status": self.status.value}
        if self.error is not None:
            rec["error"] = self.error
        return rec


def cache_key(model_name: str, prompt: str, params: Mapping[str, Any]) -> str:
    prompt_hash = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
    blob = json.dumps({"model": model_name, "prompt_sha256": prompt_hash, "params": dict(params)},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ResponseCache:
    """Files at ``<root>/<model>/<key[:2]>/<key>.json``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, model_name: str, key: str) -> Path:
        safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in model_name) or "_"
        return self.root / safe / key[:2] / f"{key}.json"

    def get(self, model_name: str, prompt: str, params: Mapping[str, Any]) -> str | None:
        p = self.path(model_name, cache_key(model_name, prompt, params))
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError):
            log.warning("unreadable cache entry %s; ignoring", p)
            return None
        return data.get("response")

    def put(self, model_name: str, prompt: str, params: Mapping[str, Any], response: str) -> Path:
        key = cache_key(model_name, prompt, params)
        p = self.path(model_name, key)
        p.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "model": model_name,
            "params": dict(params),
            "prompt": prompt,
            "prompt_sha256": hashlib.sha256(prompt.encode("utf-8")).hexdigest(),
            "response": response,
        }
        fd, tmp = tempfile.mkstemp(dir=p.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(entry, fh, sort_keys=True, ensure_ascii=False, indent=1)
            fh.write("\n")
        os.replace(tmp, p)
        return p


@dataclass
class BatchStats:
    cache_hits: int = 0
    network_calls: int = 0
    retries: int = 0
    failed: int = 0
    max_in_flight: int = 0


class ChatClient:
    def __init__(
        self,
        config: EndpointConfig,
        *,
        api_key: str | None = None,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        key = api_key if api_key is not None else os.environ.get(config.api_key_env)
        if not key:
            raise MissingCredentialError(f"set ${config.api_key_env} to query {config.endpoint_url}")
        self._http = httpx.Client(
            transport=transport, timeout=config.timeout,
            headers={"Authorization": f"Bearer {key}", "Content-Type": "application/json"},
        )
        self._sleep = sleep
        self._lock = threading.Lock()
        self._in_flight = 0
        self.stats = BatchStats()

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> ChatClient:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def _backoff(self, attempt: int) -> float:
        return min(self.config.backoff_cap, self.config.backoff_base * 2 ** attempt)

    def complete(self, prompt: str, model_name: str | None = None, params: Mapping[str, Any] | None = None
                 ) -> tuple[str, int]:
        """Returns (content, attempts). Raises :class:`RequestFailed` once retries run out."""
        cfg = self.config
        body = {
            "model": model_name or cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            **(dict(params) if params is not None else cfg.params),
        }
        attempt = 0
        while True:
            attempt += 1
            with self._lock:
                self._in_flight += 1
                self.stats.network_calls += 1
                self.stats.max_in_flight = max(self.stats.max_in_flight, self._in_flight)
            try:
                resp = self._http.post(cfg.endpoint_url, json=body)
                problem = None if resp.status_code < 400 else f"HTTP {resp.status_code}"
                retryable = resp.status_code in RETRYABLE_STATUS
            except httpx.TransportError as exc:
                resp, problem, retryable = None, f"{type(exc).__name__}: {exc}", True
            finally:
                with self._lock:
                    self._in_flight -= 1
            if problem is None:
                try:
                    return resp.json()["choices"][0]["message"]["content"], attempt
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise RequestFailed(f"malformed response: {exc!r}", attempt) from None
            if not retryable or attempt > cfg.max_retries:
                raise RequestFailed(problem, attempt)
            with self._lock:
                self.stats.retries += 1
            self._sleep(self._backoff(attempt - 1))


def make_jobs(records: Iterable[Mapping[str, Any]], config: EndpointConfig) -> list[QueryJob]:
    """Jobs from ``gen-prompts`` records ``{task_id, prompt}``; task ids must be unique."""
    jobs, seen = [], set()
    for rec in records:
        tid = rec["task_id"]
        if tid in seen:
            raise ValueError(f"duplicate task_id {tid!r}")
        seen.add(tid)
        jobs.append(QueryJob(tid, rec["prompt"], config.model_name, config.params))
    return jobs


def run_batch(
    jobs: Iterable[QueryJob],
    config: EndpointConfig,
    cache: ResponseCache,
    *,
    client: ChatClient | None = None,
    client_factory: Callable[[], ChatClient] | None = None,
) -> tuple[list[QueryJob], BatchStats]:
    """Resolve every job from the cache or the endpoint; failures are recorded, not raised.

    A client (and so a credential) is only needed when something misses the cache.
    Responses are written to the cache from the calling thread only.
    """
    jobs = [replace(j) for j in jobs]
    stats = BatchStats()
    misses = []
    for j in jobs:
        hit = cache.get(j.model_name, j.prompt, j.params)
        if hit is not None:
            j.response, j.status, j.cached = hit, JobStatus.DONE, True
            stats.cache_hits += 1
        else:
            misses.append(j)
    if not misses:
        return jobs, stats

    own = client is None
    if client is None:
        client = client_factory() if client_factory else ChatClient(config)
    before = replace(client.stats)
    try:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            pending = {pool.submit(client.complete, j.prompt, j.model_name, j.params): j for j in misses}
            while pending:
                done, _ = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    j = pending.pop(fut)
                    try:
                        j.response, j.attempts = fut.result()
                        j.status = JobStatus.DONE
                        cache.put(j.model_name, j.prompt, j.params, j.response)
                    except RequestFailed as exc:
                        j.status, j.error, j.attempts = JobStatus.FAILED, str(exc), exc.attempts
                        stats.failed += 1
                        log.warning("job %s failed after %d attempts: %s", j.task_id, exc.attempts, exc)
    finally:
        if own:
            client.close()
    stats.network_calls = client.stats.network_calls - before.network_calls
    stats.retries = client.stats.retries - before.retries
    stats.max_in_flight = client.stats.max_in_flight
    return jobs, stats
