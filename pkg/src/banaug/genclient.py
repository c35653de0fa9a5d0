"""Candidate generation against a chat-completions endpoint, with an offline mock.

The client is backend-agnostic: anything with a ``complete(prompt, article,
requested_n) -> raw text`` method works. Two backends ship here: an HTTP one
speaking the de-facto chat-completions JSON shape, and a deterministic mock
for desk-scale runs. Every exchange lands in a JSON-lines cache keyed by
prompt hash, so reruns over the same inputs never hit the network twice.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from contextlib import contextmanager
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from .corpus import Article, derive_seed
from .errors import CacheLockError, ParameterError, ProviderError, ValidationError
from .prompting import (
    BEGIN_TAG,
    END_TAG,
    CandidateSet,
    ParseStatus,
    RequestTemplate,
    build_prompt,
    parse_candidates,
    sanitize_for_prompt,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenConfig:
    endpoint_url: str = ""
    model_id: str = "gemma-3-27b-it"
    temperature: float = 1.0
    max_inflight: int = 4
    max_retries: int = 3
    timeout: float = 60.0
    api_key_env: str = "GEN_API_KEY"
    backoff_base: float = 2.0  # seconds; tests shrink this

    def __post_init__(self):
        if self.max_inflight < 1:
            raise ParameterError("max_inflight must be >= 1")
        if not (self.temperature >= 0 and self.temperature == self.temperature):
            raise ParameterError("temperature must be finite and >= 0")


def prompt_hash(prompt: str, model_id: str, temperature: float) -> str:
    """SHA-256 over (model, temperature, prompt). Article ids stay out of the
    key so re-labeled or re-split corpora reuse paid generations."""
    payload = f"{model_id}\n{temperature!r}\n{prompt}".encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class GenRecord:
    source_id: str
    prompt_hash: str
    candidate_set: CandidateSet
    timestamp: str
    attempt_count: int


# ---------------------------------------------------------------------------
# backends

class TransientBackendError(Exception):
    """Retryable exchange failure: HTTP 429/5xx or a transport timeout."""

    def __init__(self, status: int, body: str = ""):
        super().__init__(f"HTTP {status}: {body[:200]}" if status else f"transport: {body[:200]}")
        self.status = status


class PermanentBackendError(Exception):
    """Non-retryable exchange failure: any other HTTP 4xx."""

    def __init__(self, status: int, body: str = ""):
        super().__init__(f"HTTP {status}: {body[:200]}")
        self.status = status


def _default_transport(url: str, headers: dict, payload: dict, timeout: float):
    import requests

    try:
        resp = requests.post(url, headers=headers, json=payload, timeout=timeout)
    except requests.Timeout:
        return 0, "timeout"
    except requests.RequestException as exc:
        return 0, f"connection error: {exc}"
    return resp.status_code, resp.text


def backoff_delay(attempt: int, base: float, rng: random.Random) -> float:
    """Exponential backoff with +-50% jitter; attempt is 1-based."""
    return base * (2 ** (attempt - 1)) * rng.uniform(0.5, 1.5)


def request_with_retries(transport, url: str, headers: dict, payload: dict,
                         timeout: float, max_retries: int,
                         backoff_base: float = 2.0,
                         sleep: Callable[[float], None] = time.sleep):
    """Single-URL POST helper used by the embeddings provider: retries
    transient statuses, raises ProviderError on any final non-2xx."""
    rng = random.Random()
    status, body = 0, ""
    for attempt in range(1, max_retries + 2):
        status, body = transport(url, headers, payload, timeout)
        if 200 <= status < 300:
            return status, body
        transient = status == 0 or status == 429 or status >= 500
        if transient and attempt <= max_retries:
            sleep(backoff_delay(attempt, backoff_base, rng))
            continue
        break
    raise ProviderError(f"request to {url} failed with HTTP {status}: {body[:200]}")


class HTTPBackend:
    """One chat-completions exchange per call; retry policy lives in generate()."""

    def __init__(self, cfg: GenConfig, transport=None):
        if not cfg.endpoint_url:
            raise ParameterError("endpoint_url required for the HTTP backend")
        self.cfg = cfg
        self.transport = transport or _default_transport

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.cfg.api_key_env)
        if not key:
            raise PermanentBackendError(
                400, f"environment variable {self.cfg.api_key_env} is not set"
            )
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def complete(self, prompt: str, article: Article, requested_n: int) -> str:
        payload = {
            "model": self.cfg.model_id,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        url = self.cfg.endpoint_url.rstrip("/") + "/chat/completions"
        status, body = self.transport(url, self._headers(), payload, self.cfg.timeout)
        if status == 0 or status == 429 or status >= 500:
            raise TransientBackendError(status, body)
        if status >= 400:
            raise PermanentBackendError(status, body)
        try:
            return json.loads(body)["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransientBackendError(0, f"malformed completion response: {exc}") from exc


# ---------------------------------------------------------------------------
# deterministic offline mock

_SYNONYMS: dict[str, tuple[str, ...]] = {
    "said": ("stated", "remarked"),
    "news": ("report", "story"),
    "big": ("large", "major"),
    "new": ("fresh", "recent"),
    "today": ("this day",),
    "people": ("citizens", "residents"),
    "government": ("administration",),
    "city": ("town", "municipality"),
    "found": ("discovered",),
    "many": ("numerous", "several"),
}

_LEADINS = (
    "Reportedly,",
    "In other words,",
    "According to the account,",
    "Sources indicate",
    "Put differently,",
    "As described,",
    "In essence,",
    "Restated:",
)

_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?।])\s+|\n+")
_WORD = re.compile(r"[A-Za-z]+")


def _rewrite_words(text: str, rng: random.Random) -> str:
    def sub(match: re.Match) -> str:
        word = match.group(0)
        options = _SYNONYMS.get(word.lower())
        if not options:
            return word
        choice = rng.choice(options)
        return choice.capitalize() if word[0].isupper() else choice

    return _WORD.sub(sub, text)


def mock_generate(article: Article, n: int, seed: int) -> CandidateSet:
    """Deterministic offline stand-in for the LLM.

    Each variant is a surface rewrite: sentence order rotated, table synonyms
    substituted with seeded choices, and a distinct lead-in phrase prepended
    (which also guarantees the n variants are pairwise distinct). The output
    goes through the real tag wrapper and parser, so the mock exercises the
    same path live responses take; the result is always a complete set.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    sentences = [s.strip() for s in _SENTENCE_BOUNDARY.split(article.content)
                 if s.strip() and re.search(r"\w", s)]
    if not sentences:
        raise ParameterError(f"article {article.id!r} has no sentences to rewrite")

    variants: list[str] = []
    for i in range(n):
        rng = random.Random(derive_seed(seed, "variant", i))
        rotated = sentences[i % len(sentences):] + sentences[: i % len(sentences)]
        body = _rewrite_words(" ".join(rotated), rng)
        lead = _LEADINS[i % len(_LEADINS)]
        cycle = i // len(_LEADINS)
        prefix = lead if cycle == 0 else f"{lead} (take {cycle + 1})"
        variants.append(sanitize_for_prompt(f"{prefix} {body}"))

    raw = "\n".join(
        f"{BEGIN_TAG}{i + 1}. {v}{END_TAG}" for i, v in enumerate(variants)
    )
    return parse_candidates(article.id, raw, n)


class MockBackend:
    """Offline backend with instrumentation for concurrency and billing tests.

    ``scripted_errors`` maps article id to a queue of exceptions raised on
    successive calls before the canned success; ``interrupt_after`` simulates
    a process kill once that many successful completions have happened.
    """

    def __init__(self, seed: int = 0, latency: float = 0.0,
                 scripted_errors: dict[str, list[Exception]] | None = None,
                 interrupt_after: int | None = None):
        self.seed = seed
        self.latency = latency
        self.scripted_errors = {k: list(v) for k, v in (scripted_errors or {}).items()}
        self.interrupt_after = interrupt_after
        self._lock = threading.Lock()
        self.inflight = 0
        self.max_inflight_seen = 0
        self.total_calls = 0
        self.successes_by_id: dict[str, int] = {}

    def complete(self, prompt: str, article: Article, requested_n: int) -> str:
        with self._lock:
            done = sum(self.successes_by_id.values())
            if self.interrupt_after is not None and done >= self.interrupt_after:
                self.interrupt_after = None  # fire once, before any new exchange
                raise KeyboardInterrupt("simulated kill")
            self.inflight += 1
            self.max_inflight_seen = max(self.max_inflight_seen, self.inflight)
            self.total_calls += 1
            queued = self.scripted_errors.get(article.id)
            pending = queued.pop(0) if queued else None
        try:
            if pending is not None:
                raise pending
            if self.latency:
                time.sleep(self.latency)
            per_article_seed = derive_seed(
                self.seed, hashlib.sha256(article.content.encode("utf-8")).hexdigest()
            )
            raw = mock_generate(article, requested_n, per_article_seed).raw_response
            with self._lock:
                self.successes_by_id[article.id] = self.successes_by_id.get(article.id, 0) + 1
            return raw
        finally:
            with self._lock:
                self.inflight -= 1


# ---------------------------------------------------------------------------
# cache: JSON-lines, one record per line, append-only

_CACHE_FIELDS = (
    "source_id", "prompt_hash", "raw_response", "candidates",
    "parse_status", "requested_n", "timestamp", "attempt_count",
)


def record_to_json(rec: GenRecord) -> str:
    cs = rec.candidate_set
    return json.dumps(
        {
            "source_id": rec.source_id,
            "prompt_hash": rec.prompt_hash,
            "raw_response": cs.raw_response,
            "candidates": list(cs.candidates),
            "parse_status": cs.parse_status.value,
            "requested_n": cs.requested_n,
            "timestamp": rec.timestamp,
            "attempt_count": rec.attempt_count,
        },
        sort_keys=True,
        ensure_ascii=False,
    )


def record_from_json(obj: dict) -> GenRecord:
    status = ParseStatus(obj["parse_status"])
    candidates = tuple(obj["candidates"])
    surplus = max(0, len(candidates) - obj["requested_n"]) if status is ParseStatus.COMPLETE else 0
    cs = CandidateSet(
        source_id=obj["source_id"],
        raw_response=obj["raw_response"],
        candidates=candidates,
        parse_status=status,
        requested_n=obj["requested_n"],
        surplus=surplus,
    )
    return GenRecord(
        source_id=obj["source_id"],
        prompt_hash=obj["prompt_hash"],
        candidate_set=cs,
        timestamp=obj["timestamp"],
        attempt_count=obj["attempt_count"],
    )


def load_cache(path: str | Path, repair: bool = False) -> dict[str, GenRecord]:
    """Load cached records keyed by prompt hash.

    A truncated trailing line (torn write from a killed run) is discarded;
    corruption anywhere else is a real error. With ``repair`` the file itself
    is truncated back to the last intact record so that subsequent appends
    land on a clean line boundary.
    """
    path = Path(path)
    records: dict[str, GenRecord] = {}
    if not path.exists():
        return records
    data = path.read_bytes()
    lines = data.split(b"\n")
    pos = 0          # start of the current line
    good_end = 0     # byte length of the intact prefix (ends on a newline)
    for i, line in enumerate(lines):
        line_end = pos + len(line)
        has_newline = line_end < len(data)
        next_pos = line_end + (1 if has_newline else 0)
        if line.strip():
            try:
                obj = json.loads(line.decode("utf-8"))
                missing = [f for f in _CACHE_FIELDS if f not in obj]
                if missing:
                    raise ValueError(f"missing fields {missing}")
                rec = record_from_json(obj)
            except (ValueError, KeyError, UnicodeDecodeError) as exc:
                tail = all(not l.strip() for l in lines[i + 1:])
                if not tail:
                    raise ValidationError(
                        f"corrupt cache line {i + 1} in {path}: {exc}"
                    ) from exc
                log.warning("discarding truncated trailing cache record in %s", path)
                if repair:
                    with path.open("r+b") as fh:
                        fh.truncate(good_end)
                break
            records[rec.prompt_hash] = rec
            if not has_newline:
                # intact record but missing its newline; a blind append would
                # merge lines, so restore the boundary when repairing
                if repair:
                    with path.open("ab") as fh:
                        fh.write(b"\n")
                next_pos = line_end
        pos = next_pos
        good_end = next_pos
    return records


@contextmanager
def cache_lock(cache_path: str | Path):
    """Advisory lock: one generate() per cache file. Stale locks from dead
    processes are reclaimed."""
    lock_path = Path(str(cache_path) + ".lock")
    lock_path.parent.mkdir(parents=True, exist_ok=True)
    for _ in range(2):
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            break
        except FileExistsError:
            try:
                holder = int(lock_path.read_text().strip() or "0")
            except (ValueError, OSError):
                holder = 0
            if holder and _pid_alive(holder):
                raise CacheLockError(
                    f"cache {cache_path} is locked by running process {holder}"
                ) from None
            lock_path.unlink(missing_ok=True)  # stale lock
    try:
        yield
    finally:
        lock_path.unlink(missing_ok=True)


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


# ---------------------------------------------------------------------------
# the generate operation

def generate(articles: Sequence[Article], template: RequestTemplate, cfg: GenConfig,
             cache_path: str | Path, backend=None,
             clock: Callable[[], datetime] | None = None,
             sleep: Callable[[float], None] = time.sleep) -> list[GenRecord]:
    """Produce one GenRecord per input article, resuming from the cache.

    Records already cached under the same prompt hash are returned without
    any backend call. New exchanges run concurrently up to ``max_inflight``
    but are appended to the cache by a single consumer, each line flushed and
    fsynced so a killed run leaves at most one torn (discardable) record.
    """
    backend = backend if backend is not None else HTTPBackend(cfg)
    clock = clock or (lambda: datetime.now(timezone.utc))
    cache_path = Path(cache_path)

    bindings = []  # (article, prompt, hash)
    for a in articles:
        prompt = build_prompt(template.bind(a))
        bindings.append((a, prompt, prompt_hash(prompt, cfg.model_id, cfg.temperature)))

    with cache_lock(cache_path):
        by_hash = load_cache(cache_path, repair=True)

        pending: dict[str, tuple[Article, str]] = {}
        for a, prompt, h in bindings:
            if h not in by_hash and h not in pending:
                pending[h] = (a, prompt)

        if pending:
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            with cache_path.open("a", encoding="utf-8") as fh:
                with ThreadPoolExecutor(max_workers=cfg.max_inflight) as pool:
                    futures = {
                        pool.submit(_one_exchange, backend, a, prompt, h,
                                    template.n_variants, cfg, clock, sleep): h
                        for h, (a, prompt) in pending.items()
                    }
                    def persist(rec: GenRecord) -> None:
                        if rec.prompt_hash in by_hash:
                            return
                        fh.write(record_to_json(rec) + "\n")
                        fh.flush()
                        os.fsync(fh.fileno())
                        by_hash[rec.prompt_hash] = rec

                    try:
                        for fut in as_completed(futures):
                            persist(fut.result())
                    except BaseException:
                        # graceful abort: persist exchanges that already
                        # completed so a resume never re-charges them
                        for f in futures:
                            f.cancel()
                        pool.shutdown(wait=True, cancel_futures=True)
                        for f in futures:
                            if f.done() and not f.cancelled():
                                try:
                                    persist(f.result())
                                except BaseException:
                                    continue
                        raise

    out = []
    for a, _prompt, h in bindings:
        rec = by_hash[h]
        out.append(rec if rec.source_id == a.id else replace(rec, source_id=a.id))
    return out


def _one_exchange(backend, article: Article, prompt: str, h: str, n: int,
                  cfg: GenConfig, clock, sleep) -> GenRecord:
    rng = random.Random()
    last_error = ""
    attempt = 0
    for attempt in range(1, cfg.max_retries + 2):
        try:
            raw = backend.complete(prompt, article, n)
        except PermanentBackendError as exc:
            log.warning("source %s: permanent failure: %s", article.id, exc)
            return _failed_record(article.id, h, str(exc), n, clock, attempt)
        except TransientBackendError as exc:
            last_error = str(exc)
            if attempt <= cfg.max_retries:
                sleep(backoff_delay(attempt, cfg.backoff_base, rng))
                continue
            break
        cs = parse_candidates(article.id, raw, n)
        if cs.parse_status is ParseStatus.FAILED and attempt <= cfg.max_retries:
            last_error = raw
            continue  # reprompt on unparseable output
        return GenRecord(
            source_id=article.id,
            prompt_hash=h,
            candidate_set=cs,
            timestamp=clock().isoformat(),
            attempt_count=attempt,
        )
    log.warning("source %s: failed after %d attempt(s)", article.id, attempt)
    return _failed_record(article.id, h, last_error, n, clock, attempt)


def _failed_record(source_id: str, h: str, raw: str, n: int, clock, attempts: int) -> GenRecord:
    cs = CandidateSet(
        source_id=source_id,
        raw_response=raw,
        candidates=(),
        parse_status=ParseStatus.FAILED,
        requested_n=n,
    )
    return GenRecord(
        source_id=source_id,
        prompt_hash=h,
        candidate_set=cs,
        timestamp=clock().isoformat(),
        attempt_count=attempts,
    )
