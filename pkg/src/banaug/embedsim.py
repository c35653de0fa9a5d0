"""Sentence embeddings and cosine similarity for candidate selection.

Embeddings come from a provider: an HTTP endpoint, a precomputed vector file,
or the offline deterministic hashing embedder used in tests. The core stays
free of ML runtimes; whatever encoder produced the vectors runs elsewhere.

Precomputed/cached vector format: JSON-lines of
``{"text_sha256": hex, "dim": int, "values": [doubles]}``. JSON doubles are
emitted via repr so vectors round-trip bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import DegenerateInputError, ParameterError, ProviderError

log = logging.getLogger(__name__)


def cosine(a: np.ndarray | Sequence[float], b: np.ndarray | Sequence[float]) -> float:
    """Cosine similarity dot(a,b)/(|a||b|); exact symmetry in floating point."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.ndim != 1 or vb.ndim != 1 or va.shape != vb.shape:
        raise ParameterError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    if not (np.isfinite(va).all() and np.isfinite(vb).all()):
        raise DegenerateInputError("non-finite embedding entries")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine undefined for all-zero vector")
    return float(np.dot(va, vb) / (na * nb))


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class EmbeddingProvider(Protocol):
    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class HashingEmbedder:
    """Deterministic offline embedder: hashed character-3-gram bag, L2-normalized.

    Stable across platforms (buckets come from blake2b, not the process hash),
    so tests comparing vectors byte-for-byte stay meaningful. Text is padded
    with boundary markers so no non-empty input maps to the zero vector.
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ParameterError("dim must be >= 1")
        self.dim = dim
        self.calls = 0  # provider-call instrumentation for cache tests

    def _embed_one(self, text: str) -> np.ndarray:
        if not text:
            raise DegenerateInputError("cannot embed empty text")
        padded = f"\x02{text}\x03"
        vec = np.zeros(self.dim, dtype=np.float64)
        for i in range(len(padded) - 2):
            gram = padded[i: i + 3]
            h = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
            vec[int.from_bytes(h, "big") % self.dim] += 1.0
        return vec / np.linalg.norm(vec)

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        self.calls += 1
        return [self._embed_one(t) for t in texts]


class PrecomputedFileProvider:
    """Looks vectors up in a JSON-lines file keyed by text SHA-256."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._vectors = load_vector_file(self.path)
        self.calls = 0

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        self.calls += 1
        digests = [text_digest(t) for t in texts]
        missing = sorted({d for d in digests if d not in self._vectors})
        if missing:
            raise ProviderError(
                f"precomputed file {self.path} lacks vector(s) for digest(s): "
                + ", ".join(missing)
            )
        return [self._vectors[d].copy() for d in digests]


class HTTPEmbeddingProvider:
    """POSTs to ``{url}/embeddings`` with ``{"model": ..., "input": [texts]}``.

    Vectors are read back in input order from the de-facto response shape
    (``data[i].embedding``). Auth is a bearer token from the named env var.
    """

    def __init__(self, url: str, model: str, api_key_env: str = "EMBED_API_KEY",
                 timeout: float = 60.0, max_retries: int = 3,
                 batch_size: int = 64, max_inflight: int = 4, transport=None):
        self.url = url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.batch_size = max(1, batch_size)
        self.max_inflight = max(1, max_inflight)
        self.transport = transport or _requests_post
        self.calls = 0

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise ProviderError(f"environment variable {self.api_key_env} is not set")
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def _embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        from .genclient import request_with_retries  # shared backoff policy

        status, body = request_with_retries(
            self.transport,
            f"{self.url}/embeddings",
            self._headers(),
            {"model": self.model, "input": list(texts)},
            timeout=self.timeout,
            max_retries=self.max_retries,
        )
        try:
            data = json.loads(body)["data"]
            vectors = [np.asarray(item["embedding"], dtype=np.float64) for item in data]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed embeddings response: {exc}") from exc
        if len(vectors) != len(texts):
            raise ProviderError(
                f"embeddings response has {len(vectors)} vectors for {len(texts)} inputs"
            )
        return vectors

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        self.calls += 1
        batches = [texts[i: i + self.batch_size] for i in range(0, len(texts), self.batch_size)]
        with ThreadPoolExecutor(max_workers=self.max_inflight) as pool:
            results = list(pool.map(self._embed_batch, batches))
        return [v for batch in results for v in batch]


def load_vector_file(path: str | Path) -> dict[str, np.ndarray]:
    vectors: dict[str, np.ndarray] = {}
    path = Path(path)
    if not path.exists():
        return vectors
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                vec = np.asarray(rec["values"], dtype=np.float64)
                if len(vec) != rec["dim"]:
                    raise ValueError("dim field disagrees with values length")
                vectors[rec["text_sha256"]] = vec
            except (ValueError, KeyError) as exc:
                raise ProviderError(f"corrupt vector file {path}: {exc}") from exc
    return vectors


def append_vectors(path: str | Path, items: Iterable[tuple[str, np.ndarray]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        for digest, vec in items:
            fh.write(json.dumps(
                {"text_sha256": digest, "dim": int(len(vec)), "values": [float(x) for x in vec]}
            ) + "\n")
        fh.flush()


def embed(texts: Sequence[str], provider: EmbeddingProvider,
          cache_path: str | Path | None = None) -> list[np.ndarray]:
    """One vector per text, order-preserving, with optional on-disk caching.

    Duplicate texts share one provider slot. Cached vectors are returned
    bitwise-identical to what the provider originally produced; a fully warm
    cache means zero provider calls.
    """
    digests = [text_digest(t) for t in texts]
    cached = load_vector_file(cache_path) if cache_path else {}

    miss_digests: list[str] = []
    miss_texts: list[str] = []
    seen: set[str] = set()
    for t, d in zip(texts, digests):
        if d not in cached and d not in seen:
            seen.add(d)
            miss_digests.append(d)
            miss_texts.append(t)

    if miss_texts:
        fresh = provider.embed_many(miss_texts)
        if len(fresh) != len(miss_texts):
            raise ProviderError("provider returned wrong number of vectors")
        for d, v in zip(miss_digests, fresh):
            cached[d] = np.asarray(v, dtype=np.float64)
        if cache_path:
            append_vectors(cache_path, zip(miss_digests, (cached[d] for d in miss_digests)))

    out = [cached[d] for d in digests]
    dims = {len(v) for v in out}
    if len(dims) > 1:
        raise ProviderError(f"embedding dimension drift within one run: {sorted(dims)}")
    for v in out:
        if not np.isfinite(v).all():
            raise ProviderError("provider returned non-finite embedding entries")
    return [v.copy() for v in out]


def _requests_post(url: str, headers: dict, payload: dict, timeout: float):
    """Default transport: (status_code, body_text) via requests."""
    import requests

    try:
        resp = requests.post(url, headers=headers, json=payload, timeout=timeout)
    except requests.Timeout:
        return 0, "timeout"  # status 0 = transport-level timeout
    except requests.RequestException as exc:
        return 0, f"connection error: {exc}"
    return resp.status_code, resp.text
