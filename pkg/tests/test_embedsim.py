import json

import numpy as np
import pytest

from banaug.embedsim import (
    HashingEmbedder,
    HTTPEmbeddingProvider,
    PrecomputedFileProvider,
    append_vectors,
    cosine,
    embed,
    text_digest,
)
from banaug.errors import DegenerateInputError, ParameterError, ProviderError


class TestCosine:
    def test_self_similarity(self):
        assert cosine([0.3, -0.4], [0.3, -0.4]) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_analytic_value(self):
        assert cosine([1.0, 0.0], [1.0, 1.0]) == pytest.approx(0.70710678, abs=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(ParameterError):
            cosine([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_zero_vector(self):
        with pytest.raises(DegenerateInputError):
            cosine([0.0, 0.0], [1.0, 0.0])

    def test_symmetry_exact(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            a = rng.normal(size=16)
            b = rng.normal(size=16)
            assert cosine(a, b) == cosine(b, a)

    def test_scale_invariance_of_ranking(self):
        rng = np.random.default_rng(4)
        src = rng.normal(size=32)
        pool = [rng.normal(size=32) for _ in range(5)]
        base = [cosine(src, v) for v in pool]
        scaled = [cosine(src * 3.5, v * 0.2) for v in pool]
        assert np.argsort(base).tolist() == np.argsort(scaled).tolist()
        for x, y in zip(base, scaled):
            assert x == pytest.approx(y, abs=1e-12)

    def test_bounds_hold_with_slack(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            a = rng.normal(size=8) * 10.0 ** float(rng.integers(-3, 3))
            b = rng.normal(size=8) * 10.0 ** float(rng.integers(-3, 3))
            assert -1.0 - 1e-9 <= cosine(a, b) <= 1.0 + 1e-9


class TestHashingEmbedder:
    def test_deterministic_and_normalized(self):
        emb = HashingEmbedder(dim=64)
        v1, = emb.embed_many(["some text"])
        v2, = HashingEmbedder(dim=64).embed_many(["some text"])
        assert np.array_equal(v1, v2)
        assert np.linalg.norm(v1) == pytest.approx(1.0, abs=1e-12)

    def test_short_text_not_zero(self):
        emb = HashingEmbedder(dim=32)
        v, = emb.embed_many(["a"])
        assert np.linalg.norm(v) > 0

    def test_empty_text_rejected(self):
        with pytest.raises(DegenerateInputError):
            HashingEmbedder().embed_many([""])


class TestEmbedCaching:
    def test_duplicates_identical(self, tmp_path):
        emb = HashingEmbedder(dim=32)
        vecs = embed(["x y z", "other", "x y z"], emb)
        assert np.array_equal(vecs[0], vecs[2])

    def test_warm_cache_zero_provider_calls(self, tmp_path):
        cache = tmp_path / "vectors.jsonl"
        emb = HashingEmbedder(dim=32)
        first = embed(["alpha beta", "gamma"], emb, cache_path=cache)
        assert emb.calls == 1
        second = embed(["alpha beta", "gamma"], emb, cache_path=cache)
        assert emb.calls == 1  # no new provider call
        for a, b in zip(first, second):
            assert np.array_equal(a, b)  # bitwise equality through the cache

    def test_cache_appends_only_misses(self, tmp_path):
        cache = tmp_path / "vectors.jsonl"
        emb = HashingEmbedder(dim=16)
        embed(["one"], emb, cache_path=cache)
        embed(["one", "two"], emb, cache_path=cache)
        lines = cache.read_text().strip().splitlines()
        assert len(lines) == 2
        recs = [json.loads(l) for l in lines]
        assert {r["text_sha256"] for r in recs} == {text_digest("one"), text_digest("two")}
        assert all(r["dim"] == 16 for r in recs)


class TestHTTPProvider:
    def provider(self, transport, **kw):
        return HTTPEmbeddingProvider(url="http://emb.test/v1", model="enc-model",
                                     api_key_env="TEST_EMB_KEY", transport=transport, **kw)

    def test_payload_shape_and_input_order(self, monkeypatch):
        monkeypatch.setenv("TEST_EMB_KEY", "k")
        captured = {}

        def transport(url, headers, payload, timeout):
            captured.update(url=url, headers=headers, payload=payload)
            vectors = [[float(i), 0.5] for i, _ in enumerate(payload["input"])]
            return 200, json.dumps({"data": [{"embedding": v} for v in vectors]})

        vecs = self.provider(transport).embed_many(["first", "second", "third"])
        assert captured["url"] == "http://emb.test/v1/embeddings"
        assert captured["payload"] == {"model": "enc-model",
                                       "input": ["first", "second", "third"]}
        assert captured["headers"]["Authorization"] == "Bearer k"
        assert [v[0] for v in vecs] == [0.0, 1.0, 2.0]

    def test_transient_retry_then_success(self, monkeypatch):
        monkeypatch.setenv("TEST_EMB_KEY", "k")
        calls = {"n": 0}

        def transport(url, headers, payload, timeout):
            calls["n"] += 1
            if calls["n"] == 1:
                return 429, "slow down"
            return 200, json.dumps({"data": [{"embedding": [1.0]}]})

        provider = self.provider(transport)
        # shrink the backoff so the test stays fast
        from banaug import genclient

        orig = genclient.request_with_retries

        def fast(*args, **kw):
            kw["backoff_base"] = 0.0
            return orig(*args, **kw)

        monkeypatch.setattr("banaug.genclient.request_with_retries", fast)
        vecs = provider.embed_many(["x"])
        assert calls["n"] == 2 and len(vecs) == 1

    def test_hard_failure_raises_provider_error(self, monkeypatch):
        monkeypatch.setenv("TEST_EMB_KEY", "k")
        with pytest.raises(ProviderError, match="403"):
            self.provider(lambda *a: (403, "forbidden")).embed_many(["x"])

    def test_missing_api_key(self, monkeypatch):
        monkeypatch.delenv("TEST_EMB_KEY", raising=False)
        with pytest.raises(ProviderError, match="TEST_EMB_KEY"):
            self.provider(lambda *a: (200, "{}")).embed_many(["x"])

    def test_count_mismatch_detected(self, monkeypatch):
        monkeypatch.setenv("TEST_EMB_KEY", "k")
        transport = lambda *a: (200, json.dumps({"data": [{"embedding": [1.0]}]}))
        with pytest.raises(ProviderError, match="1 vectors for 2"):
            self.provider(transport).embed_many(["a", "b"])


class TestPrecomputedFile:
    def test_lookup_and_missing_digest(self, tmp_path):
        path = tmp_path / "pre.jsonl"
        emb = HashingEmbedder(dim=8)
        v, = emb.embed_many(["known text"])
        append_vectors(path, [(text_digest("known text"), v)])
        provider = PrecomputedFileProvider(path)
        got, = provider.embed_many(["known text"])
        assert np.array_equal(got, v)
        with pytest.raises(ProviderError) as exc:
            provider.embed_many(["unknown text"])
        assert text_digest("unknown text") in str(exc.value)

    def test_dimension_drift_detected(self, tmp_path):
        path = tmp_path / "pre.jsonl"
        append_vectors(path, [
            (text_digest("a a a"), np.ones(4)),
            (text_digest("b b b"), np.ones(6)),
        ])
        provider = PrecomputedFileProvider(path)
        with pytest.raises(ProviderError, match="drift"):
            embed(["a a a", "b b b"], provider)
