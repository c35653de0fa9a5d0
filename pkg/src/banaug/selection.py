"""Choosing K of N generated candidates per source article.

Two strategies: uniform random without replacement, and top-K by cosine
similarity to the source. An optional minimum-similarity floor filters the
pool before either strategy runs. Pools that cannot supply K candidates
yield an explicit shortfall; nothing is ever padded by resampling.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Article, derive_seed
from .embedsim import EmbeddingProvider, cosine, embed
from .errors import ParameterError
from .genclient import GenRecord
from .prompting import ParseStatus

log = logging.getLogger(__name__)


class Strategy(str, Enum):
    RANDOM = "random"
    SIMILARITY = "similarity"


# Documented preset for the tight quality floor; off by default because the
# default pipeline passes all generated candidates straight to selection.
QUALITY_FLOOR_PRESET = 0.7


@dataclass(frozen=True)
class SelectionPolicy:
    strategy: Strategy
    k: int
    seed: int = 0
    min_similarity: float | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        if self.min_similarity is not None and not -1.0 <= self.min_similarity <= 1.0:
            raise ParameterError("min_similarity must lie in [-1, 1]")


@dataclass(frozen=True)
class Chosen:
    text: str
    similarity: float | None = None


@dataclass(frozen=True)
class SelectedSet:
    source_id: str
    strategy: Strategy
    k: int
    chosen: tuple[Chosen, ...]
    shortfall: int

    def __post_init__(self):
        if self.shortfall < 0:
            raise ParameterError("shortfall cannot be negative")


def _eligible_indices(n: int, similarities: Sequence[float] | None,
                      floor: float | None) -> list[int]:
    if floor is None or n == 0:
        return list(range(n))
    if similarities is None:
        raise ParameterError("min_similarity set but no similarity scores supplied")
    return [i for i in range(n) if similarities[i] >= floor]


def _build_set(source_id: str, policy: SelectionPolicy, picked: list[int],
               candidates: Sequence[str],
               similarities: Sequence[float] | None) -> SelectedSet:
    chosen = tuple(
        Chosen(candidates[i], None if similarities is None else float(similarities[i]))
        for i in picked
    )
    shortfall = policy.k - len(chosen)
    if shortfall > 0:
        log.warning("source %s: pool supplied %d of k=%d candidates",
                    source_id, len(chosen), policy.k)
    return SelectedSet(
        source_id=source_id,
        strategy=policy.strategy,
        k=policy.k,
        chosen=chosen,
        shortfall=shortfall,
    )


def select_random(candidates: Sequence[str], policy: SelectionPolicy,
                  source_id: str = "", similarities: Sequence[float] | None = None
                  ) -> SelectedSet:
    """Uniform without-replacement draw of K from the (floor-filtered) pool.

    Deterministic per (pool, seed). Chosen entries keep pool order; they only
    carry similarity scores when a floor forced scoring.
    """
    if policy.strategy is not Strategy.RANDOM:
        raise ParameterError(f"select_random got strategy {policy.strategy}")
    eligible = _eligible_indices(len(candidates), similarities, policy.min_similarity)
    rng = random.Random(policy.seed)
    take = min(policy.k, len(eligible))
    picked = sorted(rng.sample(eligible, take))
    scores = similarities if policy.min_similarity is not None else None
    return _build_set(source_id, policy, picked, candidates, scores)


def select_similar(candidates: Sequence[str], source_text: str,
                   policy: SelectionPolicy, provider: EmbeddingProvider,
                   source_id: str = "",
                   cache_path: str | Path | None = None) -> SelectedSet:
    """Top-K candidates by cosine similarity to the source, scores attached.

    Ranking is stable: ties keep original candidate order. The floor filters
    before the top-K cut.
    """
    if policy.strategy is not Strategy.SIMILARITY:
        raise ParameterError(f"select_similar got strategy {policy.strategy}")
    if not candidates:
        return _build_set(source_id, policy, [], candidates, None)
    vectors = embed([source_text, *candidates], provider, cache_path=cache_path)
    src = vectors[0]
    sims = [cosine(src, v) for v in vectors[1:]]
    eligible = _eligible_indices(len(candidates), sims, policy.min_similarity)
    ranked = sorted(eligible, key=lambda i: (-sims[i], i))
    picked = ranked[: policy.k]
    return _build_set(source_id, policy, picked, candidates, sims)


def apply_policy(records: Sequence[GenRecord], policy: SelectionPolicy,
                 sources: Mapping[str, Article],
                 provider: EmbeddingProvider | None = None,
                 cache_path: str | Path | None = None) -> list[SelectedSet]:
    """Run the per-article selector over generation records, in given order.

    Each article draws from its own sub-seed derived from (policy.seed,
    source_id), so selections do not depend on corpus ordering. Failed parse
    records contribute an all-shortfall set.
    """
    needs_embeddings = policy.strategy is Strategy.SIMILARITY or policy.min_similarity is not None
    if needs_embeddings and provider is None:
        raise ParameterError("similarity scoring requested but no embedding provider given")

    out: list[SelectedSet] = []
    for rec in records:
        sub = replace(policy, seed=derive_seed(policy.seed, rec.source_id))
        pool = rec.candidate_set.candidates
        if policy.strategy is Strategy.SIMILARITY:
            source = sources[rec.source_id]
            out.append(select_similar(pool, source.content, sub, provider,
                                      source_id=rec.source_id, cache_path=cache_path))
        else:
            sims = None
            if policy.min_similarity is not None and pool:
                source = sources[rec.source_id]
                vectors = embed([source.content, *pool], provider, cache_path=cache_path)
                sims = [cosine(vectors[0], v) for v in vectors[1:]]
            out.append(select_random(pool, sub, source_id=rec.source_id, similarities=sims))
    return out


def summarize_shortfalls(records: Sequence[GenRecord],
                         sets: Sequence[SelectedSet]) -> dict[str, int]:
    """Tally shortfalls by cause for the run summary."""
    causes = {"failed_parse": 0, "small_pool": 0, "below_floor": 0}
    for rec, sel in zip(records, sets):
        if sel.shortfall == 0:
            continue
        if rec.candidate_set.parse_status is ParseStatus.FAILED:
            causes["failed_parse"] += 1
        elif len(rec.candidate_set.candidates) < sel.k:
            causes["small_pool"] += 1
        else:
            causes["below_floor"] += 1
    return causes


def selected_to_jsonl(sets: Iterable[SelectedSet], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for s in sets:
            chosen = []
            for c in s.chosen:
                item: dict = {"text": c.text}
                if c.similarity is not None:
                    item["similarity"] = c.similarity
                chosen.append(item)
            fh.write(json.dumps(
                {
                    "source_id": s.source_id,
                    "strategy": s.strategy.value,
                    "k": s.k,
                    "chosen": chosen,
                    "shortfall": s.shortfall,
                },
                ensure_ascii=False,
            ) + "\n")
    return path


def selected_from_jsonl(path: str | Path) -> list[SelectedSet]:
    out: list[SelectedSet] = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            out.append(SelectedSet(
                source_id=obj["source_id"],
                strategy=Strategy(obj["strategy"]),
                k=obj["k"],
                chosen=tuple(
                    Chosen(c["text"], c.get("similarity")) for c in obj["chosen"]
                ),
                shortfall=obj["shortfall"],
            ))
    return out
