#!/usr/bin/env python3
"""Generate candidate pools with the offline mock backend, then pick K of N.

Generation is cached: rerunning this script against the same cache file
makes zero new backend calls. Selection compares the two strategies on the
same pool, with and without a minimum-similarity quality floor.
"""

import tempfile
from pathlib import Path

from banaug.corpus import Article, Label
from banaug.embedsim import HashingEmbedder
from banaug.genclient import GenConfig, MockBackend, generate
from banaug.prompting import RequestTemplate
from banaug.selection import (
    QUALITY_FLOOR_PRESET,
    SelectionPolicy,
    Strategy,
    apply_policy,
    summarize_shortfalls,
)

articles = [
    Article(id=f"f{i}", headline="", category="c", label=Label.FAKE,
            content=f"the city council said news about plan {i}. "
                    f"many people found the report {i} today.")
    for i in range(4)
]

with tempfile.TemporaryDirectory() as tmp:
    cache = Path(tmp) / "candidates.jsonl"
    backend = MockBackend(seed=11)
    records = generate(articles, RequestTemplate(n_variants=5), GenConfig(),
                       cache, backend=backend)
    print(f"generated {sum(len(r.candidate_set.candidates) for r in records)} "
          f"candidates for {len(records)} articles ({backend.total_calls} backend calls)")

    rerun_backend = MockBackend(seed=11)
    generate(articles, RequestTemplate(n_variants=5), GenConfig(), cache,
             backend=rerun_backend)
    print(f"warm-cache rerun made {rerun_backend.total_calls} backend calls")

sources = {a.id: a for a in articles}
provider = HashingEmbedder(dim=256)

random_sets = apply_policy(records, SelectionPolicy(Strategy.RANDOM, k=2, seed=5), sources)
similar_sets = apply_policy(records, SelectionPolicy(Strategy.SIMILARITY, k=2, seed=5),
                            sources, provider=provider)

print("\nrandom K=2 for", articles[0].id)
for c in random_sets[0].chosen:
    print(f"  - {c.text[:64]} ...")
print("similarity K=2 for", articles[0].id)
for c in similar_sets[0].chosen:
    print(f"  - cos={c.similarity:.4f}  {c.text[:52]} ...")

floored = apply_policy(
    records,
    SelectionPolicy(Strategy.SIMILARITY, k=5, seed=5, min_similarity=QUALITY_FLOOR_PRESET),
    sources, provider=provider,
)
kept = sum(len(s.chosen) for s in floored)
print(f"\nwith the cos>{QUALITY_FLOOR_PRESET} quality floor: kept {kept} of "
      f"{sum(len(r.candidate_set.candidates) for r in records)} candidates; "
      f"shortfalls by cause: {summarize_shortfalls(records, floored)}")
