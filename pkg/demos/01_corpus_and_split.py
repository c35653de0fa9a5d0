#!/usr/bin/env python3
"""Load a labeled news corpus from CSV, split it, and inspect composition.

The split is stratified and deterministic: the same corpus, fraction and
seed always give back the same membership, and every stratum lands within
one article of its proportional share.
"""

import random
import tempfile
from pathlib import Path

from banaug.corpus import SplitSpec, composition, load_csv, stratified_split, write_csv
from banaug.corpus import Article, Corpus, Label

rng = random.Random(7)
words = "council storm port vote market school bridge clinic".split()


def doc(i):
    return " ".join(rng.choices(words, k=10)) + f" item {i}."


articles = [
    Article(id=f"n{i}", headline=f"headline {i}", content=doc(i),
            category=("politics", "sports")[i % 2],
            label=Label.REAL if i % 5 else Label.FAKE)
    for i in range(200)
]
corpus = Corpus(articles, name="demo")

print(f"corpus: {len(corpus)} articles, labels {corpus.label_counts()}")

# round-trip through the CSV dialect
with tempfile.TemporaryDirectory() as tmp:
    path = write_csv(corpus, Path(tmp) / "demo.csv")
    corpus = load_csv(path)
    print(f"written and re-loaded from {path.name}: {len(corpus)} articles")

train, test = stratified_split(
    corpus, SplitSpec(0.7, strata=("label", "category"), seed=42)
)
print(f"train: {len(train)}  test: {len(test)}")
print("train composition (label, provenance) -> count:")
for (label, prov), n in sorted(composition(train).items()):
    print(f"  ({label.name}, {prov.value}): {n}")

train2, _ = stratified_split(corpus, SplitSpec(0.7, strata=("label", "category"), seed=42))
print(f"same spec reproduces the same split: {train.ids() == train2.ids()}")
