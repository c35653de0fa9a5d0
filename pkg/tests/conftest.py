"""Shared corpus factories for the test suite."""

from __future__ import annotations

import csv
import random
from pathlib import Path

import pytest

from banaug.corpus import Article, Corpus, Label, Provenance

_WORDS = (
    "city council vote budget river bridge market школа report minister storm "
    "harvest port railway election festival clinic village road tax academy"
).split()


def art(i: int, label: Label, content: str | None = None, category: str = "national",
        provenance: Provenance = Provenance.ORIGINAL, parent_id: str | None = None,
        headline: str | None = None) -> Article:
    rng = random.Random(i)
    if content is None:
        words = rng.choices(_WORDS, k=12)
        content = " ".join(words) + f" item {i}."
    return Article(
        id=f"a{i}",
        headline=headline if headline is not None else f"headline {i}",
        content=content,
        category=category,
        label=label,
        provenance=provenance,
        parent_id=parent_id,
    )


def make_corpus(n_real: int, n_fake: int, categories: tuple[str, ...] = ("national",),
                start: int = 0, name: str = "toy") -> Corpus:
    articles = []
    i = start
    for _ in range(n_real):
        articles.append(art(i, Label.REAL, category=categories[i % len(categories)]))
        i += 1
    for _ in range(n_fake):
        articles.append(art(i, Label.FAKE, category=categories[i % len(categories)]))
        i += 1
    return Corpus(articles, name=name)


def write_corpus_csv(path: Path, rows: list[dict], header: list[str] | None = None) -> Path:
    header = header or ["id", "headline", "content", "category", "label"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)
    return path


@pytest.fixture
def tiny_fake_real_corpus() -> Corpus:
    return make_corpus(6, 4)
