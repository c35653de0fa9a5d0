"""Labeled news corpora: loading, validation, stratified splitting, composition.

A corpus is an ordered, immutable collection of articles. Each article is
either an original document or a synthetic paraphrase that points back at its
original parent. All downstream stages treat this module as the single source
of truth for dataset provenance.
"""

from __future__ import annotations

import csv
import hashlib
import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import (
    ParameterError,
    ProvenanceError,
    RowError,
    SchemaError,
    ValidationError,
)


class Label(IntEnum):
    """Binary document label. Integer codes are fixed: 0 = fake, 1 = real."""

    FAKE = 0
    REAL = 1


class Provenance(str, Enum):
    ORIGINAL = "original"
    SYNTHETIC = "synthetic"


_LABEL_ALIASES = {
    "0": Label.FAKE,
    "1": Label.REAL,
    "fake": Label.FAKE,
    "real": Label.REAL,
}


def parse_label(raw: str | int) -> Label:
    """Parse a label from the integer codes or the case-insensitive word aliases."""
    key = str(raw).strip().lower()
    if key not in _LABEL_ALIASES:
        raise ValueError(f"unparseable label {raw!r} (expected 0/1 or fake/real)")
    return _LABEL_ALIASES[key]


@dataclass(frozen=True)
class Article:
    """One news document with label, category and provenance."""

    id: str
    headline: str
    content: str
    category: str
    label: Label
    provenance: Provenance = Provenance.ORIGINAL
    parent_id: str | None = None
    extras: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.content:
            raise ValidationError(f"article {self.id!r} has empty content")
        if self.provenance is Provenance.SYNTHETIC and not self.parent_id:
            raise ValidationError(f"synthetic article {self.id!r} has no parent_id")
        if self.provenance is Provenance.ORIGINAL and self.parent_id:
            raise ValidationError(
                f"original article {self.id!r} must not carry parent_id"
            )


class Corpus:
    """Ordered, validated collection of articles.

    Construction checks id uniqueness and, for synthetic articles, that the
    parent exists, is an original and carries the same label.
    """

    def __init__(self, articles: Iterable[Article], name: str = ""):
        self.articles: tuple[Article, ...] = tuple(articles)
        self.name = name
        self._by_id = {a.id: a for a in self.articles}
        if len(self._by_id) != len(self.articles):
            counts = Counter(a.id for a in self.articles)
            dups = sorted(i for i, n in counts.items() if n > 1)
            raise ValidationError(f"duplicate article ids: {', '.join(dups)}")
        for a in self.articles:
            if a.provenance is Provenance.SYNTHETIC:
                parent = self._by_id.get(a.parent_id or "")
                if parent is None:
                    raise ValidationError(
                        f"synthetic {a.id!r} references missing parent {a.parent_id!r}"
                    )
                if parent.provenance is not Provenance.ORIGINAL:
                    raise ValidationError(
                        f"synthetic {a.id!r} has non-original parent {parent.id!r}"
                    )
                if parent.label is not a.label:
                    raise ValidationError(
                        f"synthetic {a.id!r} label {a.label} differs from parent's {parent.label}"
                    )

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self) -> Iterator[Article]:
        return iter(self.articles)

    def __getitem__(self, article_id: str) -> Article:
        return self._by_id[article_id]

    def __contains__(self, article_id: str) -> bool:
        return article_id in self._by_id

    def ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.articles)

    def label_counts(self) -> dict[Label, int]:
        return dict(Counter(a.label for a in self.articles))

    def composition(self) -> dict[tuple[Label, Provenance], int]:
        return composition(self)


def composition(c: Corpus) -> dict[tuple[Label, Provenance], int]:
    """Per-(label, provenance) counts; zero-filled so all four cells exist."""
    counts = {
        (label, prov): 0 for label in Label for prov in Provenance
    }
    for a in c:
        counts[(a.label, a.provenance)] += 1
    return counts


@dataclass(frozen=True)
class SplitSpec:
    """Parameters for a deterministic stratified split.

    ``train_fraction`` is kept as an exact rational so allocation arithmetic
    never depends on binary-float rounding; floats are converted via their
    decimal string form (0.7 means 7/10, not the nearest double).
    """

    train_fraction: Fraction
    strata: tuple[str, ...] = ("label", "category")
    seed: int = 0

    def __init__(self, train_fraction, strata=("label", "category"), seed: int = 0):
        if isinstance(train_fraction, float):
            train_fraction = Fraction(str(train_fraction))
        else:
            train_fraction = Fraction(train_fraction)
        if not (0 < train_fraction < 1):
            raise ParameterError(f"train_fraction must be in (0,1), got {train_fraction}")
        if not strata:
            raise ParameterError("strata must be non-empty")
        object.__setattr__(self, "train_fraction", train_fraction)
        object.__setattr__(self, "strata", tuple(strata))
        object.__setattr__(self, "seed", int(seed))


def derive_seed(base: int, *parts) -> int:
    """Stable 64-bit sub-seed from a base seed and arbitrary string-able parts."""
    h = hashlib.sha256(repr((int(base),) + tuple(str(p) for p in parts)).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")


def _round_half_down(q: Fraction) -> int:
    # nearest integer, exact halves rounding down
    fl = math.floor(q)
    return fl + (1 if q - fl > Fraction(1, 2) else 0)


def stratified_split(c: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Partition a corpus of originals into (train, test) by stratified sampling.

    Per stratum the train count is the exact quota ``stratum_size x fraction``
    rounded to the nearest integer with halves going down (largest-remainder
    allocation against the sum of those per-stratum targets). This is the rule
    that keeps every stratum within one article of its proportional share.
    Membership within a stratum is a seeded shuffle, so identical inputs give
    byte-identical splits; output order preserves corpus order.
    """
    for a in c:
        if a.provenance is not Provenance.ORIGINAL:
            raise ProvenanceError(
                f"stratified_split got synthetic article {a.id!r}; split originals only"
            )
    for field_name in spec.strata:
        if not hasattr(Article, "__dataclass_fields__") or field_name not in Article.__dataclass_fields__:
            raise ParameterError(f"unknown stratum field {field_name!r}")

    groups: dict[tuple, list[int]] = defaultdict(list)
    for idx, a in enumerate(c):
        key = tuple(getattr(a, f) for f in spec.strata)
        groups[key].append(idx)

    train_idx: set[int] = set()
    for key in sorted(groups, key=repr):
        members = groups[key]
        want = _round_half_down(len(members) * spec.train_fraction)
        rng = random.Random(derive_seed(spec.seed, "split", key))
        shuffled = members[:]
        rng.shuffle(shuffled)
        train_idx.update(shuffled[:want])

    train = [a for i, a in enumerate(c) if i in train_idx]
    test = [a for i, a in enumerate(c) if i not in train_idx]
    return (
        Corpus(train, name=f"{c.name}/train" if c.name else "train"),
        Corpus(test, name=f"{c.name}/test" if c.name else "test"),
    )


# CSV dialect: UTF-8, header row, comma-delimited, RFC-4180 quoting.
CANONICAL_COLUMNS = ("id", "headline", "content", "category", "label")
REQUIRED_FIELDS = ("id", "headline", "content", "category", "label")


def load_csv(path: str | Path, schema: Mapping[str, str] | None = None, name: str = "") -> Corpus:
    """Load a corpus from CSV using a column mapping.

    ``schema`` maps canonical field names (id, headline, content, category,
    label, and optionally provenance, parent_id) to the file's column names;
    identity mapping by default. Unmapped columns are preserved in ``extras``.
    Rows without provenance columns ingest as originals.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such file: {path}")
    schema = dict(schema or {f: f for f in CANONICAL_COLUMNS})

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for f in REQUIRED_FIELDS:
            if f not in schema:
                raise SchemaError(f"column mapping is missing required field {f!r}")
        missing = [schema[f] for f in REQUIRED_FIELDS if schema[f] not in header]
        if missing:
            raise SchemaError(f"missing column(s): {', '.join(sorted(missing))}")

        prov_col = schema.get("provenance") if schema.get("provenance") in header else (
            "provenance" if "provenance" in header else None
        )
        parent_col = schema.get("parent_id") if schema.get("parent_id") in header else (
            "parent_id" if "parent_id" in header else None
        )
        mapped_cols = {schema[f] for f in REQUIRED_FIELDS} | {c for c in (prov_col, parent_col) if c}

        articles: list[Article] = []
        for line_no, row in enumerate(reader, start=2):
            try:
                label = parse_label(row[schema["label"]])
            except ValueError as exc:
                raise RowError(str(exc), line=line_no) from exc
            content = row[schema["content"]] or ""
            if not content.strip():
                raise RowError("empty content", line=line_no)
            prov = Provenance.ORIGINAL
            parent_id = None
            if prov_col and row.get(prov_col):
                raw = row[prov_col].strip().lower()
                if raw not in (p.value for p in Provenance):
                    raise RowError(f"unknown provenance {row[prov_col]!r}", line=line_no)
                prov = Provenance(raw)
            if parent_col and row.get(parent_col):
                parent_id = row[parent_col]
            extras = {k: v for k, v in row.items() if k not in mapped_cols and k is not None}
            try:
                articles.append(
                    Article(
                        id=row[schema["id"]],
                        headline=row[schema["headline"]] or "",
                        content=content,
                        category=row[schema["category"]] or "",
                        label=label,
                        provenance=prov,
                        parent_id=parent_id,
                        extras=extras,
                    )
                )
            except ValidationError as exc:
                raise RowError(str(exc), line=line_no) from exc

    return Corpus(articles, name=name or path.stem)


def write_csv(c: Corpus, path: str | Path) -> Path:
    """Write a corpus in the output dialect: canonical columns plus provenance
    and parent_id (empty for originals), then any extras columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    extra_keys: list[str] = []
    for a in c:
        for k in a.extras:
            if k not in extra_keys:
                extra_keys.append(k)
    cols = list(CANONICAL_COLUMNS) + ["provenance", "parent_id"] + extra_keys
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for a in c:
            row = [
                a.id,
                a.headline,
                a.content,
                a.category,
                int(a.label),
                a.provenance.value,
                a.parent_id or "",
            ]
            row.extend(a.extras.get(k, "") for k in extra_keys)
            writer.writerow(row)
    return path


def corpus_digest(path: str | Path) -> str:
    """SHA-256 of a corpus file's bytes; used for the test-set firewall."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
