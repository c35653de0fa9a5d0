"""Assemble augmented training corpora and verify their composition.

The planner owns the arithmetic contract: augmenting a class with c original
articles at rate K must add exactly c*K synthetic articles (c*(K+1) total for
that class). Assembly never touches originals and fails loudly when the
delivered selections miss that contract beyond an explicit tolerance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Collection, Mapping, Sequence

from .corpus import Article, Corpus, Label, Provenance
from .errors import IntegrityError, PlanError, ProvenanceError
from .prompting import PromptMode
from .selection import SelectedSet, SelectionPolicy

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AugmentPolicy:
    """Which classes get synthetic articles, and how candidates were chosen."""

    target_classes: frozenset[Label]
    k: int
    selection: SelectionPolicy
    prompting_mode: PromptMode = PromptMode.ZERO_SHOT

    def __post_init__(self):
        if not self.target_classes:
            raise PlanError("target_classes must be non-empty")


@dataclass(frozen=True)
class AugmentedPlan:
    """Per-(label, provenance) counts an augmented training set must satisfy."""

    expected: Mapping[tuple[Label, Provenance], int]
    tolerance: int = 0

    def total(self) -> int:
        return sum(self.expected.values())

    def class_total(self, label: Label) -> int:
        return sum(n for (lbl, _), n in self.expected.items() if lbl is label)


def expected_composition(train: Corpus, policy: AugmentPolicy,
                         tolerance: int = 0) -> AugmentedPlan:
    """Composition contract for fully-delivered augmentation of ``train``."""
    expected: dict[tuple[Label, Provenance], int] = {}
    for a in train:
        if a.provenance is not Provenance.ORIGINAL:
            raise ProvenanceError(
                f"expected_composition wants an original-only train set; {a.id!r} is synthetic"
            )
    counts = train.label_counts()
    for label in Label:
        c = counts.get(label, 0)
        expected[(label, Provenance.ORIGINAL)] = c
        expected[(label, Provenance.SYNTHETIC)] = (
            c * policy.k if label in policy.target_classes else 0
        )
    return AugmentedPlan(expected=expected, tolerance=tolerance)


def build_augmented(train: Corpus, selected: Sequence[SelectedSet],
                    policy: AugmentPolicy,
                    test_ids: Collection[str] = (),
                    tolerance: int = 0) -> tuple[Corpus, dict]:
    """Originals plus one synthetic article per chosen candidate.

    Synthetic articles inherit label, category and headline from their parent
    and get ids ``{parent_id}#aug{ordinal}``. Output order is originals first
    (train order), then synthetics grouped by parent. Returns the corpus and
    a composition manifest. Raises IntegrityError for unknown, untargeted or
    test-registered sources, and PlanError when the per-class shortfall of
    the delivered sets exceeds ``tolerance``.
    """
    test_ids = set(test_ids)
    seen_sources: set[str] = set()
    for s in selected:
        if s.source_id in test_ids:
            raise IntegrityError(
                f"test-set firewall: selected set for test article {s.source_id!r}"
            )
        if s.source_id not in train:
            raise IntegrityError(f"selected set references unknown source {s.source_id!r}")
        parent = train[s.source_id]
        if parent.provenance is not Provenance.ORIGINAL:
            raise IntegrityError(f"source {s.source_id!r} is not an original article")
        if parent.label not in policy.target_classes:
            raise IntegrityError(
                f"source {s.source_id!r} has untargeted class {parent.label}"
            )
        if s.source_id in seen_sources:
            raise IntegrityError(f"duplicate selected set for source {s.source_id!r}")
        seen_sources.add(s.source_id)

    by_parent = {s.source_id: s for s in selected}
    synthetics: list[Article] = []
    shortfalls: list[dict] = []
    for parent_article in train:
        s = by_parent.get(parent_article.id)
        if s is None:
            continue
        for j, chosen in enumerate(s.chosen, start=1):
            synthetics.append(Article(
                id=f"{parent_article.id}#aug{j}",
                headline=parent_article.headline,
                content=chosen.text,
                category=parent_article.category,
                label=parent_article.label,
                provenance=Provenance.SYNTHETIC,
                parent_id=parent_article.id,
            ))
        if s.shortfall:
            shortfalls.append({"source_id": s.source_id, "shortfall": s.shortfall})

    out = Corpus(list(train.articles) + synthetics,
                 name=f"{train.name}+aug" if train.name else "augmented")

    plan = expected_composition(train, policy, tolerance=tolerance)
    actual = out.composition()
    deficits: dict[Label, int] = {}
    for label in policy.target_classes:
        per_set_deficit = sum(
            s["shortfall"] for s in shortfalls
            if train[s["source_id"]].label is label
        )
        if per_set_deficit > tolerance:
            deficits[label] = per_set_deficit
    if deficits:
        detail = "; ".join(
            f"class {int(lbl)} short by {d} (sources: "
            + ", ".join(s["source_id"] for s in shortfalls
                        if train[s["source_id"]].label is lbl)
            + ")"
            for lbl, d in deficits.items()
        )
        raise PlanError(f"composition breach beyond tolerance {tolerance}: {detail}")

    manifest = {
        "policy": {
            "target_classes": sorted(int(l) for l in policy.target_classes),
            "k": policy.k,
            "strategy": policy.selection.strategy.value,
            "prompting_mode": policy.prompting_mode.value,
            "min_similarity": policy.selection.min_similarity,
            "seed": policy.selection.seed,
        },
        "expected": {
            f"{int(lbl)}/{prov.value}": n for (lbl, prov), n in plan.expected.items()
        },
        "actual": {
            f"{int(lbl)}/{prov.value}": n for (lbl, prov), n in actual.items()
        },
        "shortfalls": shortfalls,
        "sets_delivered": len(selected),
        "tolerance": tolerance,
    }
    delivered_total = sum(len(s.chosen) for s in selected)
    log.info("augmented corpus: %d originals + %d synthetics (%d sets, %d short)",
             len(train), delivered_total, len(selected), len(shortfalls))
    return out, manifest
