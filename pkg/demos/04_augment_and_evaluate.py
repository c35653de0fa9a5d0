#!/usr/bin/env python3
"""Assemble an augmented training set under its composition contract, train
the built-in character-n-gram classifier, and render the metrics table.

Minority-class (fake) articles get K synthetic variants each; the test set
stays untouched, enforced by the test-set firewall.
"""

import random
import tempfile

from banaug.baseclf import Hyper, fit, predict
from banaug.corpus import (
    Article,
    Corpus,
    Label,
    Provenance,
    SplitSpec,
    composition,
    stratified_split,
)
from banaug.genclient import GenConfig, MockBackend, generate
from banaug.metrics import confusion, evaluate, report_table
from banaug.planner import AugmentPolicy, build_augmented, expected_composition
from banaug.prompting import RequestTemplate
from banaug.selection import SelectionPolicy, Strategy, apply_policy

rng = random.Random(3)
real_words = "harbor festival museum library garden bridge campus".split()
fake_words = "scandal hoax rumor conspiracy shocking secret exposed".split()
shared = "city market river road council people report week office".split()


def doc(label):
    pool = fake_words if label is Label.FAKE else real_words
    w = [rng.choice(pool) if rng.random() < 0.2 else rng.choice(shared)
         for _ in range(12)]
    return " ".join(w[:6]) + ". " + " ".join(w[6:]) + "."


corpus = Corpus(
    [Article(id=f"r{i}", headline="", category="c", label=Label.REAL,
             content=doc(Label.REAL)) for i in range(600)]
    + [Article(id=f"f{i}", headline="", category="c", label=Label.FAKE,
               content=doc(Label.FAKE)) for i in range(110)],
    name="demo",
)
train, test = stratified_split(corpus, SplitSpec(0.7, strata=("label",), seed=1))
print(f"train {len(train)} / test {len(test)}; "
      f"train fakes {train.label_counts()[Label.FAKE]}")

K = 3
policy = SelectionPolicy(Strategy.RANDOM, k=K, seed=9)
aug_policy = AugmentPolicy(target_classes=frozenset({Label.FAKE}), k=K, selection=policy)
plan = expected_composition(train, aug_policy)
print(f"composition contract for K={K}: total {plan.total()} "
      f"(fake {plan.class_total(Label.FAKE)}, real {plan.class_total(Label.REAL)})")

fakes = [a for a in train if a.label is Label.FAKE]
with tempfile.TemporaryDirectory() as tmp:
    records = generate(fakes, RequestTemplate(n_variants=5), GenConfig(),
                       f"{tmp}/cache.jsonl", backend=MockBackend(seed=9))
sets = apply_policy(records, policy, {a.id: a for a in train})
augmented, manifest = build_augmented(train, sets, aug_policy, test_ids=set(test.ids()))
print(f"augmented size {len(augmented)}; synthetic fakes "
      f"{composition(augmented)[(Label.FAKE, Provenance.SYNTHETIC)]}")

hyper = Hyper(epochs=3, learning_rate=0.5, seed=0)
reports = []
for tag, training_corpus in [("baseline", train), (f"aug-k{K}", augmented)]:
    model = fit(training_corpus, hyper)
    cm = confusion(predict(model, test), expected_ids=set(test.ids()))
    reports.append(evaluate(cm, config_tag=tag))

print()
print(report_table(reports))
