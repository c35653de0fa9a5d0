import pytest

from banaug.corpus import Corpus, Label, Provenance, composition
from banaug.errors import IntegrityError, PlanError, ProvenanceError
from banaug.planner import AugmentPolicy, build_augmented, expected_composition
from banaug.prompting import PromptMode
from banaug.selection import Chosen, SelectedSet, SelectionPolicy, Strategy
from conftest import art, make_corpus


def policy(k: int, targets=frozenset({Label.FAKE})) -> AugmentPolicy:
    return AugmentPolicy(
        target_classes=frozenset(targets),
        k=k,
        selection=SelectionPolicy(strategy=Strategy.RANDOM, k=k, seed=0),
        prompting_mode=PromptMode.ZERO_SHOT,
    )


def chosen_set(source_id: str, texts: list[str], k: int,
               shortfall: int | None = None) -> SelectedSet:
    return SelectedSet(
        source_id=source_id,
        strategy=Strategy.RANDOM,
        k=k,
        chosen=tuple(Chosen(t) for t in texts),
        shortfall=(k - len(texts)) if shortfall is None else shortfall,
    )


class TestExpectedComposition:
    # published composition rows for a 5,041 real / 909 fake training split
    @pytest.mark.parametrize("k,total,fake", [
        (5, 10_495, 5_454),
        (3, 8_677, 3_636),
        (2, 7_768, 2_727),
        (1, 6_859, 1_818),
    ])
    def test_published_rows(self, k, total, fake):
        train = make_corpus(5041, 909, name="train")
        plan = expected_composition(train, policy(k))
        assert plan.total() == total
        assert plan.class_total(Label.FAKE) == fake
        assert plan.class_total(Label.REAL) == 5041
        assert plan.expected[(Label.FAKE, Provenance.SYNTHETIC)] == 909 * k

    def test_untargeted_class_unchanged(self):
        train = make_corpus(10, 4)
        plan = expected_composition(train, policy(3))
        assert plan.expected[(Label.REAL, Provenance.SYNTHETIC)] == 0
        assert plan.expected[(Label.REAL, Provenance.ORIGINAL)] == 10

    def test_both_classes_targetable(self):
        train = make_corpus(10, 4)
        plan = expected_composition(train, policy(2, targets={Label.FAKE, Label.REAL}))
        assert plan.total() == 14 * 3

    def test_rejects_synthetic_train(self):
        parent = art(1, Label.FAKE)
        synth = art(2, Label.FAKE).__class__(
            id="s", headline="h", content="x", category="national",
            label=Label.FAKE, provenance=Provenance.SYNTHETIC, parent_id="a1",
        )
        with pytest.raises(ProvenanceError):
            expected_composition(Corpus([parent, synth]), policy(1))


class TestBuildAugmented:
    def corpus_and_sets(self, n_fake=4, k=2):
        train = make_corpus(6, n_fake, name="train")
        fakes = [a for a in train if a.label is Label.FAKE]
        sets = [chosen_set(a.id, [f"{a.id} variant {j}" for j in range(k)], k)
                for a in fakes]
        return train, sets

    def test_counts_and_structure(self):
        train, sets = self.corpus_and_sets(n_fake=4, k=2)
        out, manifest = build_augmented(train, sets, policy(2))
        counts = composition(out)
        assert counts[(Label.FAKE, Provenance.SYNTHETIC)] == 8
        assert counts[(Label.FAKE, Provenance.ORIGINAL)] == 4
        assert counts[(Label.REAL, Provenance.ORIGINAL)] == 6
        assert len(out) == len(train) + 8
        assert manifest["shortfalls"] == []

    def test_published_k2_row(self):
        train = make_corpus(5041, 909, name="train")
        fakes = [a for a in train if a.label is Label.FAKE]
        sets = [chosen_set(a.id, [f"{a.id} v{j}" for j in range(2)], 2) for a in fakes]
        out, _ = build_augmented(train, sets, policy(2))
        counts = composition(out)
        assert len(out) == 7_768
        assert counts[(Label.FAKE, Provenance.SYNTHETIC)] + counts[(Label.FAKE, Provenance.ORIGINAL)] == 2_727
        assert counts[(Label.REAL, Provenance.ORIGINAL)] == 5_041

    def test_zero_sets_identity(self):
        train = make_corpus(6, 4)
        out, _ = build_augmented(train, [], policy(5))
        assert out.ids() == train.ids()

    def test_synthetic_articles_inherit_parent_fields(self):
        train, sets = self.corpus_and_sets(n_fake=1, k=2)
        out, _ = build_augmented(train, sets, policy(2))
        synths = [a for a in out if a.provenance is Provenance.SYNTHETIC]
        parent = train[synths[0].parent_id]
        for i, s in enumerate(synths, start=1):
            assert s.label is parent.label
            assert s.category == parent.category
            assert s.headline == parent.headline
            assert s.id == f"{parent.id}#aug{i}"

    def test_originals_untouched_and_order(self):
        train, sets = self.corpus_and_sets()
        out, _ = build_augmented(train, sets, policy(2))
        assert out.articles[: len(train)] == train.articles
        tail = out.articles[len(train):]
        assert all(a.provenance is Provenance.SYNTHETIC for a in tail)
        # grouped by parent, parents in train order
        parents = [a.parent_id for a in tail]
        assert parents == sorted(parents, key=lambda p: train.ids().index(p))

    def test_shortfall_beyond_tolerance_fails_loudly(self):
        train = make_corpus(2, 2)
        fakes = [a for a in train if a.label is Label.FAKE]
        sets = [chosen_set(fakes[0].id, ["only one"], 2)]
        with pytest.raises(PlanError, match=fakes[0].id):
            build_augmented(train, sets, policy(2), tolerance=0)

    def test_shortfall_within_tolerance_passes(self):
        train = make_corpus(2, 2)
        fakes = [a for a in train if a.label is Label.FAKE]
        sets = [chosen_set(fakes[0].id, ["only one"], 2)]
        out, manifest = build_augmented(train, sets, policy(2), tolerance=1)
        assert manifest["shortfalls"] == [{"source_id": fakes[0].id, "shortfall": 1}]
        assert len(out) == len(train) + 1

    def test_unknown_source_rejected(self):
        train = make_corpus(2, 2)
        with pytest.raises(IntegrityError, match="ghost"):
            build_augmented(train, [chosen_set("ghost", ["x"], 1)], policy(1))

    def test_untargeted_source_rejected(self):
        train = make_corpus(2, 2)
        real = next(a for a in train if a.label is Label.REAL)
        with pytest.raises(IntegrityError, match="untargeted"):
            build_augmented(train, [chosen_set(real.id, ["x"], 1)], policy(1))

    def test_duplicate_sets_rejected(self):
        train = make_corpus(2, 2)
        fake = next(a for a in train if a.label is Label.FAKE)
        sets = [chosen_set(fake.id, ["x"], 1), chosen_set(fake.id, ["y"], 1)]
        with pytest.raises(IntegrityError, match="duplicate"):
            build_augmented(train, sets, policy(1))

    def test_test_set_firewall(self):
        train = make_corpus(2, 2)
        fake = next(a for a in train if a.label is Label.FAKE)
        with pytest.raises(IntegrityError, match="firewall"):
            build_augmented(train, [chosen_set(fake.id, ["x"], 1)], policy(1),
                            test_ids={fake.id})

    def test_output_size_exact(self):
        train, sets = self.corpus_and_sets(n_fake=3, k=2)
        sets[1] = chosen_set(sets[1].source_id, [f"{sets[1].source_id} v0"], 2)
        out, _ = build_augmented(train, sets, policy(2), tolerance=5)
        assert len(out) == len(train) + sum(len(s.chosen) for s in sets)
