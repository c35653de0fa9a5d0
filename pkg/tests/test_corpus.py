import random
from fractions import Fraction

import pytest

from banaug.corpus import (
    Article,
    Corpus,
    Label,
    Provenance,
    SplitSpec,
    composition,
    load_csv,
    parse_label,
    stratified_split,
    write_csv,
)
from banaug.errors import (
    ParameterError,
    ProvenanceError,
    RowError,
    SchemaError,
    ValidationError,
)
from conftest import art, make_corpus, write_corpus_csv


class TestLoadCsv:
    def test_three_row_csv(self, tmp_path):
        path = write_corpus_csv(tmp_path / "c.csv", [
            {"id": "x1", "headline": "h", "content": "body one", "category": "sports", "label": "0"},
            {"id": "x2", "headline": "h", "content": "body two", "category": "sports", "label": "1"},
            {"id": "x3", "headline": "h", "content": "body three", "category": "politics", "label": "1"},
        ])
        c = load_csv(path)
        assert len(c) == 3
        assert c.label_counts() == {Label.FAKE: 1, Label.REAL: 2}
        assert all(a.provenance is Provenance.ORIGINAL for a in c)

    def test_word_labels_case_insensitive(self, tmp_path):
        path = write_corpus_csv(tmp_path / "c.csv", [
            {"id": "x1", "headline": "h", "content": "b", "category": "c", "label": "Fake"},
            {"id": "x2", "headline": "h", "content": "b", "category": "c", "label": "REAL"},
        ])
        c = load_csv(path)
        assert [a.label for a in c] == [Label.FAKE, Label.REAL]

    def test_column_mapping_and_extras(self, tmp_path):
        path = write_corpus_csv(
            tmp_path / "c.csv",
            [{"articleID": "n1", "title": "t", "body": "text", "topic": "x",
              "lbl": "1", "domain": "example.com", "date": "2020-01-01"}],
            header=["articleID", "title", "body", "topic", "lbl", "domain", "date"],
        )
        c = load_csv(path, schema={"id": "articleID", "headline": "title", "body": "body",
                                   "content": "body", "category": "topic", "label": "lbl"})
        a = next(iter(c))
        assert a.id == "n1"
        assert a.extras == {"domain": "example.com", "date": "2020-01-01"}

    def test_missing_column_named(self, tmp_path):
        path = write_corpus_csv(tmp_path / "c.csv", [
            {"id": "x", "headline": "h", "content": "b", "category": "c", "label": "1"},
        ])
        with pytest.raises(SchemaError, match="nope"):
            load_csv(path, schema={"id": "id", "headline": "headline", "content": "content",
                                   "category": "category", "label": "nope"})

    def test_bad_label_reports_row(self, tmp_path):
        path = write_corpus_csv(tmp_path / "c.csv", [
            {"id": "x1", "headline": "h", "content": "b", "category": "c", "label": "1"},
            {"id": "x2", "headline": "h", "content": "b", "category": "c", "label": "maybe"},
        ])
        with pytest.raises(RowError, match="line 3"):
            load_csv(path)

    def test_duplicate_id_listed(self, tmp_path):
        path = write_corpus_csv(tmp_path / "c.csv", [
            {"id": "A7", "headline": "h", "content": "b", "category": "c", "label": "1"},
            {"id": "A7", "headline": "h", "content": "b2", "category": "c", "label": "0"},
        ])
        with pytest.raises(ValidationError, match="A7"):
            load_csv(path)

    def test_empty_content_rejected(self, tmp_path):
        path = write_corpus_csv(tmp_path / "c.csv", [
            {"id": "x1", "headline": "h", "content": "", "category": "c", "label": "1"},
        ])
        with pytest.raises(RowError, match="line 2"):
            load_csv(path)

    def test_parse_label_rejects_noise(self):
        with pytest.raises(ValueError):
            parse_label("2")


class TestRoundTrip:
    def test_write_then_load_identity(self, tmp_path):
        parent = art(1, Label.FAKE)
        synth = Article(
            id="a1#aug1", headline=parent.headline, content="paraphrase text",
            category=parent.category, label=Label.FAKE,
            provenance=Provenance.SYNTHETIC, parent_id="a1",
        )
        c = Corpus([parent, art(2, Label.REAL), synth], name="rt")
        path = write_csv(c, tmp_path / "out.csv")
        back = load_csv(path)
        for a, b in zip(c, back):
            assert (a.id, a.headline, a.content, a.category, a.label,
                    a.provenance, a.parent_id) == \
                   (b.id, b.headline, b.content, b.category, b.label,
                    b.provenance, b.parent_id)


class TestCorpusValidation:
    def test_synthetic_needs_existing_same_label_parent(self):
        parent = art(1, Label.FAKE)
        wrong_label = Article(id="s1", headline="h", content="x", category="c",
                              label=Label.REAL, provenance=Provenance.SYNTHETIC,
                              parent_id="a1")
        with pytest.raises(ValidationError, match="label"):
            Corpus([parent, wrong_label])
        orphan = Article(id="s2", headline="h", content="x", category="c",
                         label=Label.FAKE, provenance=Provenance.SYNTHETIC,
                         parent_id="ghost")
        with pytest.raises(ValidationError, match="missing parent"):
            Corpus([orphan])

    def test_original_with_parent_rejected(self):
        with pytest.raises(ValidationError):
            Article(id="x", headline="h", content="c", category="c",
                    label=Label.REAL, provenance=Provenance.ORIGINAL, parent_id="p")


class TestComposition:
    def test_empty_corpus_all_zero(self):
        counts = composition(Corpus([], name="empty"))
        assert set(counts.values()) == {0}
        assert len(counts) == 4

    def test_counts_sum_to_size(self, tiny_fake_real_corpus):
        counts = composition(tiny_fake_real_corpus)
        assert sum(counts.values()) == len(tiny_fake_real_corpus)
        assert counts[(Label.REAL, Provenance.ORIGINAL)] == 6
        assert counts[(Label.FAKE, Provenance.ORIGINAL)] == 4


class TestStratifiedSplit:
    def test_published_label_histogram_counts(self):
        c = make_corpus(7202, 1299, name="full")
        train, test = stratified_split(c, SplitSpec(0.7, strata=("label",), seed=11))
        assert train.label_counts() == {Label.REAL: 5041, Label.FAKE: 909}
        assert test.label_counts() == {Label.REAL: 2161, Label.FAKE: 390}
        assert len(test) == 2551

    def test_partition_and_determinism(self):
        c = make_corpus(40, 17, categories=("a", "b", "c"))
        spec = SplitSpec(Fraction(7, 10), seed=5)
        t1, e1 = stratified_split(c, spec)
        t2, e2 = stratified_split(c, spec)
        assert t1.ids() == t2.ids() and e1.ids() == e2.ids()
        assert set(t1.ids()) | set(e1.ids()) == set(c.ids())
        assert set(t1.ids()) & set(e1.ids()) == set()

    def test_same_sizes_different_seeds(self):
        c = make_corpus(0, 10)
        a_train, a_test = stratified_split(c, SplitSpec(0.5, strata=("label",), seed=1))
        b_train, b_test = stratified_split(c, SplitSpec(0.5, strata=("label",), seed=2))
        assert len(a_train) == len(b_train) == 5
        assert len(a_test) == len(b_test) == 5

    def test_rejects_synthetic_articles(self):
        parent = art(1, Label.FAKE)
        synth = Article(id="s", headline="h", content="x", category="national",
                        label=Label.FAKE, provenance=Provenance.SYNTHETIC, parent_id="a1")
        c = Corpus([parent, synth])
        with pytest.raises(ProvenanceError):
            stratified_split(c, SplitSpec(0.7))

    def test_rejects_bad_fraction(self):
        with pytest.raises(ParameterError):
            SplitSpec(1.0)
        with pytest.raises(ParameterError):
            SplitSpec(0)

    def test_per_stratum_proportion_within_one(self):
        rng = random.Random(99)
        for trial in range(50):
            n_real = rng.randint(1, 60)
            n_fake = rng.randint(1, 60)
            cats = ("x", "y")[: rng.randint(1, 2)]
            c = make_corpus(n_real, n_fake, categories=cats)
            frac = rng.randint(1, 9) / 10
            train, test = stratified_split(c, SplitSpec(frac, seed=trial))
            assert len(train) + len(test) == len(c)
            by_stratum: dict[tuple, list] = {}
            for a in c:
                by_stratum.setdefault((a.label, a.category), []).append(a.id)
            train_ids = set(train.ids())
            for key, members in by_stratum.items():
                got = sum(1 for m in members if m in train_ids)
                assert abs(got - frac * len(members)) <= 1.0 + 1e-9
