import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esgclassify import corpus
from esgclassify.corpus import (Article, LabelCatalog, LabelEntry,
                                compose_training_set, default_catalog,
                                load_corpus, load_split, save_split,
                                stratified_split, write_corpus)
from esgclassify.errors import InputError
from synth import make_catalog, make_clustered_corpus


def two_label_catalog():
    return LabelCatalog([
        LabelEntry("board", "Board", "board oversight and governance"),
        LabelEntry("pay", "Pay", "executive compensation design"),
    ])


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def record(i, label="board", language="en"):
    return json.dumps({"id": f"a{i}", "language": language, "title": None,
                       "body": f"text {i}", "labels": [label]})


class TestLoadCorpus:
    def test_three_valid_records_in_order(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record(0), record(1, "pay"), record(2)])
        articles = load_corpus(path, two_label_catalog())
        assert [a.id for a in articles] == ["a0", "a1", "a2"]
        assert articles[1].gold_labels == ("pay",)

    def test_unknown_label_names_the_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record(0), record(1, label="carbon-emissions")])
        with pytest.raises(InputError, match="carbon-emissions"):
            load_corpus(path, two_label_catalog())

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record(0), "{not json"])
        with pytest.raises(InputError, match=r":2:"):
            load_corpus(path, two_label_catalog())

    def test_duplicate_article_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record(0), record(0)])
        with pytest.raises(InputError, match="duplicate article id"):
            load_corpus(path, two_label_catalog())

    def test_thousand_chinese_articles(self, tmp_path):
        catalog = make_catalog(5)
        articles = make_clustered_corpus(catalog, 1000, seed=1, language="zh")
        path = tmp_path / "zh.jsonl"
        write_corpus(articles, path)
        loaded = load_corpus(path, catalog)
        assert len(loaded) == 1000
        assert all(a.language == "zh" for a in loaded)

    def test_round_trip_field_for_field(self, tmp_path):
        catalog = make_catalog(4)
        articles = make_clustered_corpus(catalog, 25, seed=9, multi_fraction=0.4)
        path = tmp_path / "c.jsonl"
        write_corpus(articles, path)
        assert load_corpus(path, catalog) == articles


class TestArticleValidation:
    def test_empty_body_rejected(self):
        with pytest.raises(InputError, match="body"):
            Article(id="x", language="en", body="   ", gold_labels=("a",))

    def test_gold_labels_required(self):
        with pytest.raises(InputError, match="gold label"):
            Article(id="x", language="en", body="text", gold_labels=())

    def test_language_normalised(self):
        a = Article(id="x", language=" EN ", body="text", gold_labels=("a",))
        assert a.language == "en"

    def test_bad_language_rejected(self):
        with pytest.raises(InputError, match="language"):
            Article(id="x", language="English!", body="text", gold_labels=("a",))


class TestDefaultCatalog:
    def test_has_35_issues(self):
        catalog = default_catalog()
        assert len(catalog) == 35

    def test_definitions_non_empty(self):
        assert all(e.definition.strip() for e in default_catalog())

    def test_duplicate_ids_rejected(self):
        entry = LabelEntry("dup", "Dup", "definition text")
        with pytest.raises(InputError, match="duplicate"):
            LabelCatalog([entry, entry])


class TestStratifiedSplit:
    def test_single_label_70_30(self):
        catalog = make_catalog(1)
        articles = make_clustered_corpus(catalog, 10, seed=2)
        split = stratified_split(articles, 0.7, seed=42)
        assert len(split.train_ids) == 7
        assert len(split.dev_ids) == 3

    def test_deterministic(self):
        catalog = make_catalog(4)
        articles = make_clustered_corpus(catalog, 40, seed=3)
        assert stratified_split(articles, 0.7, 5) == stratified_split(articles, 0.7, 5)

    def test_partition_is_exact(self):
        catalog = make_catalog(4)
        articles = make_clustered_corpus(catalog, 41, seed=3)
        split = stratified_split(articles, 0.7, 5)
        ids = {a.id for a in articles}
        assert set(split.train_ids) | set(split.dev_ids) == ids
        assert not set(split.train_ids) & set(split.dev_ids)

    def test_per_label_counts_for_known_supports(self):
        # supports 40/30/15/10/5 at 0.7 -> train counts 28/21/10 or 11/7/3 or 4
        catalog = make_catalog(5)
        label_ids = catalog.ids()
        articles = []
        supports = [40, 30, 15, 10, 5]
        n = 0
        for li, sup in enumerate(supports):
            for _ in range(sup):
                articles.append(Article(id=f"a{n}", language="en",
                                        body=f"body {n}",
                                        gold_labels=(label_ids[li],)))
                n += 1
        split = stratified_split(articles, 0.7, seed=11)
        train = set(split.train_ids)
        by_label = {a.id: a.primary_label for a in articles}
        for li, sup in enumerate(supports):
            count = sum(1 for i in train if by_label[i] == label_ids[li])
            assert abs(count - 0.7 * sup) <= 1.0

    def test_single_article_label_goes_to_train(self):
        catalog = make_catalog(2)
        articles = [Article(id="solo", language="en", body="x",
                            gold_labels=(catalog.ids()[0],))]
        articles += [Article(id=f"b{i}", language="en", body=f"y {i}",
                             gold_labels=(catalog.ids()[1],)) for i in range(4)]
        split = stratified_split(articles, 0.5, seed=1)
        assert "solo" in split.train_ids

    def test_serialization_byte_identical(self, tmp_path):
        catalog = make_catalog(3)
        articles = make_clustered_corpus(catalog, 30, seed=4)
        p1, p2 = tmp_path / "s1.json", tmp_path / "s2.json"
        save_split(stratified_split(articles, 0.7, 9), p1)
        save_split(stratified_split(articles, 0.7, 9), p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert load_split(p1) == stratified_split(articles, 0.7, 9)

    def test_empty_corpus_rejected(self):
        with pytest.raises(InputError):
            stratified_split([], 0.7, 0)

    def test_bad_fraction_rejected(self):
        catalog = make_catalog(1)
        articles = make_clustered_corpus(catalog, 4, seed=0)
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(InputError):
                stratified_split(articles, bad, 0)

    @settings(deadline=None, max_examples=40)
    @given(label_sizes=st.lists(st.integers(min_value=1, max_value=30),
                                min_size=1, max_size=6),
           fraction=st.floats(min_value=0.1, max_value=0.9),
           seed=st.integers(min_value=0, max_value=2**63))
    def test_stratification_bound_property(self, label_sizes, fraction, seed):
        catalog = make_catalog(len(label_sizes))
        label_ids = catalog.ids()
        articles = []
        n = 0
        for li, size in enumerate(label_sizes):
            for _ in range(size):
                articles.append(Article(id=f"a{n}", language="en", body=f"b {n}",
                                        gold_labels=(label_ids[li],)))
                n += 1
        split = stratified_split(articles, fraction, seed)
        train = set(split.train_ids)
        by_label = {a.id: a.primary_label for a in articles}
        for li, size in enumerate(label_sizes):
            count = sum(1 for i in train if by_label[i] == label_ids[li])
            if size >= 2:
                assert abs(count - fraction * size) <= 1.0
            else:
                assert count == 1


class TestCompose:
    def make_corpora(self):
        catalog = make_catalog(2)
        en = make_clustered_corpus(catalog, 5, seed=1, language="en")
        fr = make_clustered_corpus(catalog, 7, seed=2, language="fr")
        return {"en": en, "fr": fr}

    def test_monolingual_filters(self):
        corpora = self.make_corpora()
        out = compose_training_set(corpora, ["en"])
        assert out == corpora["en"]

    def test_multilingual_concatenates_in_tag_order(self):
        corpora = self.make_corpora()
        out = compose_training_set(corpora, ["en", "fr"])
        assert len(out) == 12
        assert out[:5] == corpora["en"]
        assert out[5:] == corpora["fr"]

    def test_single_tag_multilingual_equals_monolingual(self):
        corpora = self.make_corpora()
        assert compose_training_set(corpora, ["fr"]) == corpora["fr"]

    def test_conservation(self):
        corpora = self.make_corpora()
        out = compose_training_set(corpora, ["fr", "en"])
        assert len(out) == len(corpora["en"]) + len(corpora["fr"])
        assert len({a.id for a in out}) == len(out)

    def test_missing_language_rejected(self):
        with pytest.raises(InputError, match="zh"):
            compose_training_set(self.make_corpora(), ["zh"])


class TestSplitSpecValidation:
    def test_overlap_rejected(self):
        with pytest.raises(InputError, match="overlap"):
            corpus.SplitSpec(train_ids=("a",), dev_ids=("a",), seed=0,
                             train_fraction=0.5)
