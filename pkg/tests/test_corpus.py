"""Label taxonomy, annotation files, assembly, and seeded splits."""

from __future__ import annotations

import random
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcw.corpus import (
    LABELS,
    LABEL_TOKENS,
    AnnotatedSentence,
    CorpusManifest,
    Label,
    ResumeAnnotationFile,
    assemble,
    class_distribution,
    largest_remainder,
    np_ordinals,
    parse_annotation_text,
    parse_label,
    parse_sentence_tsv,
    read_annotation_file,
    render_annotation_file,
    render_sentence_tsv,
    resolve_created,
    split,
    split_sizes,
    write_annotation_file,
)
from rcw.errors import (
    BadRatios,
    DuplicateDocId,
    EmptyCorpus,
    FormatError,
    UnknownLabel,
)

from conftest import random_annotation_file


class TestTaxonomy:
    def test_declaration_order(self):
        assert [l.name for l in LABELS] == [
            "EXPERIENCE",
            "PERSONAL_INFO",
            "SUMMARY",
            "EDUCATION",
            "QUALIFICATION",
            "SKILL",
            "OBJECT",
        ]

    def test_tokens(self):
        assert LABEL_TOKENS == (
            "EXPERIENCE", "PI", "SUMMARY", "EDUCATION", "QUALIFICATION", "SKILL", "OBJECT",
        )

    def test_ordinals_contiguous(self):
        assert [l.ordinal for l in LABELS] == list(range(7))

    def test_parse_canonical(self):
        assert parse_label("EXPERIENCE") is Label.EXPERIENCE

    def test_parse_case_insensitive(self):
        assert parse_label("pi") is Label.PERSONAL_INFO
        assert parse_label(" Skill ") is Label.SKILL

    def test_parse_rejects_foreign_label(self):
        with pytest.raises(UnknownLabel):
            parse_label("OTHER")

    def test_parse_rejects_enum_name_that_is_not_a_token(self):
        with pytest.raises(UnknownLabel):
            parse_label("PERSONAL_INFO")

    def test_token_bijection(self):
        assert len(set(LABEL_TOKENS)) == 7
        for label in LABELS:
            assert parse_label(label.token) is label


class TestAnnotatedSentence:
    def test_tabs_and_newlines_sanitized(self):
        s = AnnotatedSentence("d", 0, "a\tb\nc", Label.SKILL)
        assert s.text == "a b c"


class TestAnnotationFormat:
    def test_single_line_render(self):
        f = ResumeAnnotationFile("d", [AnnotatedSentence("d", 0, "John Doe", Label.PERSONAL_INFO)])
        assert render_annotation_file(f) == "PI\tJohn Doe\n"

    def test_parse_three_lines(self):
        content = "PI\tJohn Doe\nEXPERIENCE\tBuilt things.\nSKILL\tPython\n"
        f = parse_annotation_text("d", content)
        assert [s.label for s in f.sentences] == [Label.PERSONAL_INFO, Label.EXPERIENCE, Label.SKILL]
        assert [s.index for s in f.sentences] == [0, 1, 2]
        assert render_annotation_file(f) == content

    def test_empty_file_is_zero_sentences(self):
        assert parse_annotation_text("d", "").sentences == []

    def test_missing_trailing_newline(self):
        with pytest.raises(FormatError):
            parse_annotation_text("d", "PI\tJohn Doe")

    def test_line_without_tab(self):
        with pytest.raises(FormatError):
            parse_annotation_text("d", "PI John Doe\n")

    def test_line_with_two_tabs(self):
        with pytest.raises(FormatError):
            parse_annotation_text("d", "PI\tJohn\tDoe\n")

    def test_empty_text(self):
        with pytest.raises(FormatError):
            parse_annotation_text("d", "PI\t\n")

    def test_unknown_label_token(self):
        with pytest.raises(FormatError):
            parse_annotation_text("d", "SKILLZ\tPython\n")

    def test_validate_rejects_gap_in_indices(self):
        f = ResumeAnnotationFile("d", [AnnotatedSentence("d", 1, "x y", Label.SKILL)])
        with pytest.raises(FormatError):
            f.validate()

    def test_validate_rejects_foreign_doc_id(self):
        f = ResumeAnnotationFile("d", [AnnotatedSentence("other", 0, "x y", Label.SKILL)])
        with pytest.raises(FormatError):
            f.validate()

    def test_file_round_trip_bytes(self, tmp_path: Path):
        rng = random.Random(7)
        f = random_annotation_file("doc-a", rng)
        path = tmp_path / "doc-a.txt"
        write_annotation_file(f, path)
        raw = path.read_bytes()
        assert raw == render_annotation_file(f).encode("utf-8")
        assert read_annotation_file(path) == f
        # no temp droppings from the atomic write
        assert [p.name for p in tmp_path.iterdir()] == ["doc-a.txt"]

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50)
    def test_round_trip_property(self, seed: int):
        f = random_annotation_file("d", random.Random(seed))
        content = render_annotation_file(f)
        again = parse_annotation_text("d", content)
        assert again == f
        assert render_annotation_file(again) == content


class TestSentenceTable:
    def test_round_trip(self):
        rng = random.Random(3)
        sentences = random_annotation_file("a", rng).sentences + random_annotation_file("b", rng).sentences
        content = render_sentence_tsv(sentences)
        assert parse_sentence_tsv(content) == list(sentences)

    def test_column_count_enforced(self):
        with pytest.raises(FormatError):
            parse_sentence_tsv("a\t0\tSKILL\n")


class TestAssemble:
    def make_files(self, counts: dict[str, int], seed: int = 0) -> list[ResumeAnnotationFile]:
        rng = random.Random(seed)
        files = []
        for doc_id, n in counts.items():
            sentences = [
                AnnotatedSentence(doc_id, i, f"sentence {i} of {doc_id}", rng.choice(LABELS))
                for i in range(n)
            ]
            files.append(ResumeAnnotationFile(doc_id, sentences))
        return files

    def test_counts(self):
        manifest, table = assemble(self.make_files({"a": 3, "b": 4}), created="t")
        assert manifest.total_sentences == 7
        assert manifest.documents == [("a", 3), ("b", 4)]
        assert len(table) == 7
        assert sum(manifest.label_histogram.values()) == 7

    def test_empty_set(self):
        manifest, table = assemble([], created="t")
        assert manifest.total_sentences == 0
        assert table == []
        assert manifest.label_histogram == {t: 0 for t in LABEL_TOKENS}

    def test_table_ordered_by_doc_then_index(self):
        files = self.make_files({"b": 2, "a": 2})
        _, table = assemble(files, created="t")
        assert [(s.doc_id, s.index) for s in table] == [("a", 0), ("a", 1), ("b", 0), ("b", 1)]

    def test_histogram_matches_hand_count(self):
        files = self.make_files({f"doc-{i}": 5 for i in range(10)}, seed=11)
        manifest, table = assemble(files, created="t")
        by_hand = Counter(s.label.token for f in files for s in f.sentences)
        assert manifest.label_histogram == {t: by_hand.get(t, 0) for t in LABEL_TOKENS}
        assert Counter(s.label.token for s in table) == by_hand

    def test_duplicate_doc_id(self):
        files = self.make_files({"a": 2}) + self.make_files({"a": 3})
        with pytest.raises(DuplicateDocId):
            assemble(files, created="t")

    def test_corpus_id_stable_and_content_sensitive(self):
        files = self.make_files({"a": 3, "b": 4}, seed=5)
        m1, _ = assemble(files, created="t1")
        m2, _ = assemble(files, created="t2")
        assert m1.corpus_id == m2.corpus_id
        m3, _ = assemble(self.make_files({"a": 3, "b": 4}, seed=6), created="t1")
        assert m3.corpus_id != m1.corpus_id

    def test_manifest_round_trip(self, tmp_path: Path):
        manifest, _ = assemble(self.make_files({"a": 3}), created="2024-01-01T00:00:00Z")
        p = tmp_path / "manifest.json"
        manifest.save(p)
        assert CorpusManifest.load(p) == manifest


class TestCreatedTimestamp:
    def test_explicit_wins(self, monkeypatch):
        monkeypatch.setenv("RCW_EPOCH", "0")
        assert resolve_created("2020-05-05T00:00:00Z") == "2020-05-05T00:00:00Z"

    def test_epoch_env_pin(self, monkeypatch):
        monkeypatch.setenv("RCW_EPOCH", "0")
        assert resolve_created() == "1970-01-01T00:00:00Z"

    def test_source_date_epoch_fallback(self, monkeypatch):
        monkeypatch.delenv("RCW_EPOCH", raising=False)
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "86400")
        assert resolve_created() == "1970-01-02T00:00:00Z"


class TestDistribution:
    def test_all_one_label(self):
        sentences = [AnnotatedSentence("d", i, "x y", Label.EXPERIENCE) for i in range(5)]
        dist = class_distribution(sentences)
        assert dist[Label.EXPERIENCE] == 1.0
        assert all(dist[l] == 0.0 for l in LABELS if l is not Label.EXPERIENCE)

    def test_balanced(self):
        sentences = [
            AnnotatedSentence("d", i, "x y", LABELS[i % 7]) for i in range(700)
        ]
        dist = class_distribution(sentences)
        for label in LABELS:
            assert dist[label] == pytest.approx(1 / 7)

    def test_fractions_sum_to_one(self):
        rng = random.Random(2)
        sentences = [AnnotatedSentence("d", i, "x y", rng.choice(LABELS)) for i in range(321)]
        assert sum(class_distribution(sentences).values()) == pytest.approx(1.0, abs=1e-9)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            class_distribution([])

    def test_np_ordinals(self):
        sentences = [AnnotatedSentence("d", 0, "x y", Label.OBJECT)]
        arr = np_ordinals(sentences)
        assert arr.dtype == np.int64
        assert arr.tolist() == [6]


class TestLargestRemainder:
    def test_paper_scale(self):
        assert largest_remainder(78000, (0.7, 0.15, 0.15)) == [54600, 11700, 11700]

    def test_tie_goes_to_earlier_part(self):
        # 10 * 0.15 = 1.5 twice; valid (earlier) takes the leftover
        assert largest_remainder(10, (0.7, 0.15, 0.15)) == [7, 2, 1]

    def test_exact_thirds(self):
        assert largest_remainder(10, (1 / 3, 1 / 3, 1 / 3)) == [4, 3, 3]

    def test_zero_total(self):
        assert largest_remainder(0, (0.7, 0.15, 0.15)) == [0, 0, 0]

    @given(
        st.integers(0, 100000),
        st.lists(st.integers(1, 9), min_size=2, max_size=5),
    )
    @settings(max_examples=200)
    def test_sums_and_bounds(self, total: int, weights: list[int]):
        ratios = [w / sum(weights) for w in weights]
        parts = largest_remainder(total, ratios)
        assert sum(parts) == total
        for part, ratio in zip(parts, ratios):
            assert abs(part - total * ratio) < 1.0 + 1e-9


def corpus_of(n: int, seed: int = 0) -> list[AnnotatedSentence]:
    rng = random.Random(seed)
    return [AnnotatedSentence(f"doc-{i // 10}", i % 10, f"text {i}", rng.choice(LABELS)) for i in range(n)]


class TestSplit:
    def test_paper_ratio_sizes(self):
        got = split(corpus_of(1000), (0.7, 0.15, 0.15), seed=1)
        assert got.sizes == (700, 150, 150)

    def test_determinism(self):
        sentences = corpus_of(500)
        a = split(sentences, seed=9)
        b = split(sentences, seed=9)
        assert a.train == b.train and a.valid == b.valid and a.test == b.test

    def test_seed_changes_membership(self):
        sentences = corpus_of(500)
        a = split(sentences, seed=1)
        b = split(sentences, seed=2)
        assert a.train != b.train

    def test_partition(self):
        sentences = corpus_of(333, seed=4)
        got = split(sentences, seed=4)
        key = lambda s: (s.doc_id, s.index)
        combined = sorted(got.train + got.valid + got.test, key=key)
        assert combined == sorted(sentences, key=key)
        ids = [key(s) for part in got.parts().values() for s in part]
        assert len(ids) == len(set(ids))

    def test_bad_ratios(self):
        sentences = corpus_of(10)
        with pytest.raises(BadRatios):
            split(sentences, (0.5, 0.5))
        with pytest.raises(BadRatios):
            split(sentences, (0.8, 0.3, -0.1))
        with pytest.raises(BadRatios):
            split(sentences, (0.7, 0.2, 0.2))

    @given(st.integers(0, 2**16), st.integers(1, 400))
    @settings(max_examples=50)
    def test_partition_property(self, seed: int, n: int):
        sentences = corpus_of(n, seed=1)
        got = split(sentences, seed=seed)
        assert sorted(
            got.train + got.valid + got.test, key=lambda s: (s.doc_id, s.index)
        ) == sorted(sentences, key=lambda s: (s.doc_id, s.index))
        assert got.sizes == tuple(largest_remainder(n, (0.7, 0.15, 0.15)))

    def test_to_dict_and_save(self, tmp_path: Path):
        got = split(corpus_of(20), seed=3)
        raw = got.to_dict()
        assert raw["seed"] == 3
        assert set(raw["parts"]) == {"train", "valid", "test"}
        got.save(tmp_path / "split.json")
        assert (tmp_path / "split.json").read_text(encoding="utf-8").endswith("\n")


class TestSplitSizes:
    def test_exact_sizes(self):
        got = split_sizes(corpus_of(100), (80, 15, 5), seed=0)
        assert got.sizes == (80, 15, 5)
        assert (len(got.train), len(got.valid), len(got.test)) == (80, 15, 5)

    def test_sizes_must_cover_corpus(self):
        with pytest.raises(BadRatios):
            split_sizes(corpus_of(100), (80, 15, 4), seed=0)

    def test_negative_size_rejected(self):
        with pytest.raises(BadRatios):
            split_sizes(corpus_of(100), (105, -5, 0), seed=0)

    def test_agrees_with_ratio_split(self):
        sentences = corpus_of(97)
        by_ratio = split(sentences, (0.7, 0.15, 0.15), seed=5)
        by_sizes = split_sizes(sentences, largest_remainder(97, (0.7, 0.15, 0.15)), seed=5)
        assert by_ratio.parts() == by_sizes.parts()


class TestStratifiedSplit:
    def test_per_label_counts_follow_largest_remainder(self):
        sentences = corpus_of(700, seed=8)
        got = split(sentences, (0.7, 0.15, 0.15), seed=8, stratified=True)
        totals = Counter(s.label for s in sentences)
        for part_idx, part in enumerate((got.train, got.valid, got.test)):
            by_label = Counter(s.label for s in part)
            for label in LABELS:
                expected = largest_remainder(totals[label], (0.7, 0.15, 0.15))[part_idx]
                assert by_label.get(label, 0) == expected

    def test_partition(self):
        sentences = corpus_of(211, seed=2)
        got = split(sentences, seed=2, stratified=True)
        key = lambda s: (s.doc_id, s.index)
        assert sorted(got.train + got.valid + got.test, key=key) == sorted(sentences, key=key)

    def test_deterministic(self):
        sentences = corpus_of(211, seed=2)
        a = split(sentences, seed=2, stratified=True)
        b = split(sentences, seed=2, stratified=True)
        assert a.parts() == b.parts()
