import json

import pytest

from diversity_metrics import (
    EmptyOriginal,
    MissingAugmentationText,
    MissingSourceRecord,
    build_report,
    length_diversity,
    token_diversity,
    token_diversity_per_augmentation,
)

TEN_TOKENS = "one two three four five six seven eight nine ten"


class TestScores:
    def test_new_tokens_relative_to_original(self):
        assert token_diversity("a b", ["a b c d e"]) == 150.0

    def test_new_tokens_are_pooled(self):
        assert token_diversity("a b", ["a c", "b c", "d"]) == 100.0
        assert token_diversity_per_augmentation("a b", ["a c", "b c", "d"]) == pytest.approx(50.0)

    def test_case_and_punctuation_ignored(self):
        assert token_diversity("The cat.", ["the CAT!"]) == 0.0

    def test_length_difference(self):
        augs = [" ".join(["x"] * 12), " ".join(["x"] * 6)]
        assert length_diversity(TEN_TOKENS, augs) == 3.0

    def test_no_augmentations(self):
        assert token_diversity("a b", []) == 0.0
        assert length_diversity("a b", []) == 0.0
        assert token_diversity_per_augmentation("a b", []) == 0.0

    def test_empty_original(self):
        with pytest.raises(EmptyOriginal):
            token_diversity(" ... ", ["a"])


class TestBuildReport:
    def test_corpus_against_itself(self):
        corpus = [{"id": "d1", "text": "a b"}, {"id": "d2", "text": "c d e"}]
        report = build_report(corpus, corpus)
        assert report.token_diversity == 0.0
        assert report.length_diversity == 0.0

    def test_join_and_average(self):
        originals = [{"id": "d1", "text": "a b"}, {"id": "d2", "text": TEN_TOKENS}]
        augmented = [
            {"id": "d1", "text": "a b", "round": None},
            {"id": "d1#r0", "source_id": "d1", "round": 0, "abstract_text": "a b c d e"},
            {"id": "d2#r0", "source_id": "d2", "round": 0, "expanded_text": " ".join(["one"] * 12),
             "abstract_text": "ignored"},
            {"id": "d2#r1", "source_id": "d2", "round": 1, "expanded_text": "one two three four five six"},
        ]
        report = build_report(originals, augmented)
        assert list(report.per_record["source_id"]) == ["d1", "d2"]
        assert list(report.per_record["augmentations"]) == [1, 2]
        assert report.token_diversity == pytest.approx((150.0 + 0.0) / 2)
        assert report.length_diversity == pytest.approx((3.0 + 3.0) / 2)

    def test_missing_source(self):
        with pytest.raises(MissingSourceRecord):
            build_report([{"id": "d1", "text": "a"}], [{"id": "x#r0", "source_id": "d9", "text": "b"}])

    def test_only_source_rows(self):
        report = build_report([{"id": "d1", "text": "a"}], [{"id": "d1", "text": "a", "round": None}])
        assert report.token_diversity == 0.0
        assert report.per_record.empty

    def test_serialized_forms(self):
        report = build_report([{"id": "d1", "text": "a b"}], [{"source_id": "d1", "text": "a b c d e"}], pooled=False)
        payload = json.loads(report.dumps())
        assert payload["D"] == 150.0
        assert payload["pooled"] is False
        assert payload["records"] == [{"source_id": "d1", "augmentations": 1, "D": 150.0, "DL": 3.0}]
        text = report.to_text()
        assert "AUGMENTATION DIVERSITY REPORT" in text
        assert "per augmentation" in text

    def test_rows_without_text_are_rejected(self):
        augmented = [
            {"id": "d1#r0", "source_id": "d1", "round": 0, "abstract_amr": "(a / b)"},
            {"id": "d1#r1", "source_id": "d1", "round": 1, "abstract_text": None},
            {"id": "d1#r2", "source_id": "d1", "round": 2, "text": "a c"},
        ]
        with pytest.raises(MissingAugmentationText, match=r"2 augmentation row\(s\).*d1#r0, d1#r1"):
            build_report([{"id": "d1", "text": "a b"}], augmented)
