import json
import math

import pytest
from hypothesis import given, strategies as st

from metamcq.dataset import OptionLabel
from metamcq.scores import (
    ConfidenceVector,
    QuestionEmbedding,
    ScoreBundle,
    ScoreError,
    confidence_margin,
    load_scores,
    save_scores,
    uniform_fallback,
)


class TestConfidenceVector:
    def test_uniform_accepted(self):
        v = ConfidenceVector(scores=(0.25, 0.25, 0.25, 0.25))
        assert sum(v.scores) == 1.0

    def test_bad_sum_rejected(self):
        with pytest.raises(ScoreError, match="sum to 1"):
            ConfidenceVector(scores=(0.23, 0.25, 0.25, 0.20))

    def test_within_tolerance_renormalized_exactly(self):
        v = ConfidenceVector(scores=(0.25 + 4e-7, 0.25, 0.25, 0.25))
        assert math.fsum(v.scores) == pytest.approx(1.0, abs=1e-15)

    def test_negative_rejected(self):
        with pytest.raises(ScoreError):
            ConfidenceVector(scores=(-0.1, 0.5, 0.3, 0.3))

    def test_non_finite_rejected(self):
        with pytest.raises(ScoreError):
            ConfidenceVector(scores=(float("nan"), 0.3, 0.3, 0.4))

    def test_argmax_tie_breaks_to_earlier_label(self):
        assert ConfidenceVector(scores=(0.25, 0.25, 0.25, 0.25)).argmax() == OptionLabel.A
        assert ConfidenceVector(scores=(0.1, 0.4, 0.4, 0.1)).argmax() == OptionLabel.B


class TestMargin:
    def test_uniform_is_zero(self):
        assert confidence_margin(ConfidenceVector(scores=(0.25,) * 4)) == 0.0

    def test_peaked(self):
        assert confidence_margin(ConfidenceVector(scores=(0.7, 0.1, 0.1, 0.1))) == pytest.approx(0.6)

    def test_close_race(self):
        v = ConfidenceVector(scores=(0.4, 0.35, 0.15, 0.10))
        assert confidence_margin(v) == pytest.approx(0.05)

    @given(st.permutations([0.45, 0.3, 0.15, 0.1]))
    def test_invariant_under_permutation(self, perm):
        assert confidence_margin(ConfidenceVector(scores=tuple(perm))) == pytest.approx(0.15)


class TestLoadScores:
    def test_fixture_loads(self, corpus, bundle):
        assert len(bundle.confidences) == 24
        assert bundle.dimension == 4
        assert bundle.scorer_id == "fixture-scorer"
        bundle.require_coverage(corpus)

    def test_unknown_id_rejected(self, tmp_path, corpus):
        path = tmp_path / "scores.jsonl"
        path.write_text(
            json.dumps({"id": "nope", "confidence": [0.25] * 4, "embedding": [0.0]}) + "\n",
            encoding="utf-8",
        )
        with pytest.raises(ScoreError, match="unknown item id"):
            load_scores(path, corpus)

    def test_bad_sum_rejected_with_location(self, tmp_path, corpus):
        path = tmp_path / "scores.jsonl"
        path.write_text(
            json.dumps({"id": "q01", "confidence": [0.23, 0.25, 0.25, 0.20], "embedding": [0.0]}) + "\n",
            encoding="utf-8",
        )
        with pytest.raises(ScoreError, match="scores.jsonl:1"):
            load_scores(path, corpus)

    def test_dimension_mismatch_rejected(self, tmp_path, corpus):
        path = tmp_path / "scores.jsonl"
        recs = [
            {"id": "q01", "confidence": [0.25] * 4, "embedding": [0.0, 0.0]},
            {"id": "q02", "confidence": [0.25] * 4, "embedding": [0.0, 0.0, 0.0]},
        ]
        path.write_text("\n".join(json.dumps(r) for r in recs) + "\n", encoding="utf-8")
        with pytest.raises(ScoreError, match="dimension"):
            load_scores(path, corpus)

    def test_duplicate_id_rejected(self, tmp_path, corpus):
        path = tmp_path / "scores.jsonl"
        rec = {"id": "q01", "confidence": [0.25] * 4, "embedding": [0.0]}
        path.write_text(json.dumps(rec) + "\n" + json.dumps(rec) + "\n", encoding="utf-8")
        with pytest.raises(ScoreError, match="duplicate"):
            load_scores(path, corpus)

    def test_round_trip_preserves_values(self, tmp_path, corpus, bundle):
        out = tmp_path / "rt.jsonl"
        save_scores(bundle, out, corpus)
        again = load_scores(out, corpus)
        for item_id, vec in bundle.confidences.items():
            for a, b in zip(vec.scores, again.confidence(item_id).scores):
                assert abs(a - b) <= 1e-9
            for a, b in zip(
                bundle.embedding(item_id).vector, again.embedding(item_id).vector
            ):
                assert abs(a - b) <= 1e-9

    def test_missing_coverage_aborts(self, corpus, bundle):
        partial = ScoreBundle(
            confidences={"q01": bundle.confidence("q01")},
            embeddings={"q01": bundle.embedding("q01")},
            dimension=4,
        )
        with pytest.raises(ScoreError, match="missing"):
            partial.require_coverage(corpus)


class TestUniformFallback:
    def test_all_uniform(self, corpus):
        fb = uniform_fallback(corpus, dimension=6)
        assert len(fb.confidences) == len(corpus)
        for item in corpus:
            assert fb.confidence(item.id).scores == (0.25, 0.25, 0.25, 0.25)
            assert fb.embedding(item.id).vector == (0.0,) * 6

    def test_passes_schema_validation(self, tmp_path, corpus):
        fb = uniform_fallback(corpus)
        out = tmp_path / "fb.jsonl"
        save_scores(fb, out, corpus)
        again = load_scores(out, corpus)
        again.require_coverage(corpus)

    def test_empty_corpus_rejected(self):
        from metamcq.dataset import Corpus

        with pytest.raises(ScoreError):
            uniform_fallback(Corpus(items=[]))


def test_embedding_rejects_non_finite():
    with pytest.raises(ScoreError):
        QuestionEmbedding(item_id="x", vector=(1.0, float("inf")))
