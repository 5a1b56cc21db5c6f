import pytest

from metamcq.client import (
    ChatRequest,
    ChatResponse,
    ClientError,
    LLMClient,
    ReplayBackend,
    ReplayMiss,
    TranscriptCache,
    TransientError,
    extract_answer,
    prompt_hash,
)
from metamcq.dataset import OptionLabel


class FlakyBackend:
    """Fails with transient errors a fixed number of times, then succeeds."""

    backend_id = "flaky"

    def __init__(self, failures):
        self.failures = failures
        self.attempts = 0

    def complete(self, request):
        self.attempts += 1
        if self.attempts <= self.failures:
            raise TransientError("simulated outage")
        return ChatResponse(text="recovered. The answer is A.")


class TestReplay:
    def test_hit_returns_recorded_response(self, tmp_path):
        cache = TranscriptCache(tmp_path / "t.jsonl")
        cache.put("replay", prompt_hash("hello"), ChatResponse(text="world"))
        backend = ReplayBackend(TranscriptCache(tmp_path / "t.jsonl"))
        response = backend.complete(ChatRequest(prompt="hello"))
        assert response.text == "world"

    def test_miss_names_hash(self, tmp_path):
        backend = ReplayBackend(TranscriptCache(tmp_path / "t.jsonl"))
        with pytest.raises(ReplayMiss, match=prompt_hash("unseen")):
            backend.complete(ChatRequest(prompt="unseen", tag="q9/full"))

    def test_fixture_transcript_round_trip(self, replay_client, corpus):
        from metamcq.prompts import zero_shot_prompt

        prompt = zero_shot_prompt(corpus.get("q01"))
        a = replay_client.complete(ChatRequest(prompt=prompt))
        b = replay_client.complete(ChatRequest(prompt=prompt))
        assert a.text == b.text


class TestRetries:
    def test_recovers_after_transient_failures(self):
        backend = FlakyBackend(failures=2)
        client = LLMClient(backend=backend, retries=3, backoff=0.0)
        response = client.complete(ChatRequest(prompt="p"))
        assert backend.attempts == 3
        assert "recovered" in response.text

    def test_exhausted_retries_raise(self):
        backend = FlakyBackend(failures=10)
        client = LLMClient(backend=backend, retries=3, backoff=0.0)
        with pytest.raises(ClientError, match="after 3 attempts"):
            client.complete(ChatRequest(prompt="p"))

    def test_response_persisted_before_return(self, tmp_path):
        path = tmp_path / "live.jsonl"
        backend = FlakyBackend(failures=0)
        client = LLMClient(backend=backend, cache=TranscriptCache(path), retries=1)
        client.complete(ChatRequest(prompt="one-shot"))
        # A live run converts directly into a replay fixture.
        replay = LLMClient(
            backend=ReplayBackend(TranscriptCache(path), backend_id="flaky"), retries=1
        )
        assert "recovered" in replay.complete(ChatRequest(prompt="one-shot")).text

    def test_cache_short_circuits(self, tmp_path):
        backend = FlakyBackend(failures=0)
        client = LLMClient(backend=backend, cache=TranscriptCache(), retries=1)
        client.complete(ChatRequest(prompt="again"))
        client.complete(ChatRequest(prompt="again"))
        assert backend.attempts == 1


class TestRequestValidation:
    def test_empty_prompt_rejected(self):
        with pytest.raises(ClientError):
            ChatRequest(prompt="")

    def test_negative_temperature_rejected(self):
        with pytest.raises(ClientError):
            ChatRequest(prompt="x", temperature=-0.1)


class TestExtractAnswer:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("…so the ground is purity. The answer is B.", "B"),
            ("The answer is A. … Reconsidering, the answer is C", "C"),
            ("B", "B"),
            ("no idea", None),
            ("经过逐步分析，答案是D。", "D"),
            ("答案是：C", "C"),
            ("The answer is ａ.", "A"),  # fullwidth lowercase letter
            ("ＴＨＥ ＡＮＳＷＥＲ ＩＳ Ｂ", "B"),  # fullwidth statement
            ("the answer is d", "D"),
            ("答案是 B，因为喻体直接出现。", "B"),
            ('The answer is "C".', "C"),
            ("c。", "C"),
            ("", None),
            ("The answer is E.", None),  # not an option letter
            ("答案是对的", None),
        ],
    )
    def test_patterns(self, text, expected):
        result = extract_answer(text)
        if expected is None:
            assert result is None
        else:
            assert result == OptionLabel(expected)

    def test_idempotent_on_extracted_letter(self):
        first = extract_answer("The answer is B.")
        assert extract_answer(first.value) == first

    def test_last_occurrence_wins_across_languages(self):
        text = "The answer is A. 再想一下，答案是C。"
        assert extract_answer(text) == OptionLabel.C
