import decimal
import difflib
import math

import pytest
from hypothesis import given, strategies as st

from metamcq.dataset import OptionLabel
from metamcq.prompts import (
    ANSWER_INSTRUCTION,
    COT_TRIGGER,
    PromptError,
    PromptMode,
    build_prompt,
    render_candidates,
    zero_shot_prompt,
)
from metamcq.scores import ConfidenceVector

PEAKED = ConfidenceVector(scores=(0.7, 0.1, 0.1, 0.1))


def render(corpus, demos, mode, **kwargs):
    item = corpus.get("q01")
    if mode in (PromptMode.REFERENCE_ANSWER, PromptMode.REFERENCE_ANSWER_WITH_REASONS):
        kwargs.setdefault("suggestion", PEAKED.argmax())
        kwargs.setdefault("suggestion_reason", "句中比喻词“像”之后紧跟着火蛇。")
    return build_prompt(item, demos, PEAKED, mode, **kwargs).rendered_text


class TestGoldenFiles:
    @pytest.mark.parametrize("mode", list(PromptMode))
    def test_byte_identical_to_golden(self, corpus, fixture_demos, golden_dir, mode):
        text = render(corpus, fixture_demos, mode)
        expected = (golden_dir / f"prompt_{mode.value}.txt").read_text(encoding="utf-8")
        assert text + "\n" == expected

    def test_full_contains_each_demo_once_in_cluster_order(self, corpus, fixture_demos):
        text = render(corpus, fixture_demos, PromptMode.FULL)
        positions = []
        for demo in fixture_demos:
            rendered = demo.render()
            assert text.count(rendered) == 1
            positions.append(text.index(rendered))
        assert positions == sorted(positions)


class TestBlockDiffs:
    def diff_lines(self, a, b):
        return [
            line
            for line in difflib.ndiff(a.splitlines(), b.splitlines())
            if line.startswith(("+ ", "- "))
        ]

    def test_full_vs_no_candidates_is_candidates_line(self, corpus, fixture_demos):
        full = render(corpus, fixture_demos, PromptMode.FULL)
        nc = render(corpus, fixture_demos, PromptMode.NO_CANDIDATES)
        assert self.diff_lines(full, nc) == [
            "- Answer candidates: A:0.7000, B:0.1000, C:0.1000, D:0.1000"
        ]

    def test_full_vs_no_demos_is_demo_block(self, corpus, fixture_demos):
        full = render(corpus, fixture_demos, PromptMode.FULL)
        nd = render(corpus, fixture_demos, PromptMode.NO_DEMONSTRATIONS)
        removed = self.diff_lines(full, nd)
        assert all(line.startswith("- ") for line in removed)
        assert removed[0] == "- Demonstration:"
        demo_block_lines = 1 + sum(
            len(d.render().splitlines()) + 1 for d in fixture_demos
        )
        assert len(removed) == demo_block_lines

    def test_no_demos_vs_plain_is_candidates_line(self, corpus, fixture_demos):
        nd = render(corpus, fixture_demos, PromptMode.NO_DEMONSTRATIONS)
        plain = render(corpus, fixture_demos, PromptMode.PLAIN_ZERO_SHOT)
        assert self.diff_lines(nd, plain) == [
            "- Answer candidates: A:0.7000, B:0.1000, C:0.1000, D:0.1000"
        ]


class TestStructure:
    @pytest.mark.parametrize("mode", list(PromptMode))
    def test_last_line_is_trigger(self, corpus, fixture_demos, mode):
        text = render(corpus, fixture_demos, mode)
        assert text.splitlines()[-1] == COT_TRIGGER

    def test_pure_function(self, corpus, fixture_demos):
        a = render(corpus, fixture_demos, PromptMode.FULL)
        b = render(corpus, fixture_demos, PromptMode.FULL)
        assert a == b

    def test_plain_skeleton(self, corpus):
        item = corpus.get("q01")
        text = zero_shot_prompt(item, answer_instruction=False)
        lines = text.splitlines()
        assert lines[0] == f"Q: {item.question}"
        assert lines[-1] == COT_TRIGGER
        assert ANSWER_INSTRUCTION not in text

    def test_track1_instruction_present_by_default(self, corpus):
        text = zero_shot_prompt(corpus.get("q01"))
        assert ANSWER_INSTRUCTION in text

    def test_candidates_ignore_mode_scores(self, corpus, fixture_demos):
        other = ConfidenceVector(scores=(0.25, 0.25, 0.25, 0.25))
        item = corpus.get("q01")
        a = build_prompt(item, fixture_demos, PEAKED, PromptMode.NO_CANDIDATES)
        b = build_prompt(item, fixture_demos, other, PromptMode.NO_CANDIDATES)
        assert a.rendered_text == b.rendered_text

    def test_full_requires_demos(self, corpus):
        with pytest.raises(PromptError, match="demonstrations"):
            build_prompt(corpus.get("q01"), [], PEAKED, PromptMode.FULL)

    def test_full_requires_candidates(self, corpus, fixture_demos):
        with pytest.raises(PromptError, match="confidence"):
            build_prompt(corpus.get("q01"), fixture_demos, None, PromptMode.FULL)

    def test_reference_requires_suggestion(self, corpus):
        with pytest.raises(PromptError, match="suggested"):
            build_prompt(corpus.get("q01"), [], None, PromptMode.REFERENCE_ANSWER)

    def test_reference_with_reasons_requires_reason(self, corpus):
        with pytest.raises(PromptError, match="reason"):
            build_prompt(
                corpus.get("q01"),
                [],
                None,
                PromptMode.REFERENCE_ANSWER_WITH_REASONS,
                suggestion=OptionLabel.A,
            )


class TestRenderCandidates:
    def test_uniform(self):
        line = render_candidates(ConfidenceVector(scores=(0.25,) * 4))
        assert line == "Answer candidates: A:0.2500, B:0.2500, C:0.2500, D:0.2500"

    def test_softmax_values_round_half_even(self):
        e2 = math.exp(2.0)
        denom = e2 + 3.0
        p = ConfidenceVector(scores=(e2 / denom, 1 / denom, 1 / denom, 1 / denom))
        line = render_candidates(p)
        # Oracle: Decimal quantization with banker's rounding.
        expected = ", ".join(
            f"{label}:{decimal.Decimal(value).quantize(decimal.Decimal('0.0001'), rounding=decimal.ROUND_HALF_EVEN)}"
            for label, value in zip("ABCD", p.scores)
        )
        assert line == f"Answer candidates: {expected}"

    @given(
        st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=4, max_size=4)
    )
    def test_injective_beyond_resolution(self, raw):
        total = sum(raw)
        p = ConfidenceVector(scores=tuple(x / total for x in raw))
        shifted = [p.scores[0] - 3e-4, p.scores[1] + 3e-4, p.scores[2], p.scores[3]]
        if min(shifted) < 0:
            return
        q = ConfidenceVector(scores=tuple(shifted))
        assert render_candidates(p) != render_candidates(q)

    def test_ranked_style(self):
        p = ConfidenceVector(scores=(0.1, 0.6, 0.2, 0.1))
        assert render_candidates(p, style="ranked") == "Answer candidates: B > C > A > D"

    def test_unknown_style(self):
        with pytest.raises(PromptError):
            render_candidates(ConfidenceVector(scores=(0.25,) * 4), style="pie-chart")
