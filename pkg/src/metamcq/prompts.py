"""Byte-exact assembly of the heuristic-enhanced prompt and its ablation
and baseline variants.

Full-mode layout, newline-separated, in order:

    Demonstration:
    <demo 1>
    <blank>
    <demo k>
    <blank>
    Q: <question>
    A. <option A> ... D. <option D>
    Answer candidates: A:0.7000, B:0.1000, C:0.1000, D:0.1000
    <answer-phrase instruction, when the run targets Track 1>
    A: Let's think step by step.

The final line of every mode is always the chain-of-thought trigger.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .dataset import MCQItem, OptionLabel, LABELS
from .scores import ConfidenceVector


class PromptError(ValueError):
    pass


COT_TRIGGER = "A: Let's think step by step."
ANSWER_INSTRUCTION = 'Please give your final answer in the form "The answer is {}."'
CANDIDATE_STYLES = ("scores", "ranked")


class PromptMode(str, Enum):
    FULL = "full"
    NO_CANDIDATES = "no_candidates"
    NO_DEMONSTRATIONS = "no_demonstrations"
    PLAIN_ZERO_SHOT = "plain_zero_shot"
    REFERENCE_ANSWER = "reference_answer"
    REFERENCE_ANSWER_WITH_REASONS = "reference_answer_with_reasons"


ABLATION_MODES = (
    PromptMode.FULL,
    PromptMode.NO_CANDIDATES,
    PromptMode.NO_DEMONSTRATIONS,
    PromptMode.PLAIN_ZERO_SHOT,
)


@dataclass(frozen=True)
class Demonstration:
    """A validated worked example: question, options, reasoning, answer."""

    item_id: str
    question: str
    options: tuple[str, str, str, str]
    chain_text: str
    answer: OptionLabel

    def render(self) -> str:
        lines = [f"Q: {self.question}"]
        lines += [f"{label.value}. {opt}" for label, opt in zip(LABELS, self.options)]
        lines.append(f"A: {self.chain_text}")
        lines.append(f"The answer is {self.answer.value}.")
        return "\n".join(lines)


@dataclass(frozen=True)
class HeuristicPrompt:
    mode: PromptMode
    item_id: str
    rendered_text: str
    demo_ids: tuple[str, ...] = ()
    candidates: ConfidenceVector | None = None


def render_question(item: MCQItem) -> str:
    lines = [f"Q: {item.question}"]
    lines += [f"{label.value}. {opt}" for label, opt in zip(LABELS, item.options)]
    return "\n".join(lines)


def render_candidates(p: ConfidenceVector, style: str = "scores") -> str:
    """Candidate line in fixed A-D order, 4 decimal places, locale-free."""
    if style == "scores":
        body = ", ".join(
            f"{label.value}:{p.score(label):.4f}" for label in LABELS
        )
    elif style == "ranked":
        ranked = sorted(LABELS, key=lambda lb: (-p.score(lb), lb.value))
        body = " > ".join(label.value for label in ranked)
    else:
        raise PromptError(f"unknown candidate style {style!r}")
    return f"Answer candidates: {body}"


def build_prompt(
    item: MCQItem,
    demos: list[Demonstration],
    p: ConfidenceVector | None,
    mode: PromptMode,
    *,
    answer_instruction: bool = True,
    candidate_style: str = "scores",
    suggestion: OptionLabel | None = None,
    suggestion_reason: str | None = None,
) -> HeuristicPrompt:
    """Assemble the prompt for one item. Pure: identical inputs give
    byte-identical text."""
    needs_demos = mode in (PromptMode.FULL, PromptMode.NO_CANDIDATES)
    needs_candidates = mode in (PromptMode.FULL, PromptMode.NO_DEMONSTRATIONS)
    if needs_demos and not demos:
        raise PromptError(f"mode {mode.value} requires demonstrations")
    if needs_candidates and p is None:
        raise PromptError(f"mode {mode.value} requires a confidence vector")
    if mode in (PromptMode.REFERENCE_ANSWER, PromptMode.REFERENCE_ANSWER_WITH_REASONS):
        if suggestion is None:
            raise PromptError(f"mode {mode.value} requires a suggested answer")
        if mode == PromptMode.REFERENCE_ANSWER_WITH_REASONS and not suggestion_reason:
            raise PromptError("reference_answer_with_reasons requires a reason text")

    lines: list[str] = []
    demo_ids: tuple[str, ...] = ()
    if mode in (PromptMode.FULL, PromptMode.NO_CANDIDATES) and demos:
        lines.append("Demonstration:")
        for demo in demos:
            lines.append(demo.render())
            lines.append("")
        demo_ids = tuple(d.item_id for d in demos)

    lines.append(render_question(item))

    if needs_candidates:
        lines.append(render_candidates(p, candidate_style))
    elif mode == PromptMode.REFERENCE_ANSWER:
        lines.append(
            f"Suggested answer: {suggestion.value} (this suggestion may be incorrect)"
        )
    elif mode == PromptMode.REFERENCE_ANSWER_WITH_REASONS:
        lines.append(
            f"Suggested answer: {suggestion.value} (this suggestion may be incorrect)"
        )
        lines.append(f"Reason for the suggestion: {suggestion_reason}")

    if answer_instruction:
        lines.append(ANSWER_INSTRUCTION)
    lines.append(COT_TRIGGER)

    return HeuristicPrompt(
        mode=mode,
        item_id=item.id,
        rendered_text="\n".join(lines),
        demo_ids=demo_ids,
        candidates=p if needs_candidates else None,
    )


def zero_shot_prompt(item: MCQItem, *, answer_instruction: bool = True) -> str:
    """The plain zero-shot chain-of-thought prompt used for chain generation."""
    return build_prompt(
        item, [], None, PromptMode.PLAIN_ZERO_SHOT, answer_instruction=answer_instruction
    ).rendered_text
