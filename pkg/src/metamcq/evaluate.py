"""Accuracy computation, the scorer-argmax track-2 path, and the
comparator-word rule baseline."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import Corpus, MCQItem, OptionLabel, LABELS
from .scores import ScoreBundle


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class Prediction:
    item_id: str
    predicted: OptionLabel | None
    mode: str = "full"
    source: str = "llm"  # llm | scorer_argmax | rule_baseline


@dataclass
class EvalReport:
    mode: str
    counts: dict[str, int]
    accuracy: float
    per_item: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "mode": self.mode,
            "counts": self.counts,
            "accuracy": self.accuracy,
            "per_item": self.per_item,
        }
        return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2)

    def to_table(self) -> str:
        lines = [
            f"mode: {self.mode}",
            f"  correct:         {self.counts['correct']}",
            f"  wrong:           {self.counts['wrong']}",
            f"  unextracted:     {self.counts['unextracted']}",
            f"  skipped_no_gold: {self.counts['skipped_no_gold']}",
            f"  accuracy:        {self.accuracy:.4f}",
        ]
        return "\n".join(lines)


def accuracy(predictions: list[Prediction], corpus: Corpus, mode: str = "full") -> EvalReport:
    """Accuracy = correct / (correct + wrong + unextracted).

    Unextracted answers count as wrong; items without gold labels are
    excluded and counted as skipped.
    """
    by_id: dict[str, Prediction] = {}
    for pred in predictions:
        if pred.item_id not in corpus:
            raise EvalError(f"prediction for unknown item id {pred.item_id!r}")
        by_id[pred.item_id] = pred

    counts = {"correct": 0, "wrong": 0, "unextracted": 0, "skipped_no_gold": 0}
    per_item: list[dict] = []
    for item in corpus:
        pred = by_id.get(item.id)
        predicted = pred.predicted if pred else None
        if item.gold is None:
            outcome = "skipped_no_gold"
        elif predicted is None:
            outcome = "unextracted"
        elif predicted == item.gold:
            outcome = "correct"
        else:
            outcome = "wrong"
        counts[outcome] += 1
        per_item.append(
            {
                "item_id": item.id,
                "gold": item.gold.value if item.gold else None,
                "predicted": predicted.value if predicted else None,
                "outcome": outcome,
            }
        )
    scored = counts["correct"] + counts["wrong"] + counts["unextracted"]
    acc = counts["correct"] / scored if scored else 0.0
    return EvalReport(mode=mode, counts=counts, accuracy=acc, per_item=per_item)


def scorer_argmax(bundle: ScoreBundle, corpus: Corpus, mode: str = "scorer_argmax") -> list[Prediction]:
    """Track-2 predictions: the option with maximal confidence per item."""
    bundle.require_coverage(corpus)
    return [
        Prediction(
            item_id=item.id,
            predicted=bundle.confidence(item.id).argmax(),
            mode=mode,
            source="scorer_argmax",
        )
        for item in corpus
    ]


COMPARATORS = ("像", "如", "似", "是", "仿佛", "宛如", "好比", "犹如")
_PUNCT = set("，。！？、；：“”‘’（）,.!?;:\"'() \t\n")


def _lcs_length(a: str, b: str) -> int:
    """Longest common substring length (O(len(a)*len(b)) DP)."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    best = 0
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
                if cur[j] > best:
                    best = cur[j]
        prev = cur
    return best


def _comparator_spans(sentence: str, window: int = 4) -> list[str]:
    spans = []
    for comp in COMPARATORS:
        start = 0
        while True:
            pos = sentence.find(comp, start)
            if pos < 0:
                break
            before = sentence[max(0, pos - window):pos]
            after = sentence[pos + len(comp):pos + len(comp) + window]
            for span in (before, after):
                span = "".join(ch for ch in span if ch not in _PUNCT)
                if span:
                    spans.append(span)
            start = pos + len(comp)
    return spans


def rule_baseline(item: MCQItem) -> OptionLabel | None:
    """Language-rule heuristic: metaphor components tend to appear verbatim
    in the sentence, often adjacent to a comparator word. Scores each option
    by substring overlap with the sentence, weighting overlap with
    comparator-adjacent spans; abstains when no option overlaps usefully.
    """
    spans = _comparator_spans(item.question)
    best_label: OptionLabel | None = None
    best_key = (0, 0)
    for label in LABELS:
        text = item.option_text(label)
        base = _lcs_length(text, item.question)
        if base < 2:
            continue
        bonus = max((_lcs_length(text, span) for span in spans), default=0)
        key = (base + bonus, base)
        if key > best_key:
            best_key = key
            best_label = label
    return best_label


def write_submission(
    predictions: list[Prediction], corpus: Corpus, path: str | Path
) -> None:
    """Shared-task submission: one answer letter per item, corpus order."""
    by_id = {p.item_id: p for p in predictions}
    with Path(path).open("w", encoding="utf-8") as fh:
        for item in corpus:
            pred = by_id.get(item.id)
            letter = pred.predicted.value if pred and pred.predicted else ""
            fh.write(letter + "\n")
