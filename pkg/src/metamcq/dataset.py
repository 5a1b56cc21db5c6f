"""Corpus loading, validation, and splitting for the metaphor MCQ tasks.

The native interchange format is JSON Lines, one record per line (UTF-8):

    {"id": "q1", "question": "...", "options": ["...", "...", "...", "..."],
     "gold": "B", "subtask": "components", "split": "validation"}

``gold`` and ``split`` are optional (unlabeled test items carry no gold).
The option array order defines labels A-D. A second adapter maps the
shared-task release layout (per-letter option fields) into the same shape.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator


class CorpusError(ValueError):
    """Raised on malformed corpus files or invalid items."""


class OptionLabel(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @property
    def index(self) -> int:
        return "ABCD".index(self.value)

    @classmethod
    def from_index(cls, i: int) -> "OptionLabel":
        return list(cls)[i]


LABELS = list(OptionLabel)

SUBTASKS = ("generation", "components")
SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class MCQItem:
    """One four-option multiple-choice question."""

    id: str
    question: str
    options: tuple[str, str, str, str]
    gold: OptionLabel | None = None
    subtask: str = "components"
    split: str = "validation"

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("item id must be non-empty")
        if not self.question:
            raise CorpusError(f"item {self.id!r}: question must be non-empty")
        if len(self.options) != 4:
            raise CorpusError(
                f"item {self.id!r}: expected exactly 4 options, got {len(self.options)}"
            )
        if any(not opt for opt in self.options):
            raise CorpusError(f"item {self.id!r}: option texts must be non-empty")
        if self.subtask not in SUBTASKS:
            raise CorpusError(f"item {self.id!r}: unknown subtask {self.subtask!r}")
        if self.split not in SPLITS:
            raise CorpusError(f"item {self.id!r}: unknown split {self.split!r}")

    def option_text(self, label: OptionLabel) -> str:
        return self.options[label.index]


@dataclass
class Corpus:
    """Ordered, id-unique collection of MCQItems. Read-only after construction."""

    items: list[MCQItem]
    source: str = ""
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for item in self.items:
            if item.id in seen:
                raise CorpusError(f"duplicate item id {item.id!r}")
            seen.add(item.id)
        self._by_id = {item.id: item for item in self.items}
        if not self.counts:
            self.counts = self._count_splits()

    def _count_splits(self) -> dict[str, int]:
        counts = {s: 0 for s in SPLITS}
        for item in self.items:
            counts[item.split] += 1
        counts["total"] = len(self.items)
        return counts

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[MCQItem]:
        return iter(self.items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def get(self, item_id: str) -> MCQItem:
        try:
            return self._by_id[item_id]
        except KeyError:
            raise CorpusError(f"unknown item id {item_id!r}") from None

    def ids(self) -> list[str]:
        return [item.id for item in self.items]


def _parse_gold(raw: object, where: str) -> OptionLabel | None:
    if raw is None or raw == "":
        return None
    try:
        return OptionLabel(str(raw).strip().upper())
    except ValueError:
        raise CorpusError(f"{where}: gold label must be one of A-D, got {raw!r}") from None


def _item_from_native(rec: dict, where: str) -> MCQItem:
    try:
        options = rec["options"]
    except KeyError:
        raise CorpusError(f"{where}: missing 'options' field") from None
    if not isinstance(options, list) or len(options) != 4:
        raise CorpusError(f"{where}: 'options' must be an array of exactly 4 texts")
    return MCQItem(
        id=str(rec.get("id", "")),
        question=str(rec.get("question", "")),
        options=tuple(str(o) for o in options),
        gold=_parse_gold(rec.get("gold"), where),
        subtask=rec.get("subtask", "components"),
        split=rec.get("split", "validation"),
    )


def _item_from_task_release(rec: dict, where: str, index: int) -> MCQItem:
    # Shared-task release rows carry per-letter option fields and a free-form
    # answer column; normalize them into the native shape.
    question = rec.get("question") or rec.get("context") or rec.get("sentence") or ""
    letters = ["A", "B", "C", "D"]
    if all(letter in rec for letter in letters):
        options = [str(rec[letter]) for letter in letters]
    elif "options" in rec:
        options = [str(o) for o in rec["options"]]
    else:
        raise CorpusError(f"{where}: no option fields found (expected A-D or 'options')")
    if len(options) != 4:
        raise CorpusError(f"{where}: expected exactly 4 options, got {len(options)}")
    gold_raw = rec.get("answer", rec.get("label", rec.get("gold")))
    return MCQItem(
        id=str(rec.get("id", index)),
        question=str(question),
        options=tuple(options),
        gold=_parse_gold(gold_raw, where),
        subtask=rec.get("subtask", "components"),
        split=rec.get("split", "validation"),
    )


FORMATS = ("native", "task")


def load_corpus(path: str | Path, format: str = "native") -> Corpus:
    """Load a JSONL corpus file, validating every record.

    ``format="native"`` reads the pipeline's interchange format;
    ``format="task"`` adapts the shared-task release layout.
    """
    if format not in FORMATS:
        raise CorpusError(f"unknown corpus format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    items: list[MCQItem] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path.name}:{lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{where}: malformed JSON record: {exc}") from None
            if not isinstance(rec, dict):
                raise CorpusError(f"{where}: record must be a JSON object")
            if format == "native":
                items.append(_item_from_native(rec, where))
            else:
                items.append(_item_from_task_release(rec, where, lineno))
    return Corpus(items=items, source=str(path))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus in the native JSONL format (byte-stable ordering)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for item in corpus:
            rec = {
                "id": item.id,
                "question": item.question,
                "options": list(item.options),
                "gold": item.gold.value if item.gold else None,
                "subtask": item.subtask,
                "split": item.split,
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def split_corpus(
    corpus: Corpus, train_fraction: float, seed: int
) -> tuple[Corpus, Corpus]:
    """Deterministically partition a corpus; |train| = floor(fraction * N)."""
    if not 0 < train_fraction < 1:
        raise CorpusError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if len(corpus) == 0:
        raise CorpusError("cannot split an empty corpus")
    n_train = int(train_fraction * len(corpus))
    indices = list(range(len(corpus)))
    random.Random(seed).shuffle(indices)
    train_idx = sorted(indices[:n_train])
    val_idx = sorted(indices[n_train:])
    train = Corpus(items=[corpus.items[i] for i in train_idx], source=corpus.source)
    val = Corpus(items=[corpus.items[i] for i in val_idx], source=corpus.source)
    return train, val
