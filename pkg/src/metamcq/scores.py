"""Wire schema for confidence vectors and question embeddings.

Score files are JSON Lines. The first record is a header:

    {"dimension": 16, "scorer_id": "tiny-encoder", "checkpoint": "ckpt-5"}

followed by one record per item:

    {"id": "q1", "confidence": [0.7, 0.1, 0.1, 0.1], "embedding": [ ... ]}

The scorer component exports this format; the pipeline imports it here.
Round-trips must preserve values to 1e-9 per component.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .dataset import Corpus, OptionLabel, LABELS

SUM_TOLERANCE = 1e-6


class ScoreError(ValueError):
    """Raised on schema violations in score files."""


@dataclass(frozen=True)
class ConfidenceVector:
    """Four per-option scores in A-D order, non-negative, summing to 1."""

    scores: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.scores) != 4:
            raise ScoreError(f"confidence vector needs 4 scores, got {len(self.scores)}")
        if any(not math.isfinite(s) for s in self.scores):
            raise ScoreError("confidence scores must be finite")
        if any(s < 0 or s > 1 for s in self.scores):
            raise ScoreError(f"confidence scores must lie in [0, 1]: {self.scores}")
        total = sum(self.scores)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ScoreError(
                f"confidence scores must sum to 1 within {SUM_TOLERANCE}, got {total}"
            )
        # Renormalize exactly so downstream arithmetic sees a true distribution.
        if total != 1.0:
            object.__setattr__(
                self, "scores", tuple(s / total for s in self.scores)
            )

    def score(self, label: OptionLabel) -> float:
        return self.scores[label.index]

    def argmax(self) -> OptionLabel:
        # Ties break toward the earlier label.
        best = max(range(4), key=lambda i: (self.scores[i], -i))
        return LABELS[best]


UNIFORM = ConfidenceVector(scores=(0.25, 0.25, 0.25, 0.25))


def confidence_margin(p: ConfidenceVector) -> float:
    """Top score minus second score; 0 for a uniform vector."""
    ordered = sorted(p.scores, reverse=True)
    return ordered[0] - ordered[1]


@dataclass(frozen=True)
class QuestionEmbedding:
    item_id: str
    vector: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(not math.isfinite(v) for v in self.vector):
            raise ScoreError(f"embedding for {self.item_id!r} has non-finite components")


@dataclass
class ScoreBundle:
    """Immutable per-item map of confidence vectors and embeddings."""

    confidences: dict[str, ConfidenceVector]
    embeddings: dict[str, QuestionEmbedding]
    dimension: int
    scorer_id: str = "unknown"
    checkpoint: str = "unknown"

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.confidences

    def confidence(self, item_id: str) -> ConfidenceVector:
        try:
            return self.confidences[item_id]
        except KeyError:
            raise ScoreError(f"no scores for item {item_id!r}") from None

    def embedding(self, item_id: str) -> QuestionEmbedding:
        try:
            return self.embeddings[item_id]
        except KeyError:
            raise ScoreError(f"no embedding for item {item_id!r}") from None

    def require_coverage(self, corpus: Corpus) -> None:
        missing = [item.id for item in corpus if item.id not in self.confidences]
        if missing:
            raise ScoreError(
                f"score bundle missing {len(missing)} corpus items "
                f"(first: {missing[:5]})"
            )


def load_scores(path: str | Path, corpus: Corpus) -> ScoreBundle:
    """Read and validate a score file against a loaded corpus."""
    path = Path(path)
    confidences: dict[str, ConfidenceVector] = {}
    embeddings: dict[str, QuestionEmbedding] = {}
    dimension: int | None = None
    scorer_id = "unknown"
    checkpoint = "unknown"
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ScoreError(f"{path.name}:{lineno}: malformed record: {exc}") from None
            if lineno == 1 and "dimension" in rec and "id" not in rec:
                dimension = int(rec["dimension"])
                scorer_id = rec.get("scorer_id", scorer_id)
                checkpoint = rec.get("checkpoint", checkpoint)
                continue
            item_id = str(rec.get("id", ""))
            if item_id not in corpus:
                raise ScoreError(f"{path.name}:{lineno}: unknown item id {item_id!r}")
            if item_id in confidences:
                raise ScoreError(f"{path.name}:{lineno}: duplicate id {item_id!r}")
            try:
                vec = ConfidenceVector(scores=tuple(float(x) for x in rec["confidence"]))
            except ScoreError as exc:
                raise ScoreError(f"{path.name}:{lineno}: {exc}") from None
            emb = tuple(float(x) for x in rec.get("embedding", []))
            if dimension is None:
                dimension = len(emb)
            elif len(emb) != dimension:
                raise ScoreError(
                    f"{path.name}:{lineno}: embedding dimension {len(emb)} != {dimension}"
                )
            confidences[item_id] = vec
            embeddings[item_id] = QuestionEmbedding(item_id=item_id, vector=emb)
    return ScoreBundle(
        confidences=confidences,
        embeddings=embeddings,
        dimension=dimension or 0,
        scorer_id=scorer_id,
        checkpoint=checkpoint,
    )


def save_scores(bundle: ScoreBundle, path: str | Path, corpus: Corpus | None = None) -> None:
    """Write a bundle in the wire format; ordering follows the corpus when given."""
    path = Path(path)
    ids = corpus.ids() if corpus is not None else sorted(bundle.confidences)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "dimension": bundle.dimension,
            "scorer_id": bundle.scorer_id,
            "checkpoint": bundle.checkpoint,
        }
        fh.write(json.dumps(header) + "\n")
        for item_id in ids:
            rec = {
                "id": item_id,
                "confidence": list(bundle.confidences[item_id].scores),
                "embedding": list(bundle.embeddings[item_id].vector),
            }
            fh.write(json.dumps(rec) + "\n")


def uniform_fallback(corpus: Corpus, dimension: int = 8) -> ScoreBundle:
    """Uniform confidence and zero embeddings; enables scorer-free runs."""
    if len(corpus) == 0:
        raise ScoreError("cannot build a fallback bundle for an empty corpus")
    zero = tuple(0.0 for _ in range(dimension))
    return ScoreBundle(
        confidences={item.id: UNIFORM for item in corpus},
        embeddings={
            item.id: QuestionEmbedding(item_id=item.id, vector=zero) for item in corpus
        },
        dimension=dimension,
        scorer_id="uniform-fallback",
        checkpoint="none",
    )
