"""Zero-shot chain-of-thought generation, chain validation against gold
labels, and per-cluster demonstration sampling."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .clustering import ClusterModel, nearest_to_centroid
from .client import LLMClient, ChatRequest, ClientError, extract_answer, prompt_hash
from .dataset import Corpus, MCQItem, OptionLabel
from .prompts import Demonstration, zero_shot_prompt


logger = logging.getLogger(__name__)


class CotError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReasoningChain:
    item_id: str
    chain_text: str
    extracted: OptionLabel | None
    valid: bool  # extracted present and equal to the item's gold label
    failed: bool = False  # client gave up on this item


class SelectionStrategy(str, Enum):
    SHORTEST_QUESTION = "shortest_question"
    SHORTEST_CHAIN = "shortest_chain"
    CLUSTER_CENTER = "cluster_center"
    SHORTEST_BOTH = "shortest_both"


def question_length(
    item: MCQItem,
    measure: str = "scalar_count",
    token_counts: dict[str, int] | None = None,
) -> int:
    """Question length in Unicode scalar values, or tokenizer counts when a
    sidecar mapping is supplied."""
    if measure == "scalar_count":
        return len(item.question)
    if measure == "token_count":
        if token_counts is None:
            raise CotError("token_count measure requires a tokenizer sidecar")
        try:
            return token_counts[item.id]
        except KeyError:
            raise CotError(f"sidecar has no token count for item {item.id!r}") from None
    raise CotError(f"unknown length measure {measure!r}")


def load_token_sidecar(path: str | Path) -> dict[str, int]:
    """Sidecar format: JSONL records {"id": ..., "tokens": n}."""
    counts: dict[str, int] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rec = json.loads(line)
                counts[str(rec["id"])] = int(rec["tokens"])
    return counts


class ChainCache:
    """Disk cache of generated chains, keyed by (item id, prompt hash, backend)."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._entries: dict[tuple[str, str, str], ReasoningChain] = {}
        if self.path and self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    chain = ReasoningChain(
                        item_id=rec["item_id"],
                        chain_text=rec["chain_text"],
                        extracted=OptionLabel(rec["extracted"]) if rec.get("extracted") else None,
                        valid=rec["valid"],
                        failed=rec.get("failed", False),
                    )
                    self._entries[(rec["item_id"], rec["prompt_hash"], rec["backend"])] = chain

    def get(self, item_id: str, phash: str, backend: str) -> ReasoningChain | None:
        return self._entries.get((item_id, phash, backend))

    def put(self, item_id: str, phash: str, backend: str, chain: ReasoningChain) -> None:
        key = (item_id, phash, backend)
        if key in self._entries:
            return
        self._entries[key] = chain
        if self.path:
            with self.path.open("a", encoding="utf-8") as fh:
                rec = {
                    "item_id": item_id,
                    "prompt_hash": phash,
                    "backend": backend,
                    "chain_text": chain.chain_text,
                    "extracted": chain.extracted.value if chain.extracted else None,
                    "valid": chain.valid,
                    "failed": chain.failed,
                }
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def generate_chains(
    corpus: Corpus,
    client: LLMClient,
    cache: ChainCache | None = None,
    *,
    answer_instruction: bool = True,
) -> list[ReasoningChain]:
    """One zero-shot chain per item; extraction failures keep the chain with
    valid=False, client failures mark the item failed and the run continues."""
    cache = cache or ChainCache()
    backend = client.backend.backend_id
    chains: list[ReasoningChain] = []
    for item in corpus:
        prompt = zero_shot_prompt(item, answer_instruction=answer_instruction)
        phash = prompt_hash(prompt)
        cached = cache.get(item.id, phash, backend)
        if cached is not None:
            chains.append(cached)
            continue
        try:
            response = client.complete(
                ChatRequest(prompt=prompt, tag=f"{item.id}/cot")
            )
        except ClientError:
            chain = ReasoningChain(
                item_id=item.id, chain_text="", extracted=None, valid=False, failed=True
            )
            cache.put(item.id, phash, backend, chain)
            chains.append(chain)
            continue
        extracted = extract_answer(response.text)
        valid = extracted is not None and item.gold is not None and extracted == item.gold
        chain = ReasoningChain(
            item_id=item.id, chain_text=response.text, extracted=extracted, valid=valid
        )
        cache.put(item.id, phash, backend, chain)
        chains.append(chain)
    return chains


_TRAILING_ANSWER_RE = re.compile(
    r"\s*(?:The answer is|答案是)\s*[:：]?\s*[A-DＡ-Ｄa-dａ-ｄ]\s*[.。．]?\s*$"
)


def _demo_chain_text(chain_text: str) -> str:
    """Drop a trailing answer statement; the demonstration renders a
    canonical answer line of its own."""
    return _TRAILING_ANSWER_RE.sub("", chain_text).rstrip()


def _make_demo(item: MCQItem, chain: ReasoningChain) -> Demonstration:
    if not chain.valid or item.gold is None:
        raise CotError(f"demonstration requires a valid chain (item {item.id!r})")
    return Demonstration(
        item_id=item.id,
        question=item.question,
        options=item.options,
        chain_text=_demo_chain_text(chain.chain_text),
        answer=item.gold,
    )


def sample_demonstrations(
    model: ClusterModel,
    chains: list[ReasoningChain],
    corpus: Corpus,
    strategy: SelectionStrategy = SelectionStrategy.SHORTEST_QUESTION,
    *,
    length_measure: str = "scalar_count",
    token_counts: dict[str, int] | None = None,
) -> list[Demonstration]:
    """At most one demonstration per cluster, ordered by cluster index.

    The candidate pool per cluster is its members with valid chains; the
    winner follows the strategy, ties break by lexicographic item id.
    Clusters with no valid chain are skipped.
    """
    by_id = {c.item_id: c for c in chains}

    def qlen(item_id: str) -> int:
        return question_length(corpus.get(item_id), length_measure, token_counts)

    def clen(item_id: str) -> int:
        return len(by_id[item_id].chain_text)

    demos: list[Demonstration] = []
    skipped: list[int] = []
    for cluster in range(model.k):
        pool = [
            i for i in model.members(cluster) if i in by_id and by_id[i].valid
        ]
        if not pool:
            skipped.append(cluster)
            continue
        if strategy == SelectionStrategy.SHORTEST_QUESTION:
            winner = min(pool, key=lambda i: (qlen(i), i))
        elif strategy == SelectionStrategy.SHORTEST_CHAIN:
            winner = min(pool, key=lambda i: (clen(i), i))
        elif strategy == SelectionStrategy.SHORTEST_BOTH:
            winner = min(pool, key=lambda i: (qlen(i) + clen(i), i))
        elif strategy == SelectionStrategy.CLUSTER_CENTER:
            restricted = ClusterModel(
                k=model.k,
                centroids=model.centroids,
                assignment={i: c for i, c in model.assignment.items() if i in pool},
                inertia=model.inertia,
                seed=model.seed,
                _vectors=model._vectors,
            )
            winner = nearest_to_centroid(restricted, cluster)
        else:
            raise CotError(f"unknown selection strategy {strategy!r}")
        demos.append(_make_demo(corpus.get(winner), by_id[winner]))
    for cluster in skipped:
        logger.warning("cluster %d has no valid chain; skipped", cluster)
    if not demos:
        raise CotError("no cluster has a valid chain; no demonstrations available")
    return demos
