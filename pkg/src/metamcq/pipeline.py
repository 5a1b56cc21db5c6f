"""End-to-end orchestration: load -> scores -> cluster -> chains -> demos ->
prompts -> completions -> extraction -> accuracy.

Every stage persists an artifact under the output directory and is skipped
on rerun when its artifact already exists, so runs resume from the last
completed stage. The LLM stage is the expensive one; its transcript cache
makes any live run replayable offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .clustering import ClusterModel, elbow_select, inertia_curve, kmeans, pca_project
from .client import (
    ChatRequest,
    ClientError,
    HTTPBackend,
    LLMClient,
    ReplayBackend,
    TranscriptCache,
    extract_answer,
    prompt_hash,
)
from .cot import (
    ChainCache,
    SelectionStrategy,
    generate_chains,
    load_token_sidecar,
    sample_demonstrations,
)
from .dataset import Corpus, OptionLabel, load_corpus
from .evaluate import EvalReport, Prediction, accuracy, rule_baseline, scorer_argmax
from .prompts import Demonstration, HeuristicPrompt, PromptMode, ABLATION_MODES, build_prompt
from .scores import ScoreBundle, load_scores, save_scores, uniform_fallback

logger = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[stage {stage}] {message}")
        self.stage = stage


@dataclass
class PipelineConfig:
    corpus_path: str
    out_dir: str
    corpus_format: str = "native"
    scores_path: str | None = None
    use_uniform_fallback: bool = False
    fallback_dim: int = 8
    cache_dir: str | None = None
    mode: PromptMode = PromptMode.FULL
    strategy: SelectionStrategy = SelectionStrategy.SHORTEST_QUESTION
    k: int | None = 3  # None selects k via the elbow rule
    k_max: int = 8
    seed: int = 0
    restarts: int = 10
    track: int = 1
    length_measure: str = "scalar_count"
    token_sidecar: str | None = None
    candidate_style: str = "scores"
    suggestion_source: str = "scorer_argmax"
    backend: str = "replay"  # replay | http
    transcript_path: str | None = None
    base_url: str = ""
    model_name: str = "qwen"
    temperature: float = 0.0
    max_tokens: int = 1024
    retries: int = 3
    resume: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["strategy"] = self.strategy.value
        return d


def _out(config: PipelineConfig) -> Path:
    path = Path(config.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cache(config: PipelineConfig) -> Path:
    path = Path(config.cache_dir) if config.cache_dir else _out(config) / "cache"
    path.mkdir(parents=True, exist_ok=True)
    return path


def make_client(config: PipelineConfig) -> LLMClient:
    if config.backend == "replay":
        if not config.transcript_path:
            raise PipelineError("client", "replay backend requires a transcript path")
        transcript = TranscriptCache(config.transcript_path)
        return LLMClient(backend=ReplayBackend(transcript), cache=TranscriptCache(), retries=1)
    if config.backend == "http":
        backend = HTTPBackend(
            base_url=config.base_url,
            model_name=config.model_name,
        )
        cache = TranscriptCache(_cache(config) / "transcript.jsonl")
        return LLMClient(backend=backend, cache=cache, retries=config.retries)
    raise PipelineError("client", f"unknown backend {config.backend!r}")


def stage_corpus(config: PipelineConfig) -> Corpus:
    try:
        return load_corpus(config.corpus_path, config.corpus_format)
    except Exception as exc:
        raise PipelineError("dataset", str(exc)) from exc


def stage_scores(config: PipelineConfig, corpus: Corpus) -> ScoreBundle:
    artifact = _out(config) / "scores.jsonl"
    try:
        if config.resume and artifact.exists():
            bundle = load_scores(artifact, corpus)
        elif config.scores_path:
            bundle = load_scores(config.scores_path, corpus)
            save_scores(bundle, artifact, corpus)
        elif config.use_uniform_fallback:
            bundle = uniform_fallback(corpus, dimension=config.fallback_dim)
            save_scores(bundle, artifact, corpus)
        else:
            raise PipelineError(
                "score_bridge",
                "no scores file given and uniform fallback not enabled",
            )
        bundle.require_coverage(corpus)
        return bundle
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("score_bridge", str(exc)) from exc


def stage_cluster(
    config: PipelineConfig, corpus: Corpus, bundle: ScoreBundle
) -> ClusterModel:
    out = _out(config)
    artifact = out / "clusters.json"
    embeddings = [bundle.embedding(item.id) for item in corpus]
    try:
        if config.resume and artifact.exists():
            saved = json.loads(artifact.read_text(encoding="utf-8"))
            return ClusterModel(
                k=saved["k"],
                centroids=np.asarray(saved["centroids"]),
                assignment={i: int(c) for i, c in saved["assignment"].items()},
                inertia=saved["inertia"],
                seed=saved["seed"],
                _vectors={e.item_id: np.asarray(e.vector, dtype=float) for e in embeddings},
            )
        X = np.asarray([e.vector for e in embeddings], dtype=float)
        n_distinct = len(np.unique(X, axis=0))
        if config.k is None:
            k_max = min(config.k_max, n_distinct)
            if k_max >= 3:
                curve = inertia_curve(
                    embeddings, k_max, seed=config.seed, restarts=config.restarts
                )
                k = elbow_select(curve)
                with (out / "inertia_curve.jsonl").open("w", encoding="utf-8") as fh:
                    for kk, inertia in curve.points:
                        fh.write(json.dumps({"k": kk, "inertia": inertia}) + "\n")
            else:
                k = 1
        else:
            k = min(config.k, n_distinct)
        model = kmeans(embeddings, k, seed=config.seed, restarts=config.restarts)
        artifact.write_text(
            json.dumps(
                {
                    "k": model.k,
                    "seed": model.seed,
                    "inertia": model.inertia,
                    "assignment": model.assignment,
                    "centroids": model.centroids.tolist(),
                },
                sort_keys=True,
            ),
            encoding="utf-8",
        )
        if n_distinct >= 2 and X.shape[1] >= 2:
            projection = pca_project(embeddings)
            with (out / "pca.jsonl").open("w", encoding="utf-8") as fh:
                for item_id, (x, y) in projection.coordinates.items():
                    rec = {
                        "item_id": item_id,
                        "x": x,
                        "y": y,
                        "cluster": model.assignment[item_id],
                    }
                    fh.write(json.dumps(rec) + "\n")
        return model
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("clustering", str(exc)) from exc


def stage_chains(config: PipelineConfig, corpus: Corpus, client: LLMClient):
    try:
        cache = ChainCache(_cache(config) / "chains.jsonl")
        labeled = Corpus(
            items=[item for item in corpus if item.gold is not None],
            source=corpus.source,
        )
        return generate_chains(
            labeled, client, cache, answer_instruction=config.track == 1
        )
    except Exception as exc:
        raise PipelineError("cot_engine", str(exc)) from exc


def stage_demos(
    config: PipelineConfig,
    corpus: Corpus,
    model: ClusterModel,
    chains,
) -> list[Demonstration]:
    out = _out(config)
    artifact = out / "demos.jsonl"
    try:
        if config.resume and artifact.exists():
            demos = []
            with artifact.open(encoding="utf-8") as fh:
                for line in fh:
                    rec = json.loads(line)
                    demos.append(
                        Demonstration(
                            item_id=rec["item_id"],
                            question=rec["question"],
                            options=tuple(rec["options"]),
                            chain_text=rec["chain_text"],
                            answer=OptionLabel(rec["answer"]),
                        )
                    )
            return demos
        token_counts = (
            load_token_sidecar(config.token_sidecar) if config.token_sidecar else None
        )
        demos = sample_demonstrations(
            model,
            chains,
            corpus,
            config.strategy,
            length_measure=config.length_measure,
            token_counts=token_counts,
        )
        with artifact.open("w", encoding="utf-8") as fh:
            for demo in demos:
                rec = {
                    "item_id": demo.item_id,
                    "question": demo.question,
                    "options": list(demo.options),
                    "chain_text": demo.chain_text,
                    "answer": demo.answer.value,
                }
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        # Readable export for inspection.
        (out / "demos.txt").write_text(
            "\n\n".join(demo.render() for demo in demos) + "\n", encoding="utf-8"
        )
        return demos
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("cot_engine", str(exc)) from exc


def _suggestions(
    config: PipelineConfig, corpus: Corpus, bundle: ScoreBundle
) -> dict[str, OptionLabel | None]:
    if config.suggestion_source == "scorer_argmax":
        return {p.item_id: p.predicted for p in scorer_argmax(bundle, corpus)}
    if config.suggestion_source == "rule_baseline":
        return {item.id: rule_baseline(item) for item in corpus}
    raise PipelineError(
        "prompt_builder", f"unknown suggestion source {config.suggestion_source!r}"
    )


def stage_prompts(
    config: PipelineConfig,
    corpus: Corpus,
    bundle: ScoreBundle,
    demos: list[Demonstration],
    chains=None,
) -> list[HeuristicPrompt]:
    out = _out(config)
    artifact = out / f"prompts.{config.mode.value}.jsonl"
    try:
        mode = config.mode
        suggestions: dict[str, OptionLabel | None] = {}
        reasons: dict[str, str] = {}
        if mode in (PromptMode.REFERENCE_ANSWER, PromptMode.REFERENCE_ANSWER_WITH_REASONS):
            suggestions = _suggestions(config, corpus, bundle)
            if mode == PromptMode.REFERENCE_ANSWER_WITH_REASONS:
                reasons = {c.item_id: c.chain_text for c in (chains or [])}
        prompts = []
        for item in corpus:
            suggestion = suggestions.get(item.id)
            if mode in (PromptMode.REFERENCE_ANSWER, PromptMode.REFERENCE_ANSWER_WITH_REASONS):
                if suggestion is None:
                    suggestion = bundle.confidence(item.id).argmax()
            prompts.append(
                build_prompt(
                    item,
                    demos,
                    bundle.confidence(item.id),
                    mode,
                    answer_instruction=config.track == 1,
                    candidate_style=config.candidate_style,
                    suggestion=suggestion,
                    suggestion_reason=reasons.get(item.id, "no reasoning recorded"),
                )
            )
        with artifact.open("w", encoding="utf-8") as fh:
            for prompt in prompts:
                rec = {
                    "item_id": prompt.item_id,
                    "mode": prompt.mode.value,
                    "prompt_hash": prompt_hash(prompt.rendered_text),
                    "text": prompt.rendered_text,
                }
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        return prompts
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("prompt_builder", str(exc)) from exc


def stage_completions(
    config: PipelineConfig, prompts: list[HeuristicPrompt], client: LLMClient
) -> list[Prediction]:
    out = _out(config)
    artifact = out / f"completions.{config.mode.value}.jsonl"
    try:
        if config.resume and artifact.exists():
            predictions = []
            with artifact.open(encoding="utf-8") as fh:
                for line in fh:
                    rec = json.loads(line)
                    predictions.append(
                        Prediction(
                            item_id=rec["item_id"],
                            predicted=OptionLabel(rec["extracted"]) if rec["extracted"] else None,
                            mode=config.mode.value,
                            source="llm",
                        )
                    )
            return predictions
        predictions = []
        records = []
        for prompt in prompts:
            try:
                response = client.complete(
                    ChatRequest(
                        prompt=prompt.rendered_text,
                        temperature=config.temperature,
                        max_tokens=config.max_tokens,
                        tag=f"{prompt.item_id}/{config.mode.value}",
                    )
                )
                text = response.text
            except ClientError as exc:
                logger.warning("completion failed for %s: %s", prompt.item_id, exc)
                text = ""
            extracted = extract_answer(text)
            predictions.append(
                Prediction(
                    item_id=prompt.item_id,
                    predicted=extracted,
                    mode=config.mode.value,
                    source="llm",
                )
            )
            records.append(
                {
                    "item_id": prompt.item_id,
                    "prompt_hash": prompt_hash(prompt.rendered_text),
                    "response_text": text,
                    "extracted": extracted.value if extracted else None,
                }
            )
        with artifact.open("w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        return predictions
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("llm_client", str(exc)) from exc


def _write_manifest(config: PipelineConfig) -> None:
    out = _out(config)
    hashes = {}
    for path in sorted(out.glob("*")):
        if path.is_file() and path.name != "manifest.json":
            hashes[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
    manifest = {"config": config.to_dict(), "artifacts": hashes}
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2), encoding="utf-8"
    )


def run_pipeline(config: PipelineConfig) -> EvalReport:
    """Execute all stages for one prompt mode and return the report."""
    corpus = stage_corpus(config)
    bundle = stage_scores(config, corpus)
    client = make_client(config)

    needs_demos = config.mode in (PromptMode.FULL, PromptMode.NO_CANDIDATES)
    needs_chains = needs_demos or config.mode == PromptMode.REFERENCE_ANSWER_WITH_REASONS

    demos: list[Demonstration] = []
    chains = None
    if needs_chains:
        chains = stage_chains(config, corpus, client)
    if needs_demos:
        model = stage_cluster(config, corpus, bundle)
        demos = stage_demos(config, corpus, model, chains)

    prompts = stage_prompts(config, corpus, bundle, demos, chains)
    predictions = stage_completions(config, prompts, client)

    try:
        report = accuracy(predictions, corpus, mode=config.mode.value)
    except Exception as exc:
        raise PipelineError("evaluator", str(exc)) from exc

    out = _out(config)
    (out / f"report.{config.mode.value}.json").write_text(
        report.to_json() + "\n", encoding="utf-8"
    )
    (out / f"report.{config.mode.value}.txt").write_text(
        report.to_table() + "\n", encoding="utf-8"
    )
    _write_manifest(config)
    return report


def run_ablation(config: PipelineConfig) -> dict[str, EvalReport]:
    """Run the four ablation modes sharing corpus, scores, and caches."""
    from dataclasses import replace

    reports: dict[str, EvalReport] = {}
    for mode in ABLATION_MODES:
        mode_config = replace(config, mode=mode)
        reports[mode.value] = run_pipeline(mode_config)
    table_lines = [f"{'mode':<20} {'accuracy':>8}"]
    for mode_name, report in reports.items():
        table_lines.append(f"{mode_name:<20} {report.accuracy:>8.4f}")
    (_out(config) / "ablation.txt").write_text("\n".join(table_lines) + "\n", encoding="utf-8")
    return reports
