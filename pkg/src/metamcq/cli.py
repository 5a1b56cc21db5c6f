"""Command-line entry point. One subcommand per pipeline stage so that
expensive stages (chain generation, completions) can be rerun in isolation.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import yaml

from .clustering import InertiaCurve, pca_project
from .cot import SelectionStrategy
from .dataset import load_corpus, save_corpus
from .evaluate import scorer_argmax, write_submission
from .pipeline import (
    PipelineConfig,
    PipelineError,
    make_client,
    run_ablation,
    run_pipeline,
    stage_chains,
    stage_cluster,
    stage_corpus,
    stage_demos,
    stage_prompts,
    stage_scores,
)
from .prompts import PromptMode
from .scores import load_scores, save_scores


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise click.ClickException("config file must be a mapping")
    return data


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(2)


pipeline_options = [
    click.option("--config", "config_file", type=click.Path(exists=True), help="YAML config file mirroring the run configuration; flags override it."),
    click.option("--corpus", "corpus_path", type=click.Path(exists=True), help="Corpus JSONL file."),
    click.option("--format", "corpus_format", type=click.Choice(["native", "task"]), help="Corpus file format."),
    click.option("--scores", "scores_path", type=click.Path(exists=True), help="Score file from the scorer component."),
    click.option("--uniform-fallback", "use_uniform_fallback", is_flag=True, default=None, help="Use uniform confidence and zero embeddings instead of a score file."),
    click.option("--out", "out_dir", type=click.Path(), help="Output directory for stage artifacts."),
    click.option("--cache-dir", type=click.Path(), help="Cache directory (chains, transcripts)."),
    click.option("--mode", type=click.Choice([m.value for m in PromptMode]), help="Prompt mode."),
    click.option("--strategy", type=click.Choice([s.value for s in SelectionStrategy]), help="Demonstration selection strategy."),
    click.option("--k", type=str, help="Cluster count, or 'auto' for elbow selection."),
    click.option("--k-max", type=int, help="Maximum k scanned by the elbow rule."),
    click.option("--seed", type=int, help="Clustering / split seed."),
    click.option("--restarts", type=int, help="k-means restarts."),
    click.option("--track", type=click.Choice(["1", "2"]), help="Shared-task track."),
    click.option("--length-measure", type=click.Choice(["scalar_count", "token_count"]), help="Question length measure for demo sampling."),
    click.option("--token-sidecar", type=click.Path(exists=True), help="Token-count sidecar JSONL for token_count measure."),
    click.option("--candidate-style", type=click.Choice(["scores", "ranked"]), help="Candidate line rendering."),
    click.option("--backend", type=click.Choice(["replay", "http"]), help="LLM backend."),
    click.option("--transcript", "transcript_path", type=click.Path(), help="Replay transcript JSONL."),
    click.option("--base-url", type=str, help="Chat-completions base URL (http backend)."),
    click.option("--model-name", type=str, help="Model name (http backend)."),
    click.option("--temperature", type=float, help="Decoding temperature."),
    click.option("--max-tokens", type=int, help="Max output tokens."),
    click.option("--retries", type=int, help="Live-backend retry attempts."),
    click.option("--no-resume", "resume", flag_value=False, default=None, help="Recompute all stages, ignoring artifacts."),
]


def with_pipeline_options(fn):
    for option in reversed(pipeline_options):
        fn = option(fn)
    return fn


def _config_from_kwargs(kwargs: dict) -> PipelineConfig:
    config_file = kwargs.pop("config_file", None)
    track = kwargs.pop("track", None)
    if track is not None:
        kwargs["track"] = int(track)
    merged = _load_config_file(config_file)
    merged.update({key: value for key, value in kwargs.items() if value is not None})
    k = merged.get("k")
    if k is not None:
        merged["k"] = None if str(k) == "auto" else int(k)
    if "mode" in merged:
        merged["mode"] = PromptMode(merged["mode"])
    if "strategy" in merged:
        merged["strategy"] = SelectionStrategy(merged["strategy"])
    try:
        return PipelineConfig(**merged)
    except TypeError as exc:
        raise click.ClickException(f"invalid configuration: {exc}") from None


@click.group()
@click.version_option()
def main() -> None:
    """Multi-stage heuristic-enhanced prompting pipeline for metaphor MCQ tasks."""


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--format", "corpus_format", type=click.Choice(["native", "task"]), default="native")
@click.option("--out", "out_path", type=click.Path(), required=True, help="Normalized native corpus output.")
def ingest(corpus_path, corpus_format, out_path):
    """Load, validate, and normalize a corpus file."""
    try:
        corpus = load_corpus(corpus_path, corpus_format)
        save_corpus(corpus, out_path)
    except Exception as exc:
        _fail(exc)
    click.echo(f"loaded {len(corpus)} items; counts: {corpus.counts}")


@main.command("score-import")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--format", "corpus_format", type=click.Choice(["native", "task"]), default="native")
@click.option("--scores", "scores_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def score_import(corpus_path, corpus_format, scores_path, out_path):
    """Validate a scorer export against a corpus and normalize it."""
    try:
        corpus = load_corpus(corpus_path, corpus_format)
        bundle = load_scores(scores_path, corpus)
        save_scores(bundle, out_path, corpus)
    except Exception as exc:
        _fail(exc)
    click.echo(
        f"imported scores for {len(bundle.confidences)} items "
        f"(dimension {bundle.dimension}, scorer {bundle.scorer_id})"
    )


@main.command()
@with_pipeline_options
@click.option("--plots/--no-plots", default=True, help="Render elbow and PCA figures.")
def cluster(plots, **kwargs):
    """Cluster question embeddings and emit assignments, curve, and scatter."""
    try:
        config = _config_from_kwargs(kwargs)
        corpus = stage_corpus(config)
        bundle = stage_scores(config, corpus)
        model = stage_cluster(config, corpus, bundle)
    except Exception as exc:
        _fail(exc)
    out = Path(config.out_dir)
    click.echo(f"k={model.k} inertia={model.inertia:.6g} -> {out / 'clusters.json'}")
    if plots:
        from . import plotting

        curve_path = out / "inertia_curve.jsonl"
        if curve_path.exists():
            points = [
                (rec["k"], rec["inertia"])
                for rec in map(json.loads, curve_path.read_text(encoding="utf-8").splitlines())
            ]
            curve = InertiaCurve(points=tuple(points))
            plotting.plot_inertia_curve(curve, out / "elbow.png", chosen_k=model.k)
            click.echo(f"wrote {out / 'elbow.png'}")
        embeddings = [bundle.embedding(item.id) for item in corpus]
        try:
            projection = pca_project(embeddings)
        except Exception:
            projection = None
        if projection is not None:
            plotting.plot_pca_scatter(projection, model.assignment, out / "pca.png")
            click.echo(f"wrote {out / 'pca.png'}")


@main.command("gen-cot")
@with_pipeline_options
def gen_cot(**kwargs):
    """Generate zero-shot reasoning chains (cached)."""
    try:
        config = _config_from_kwargs(kwargs)
        corpus = stage_corpus(config)
        client = make_client(config)
        chains = stage_chains(config, corpus, client)
    except Exception as exc:
        _fail(exc)
    valid = sum(1 for c in chains if c.valid)
    click.echo(f"generated {len(chains)} chains ({valid} valid)")


@main.command("sample-demos")
@with_pipeline_options
def sample_demos(**kwargs):
    """Cluster, generate chains, and sample one demonstration per cluster."""
    try:
        config = _config_from_kwargs(kwargs)
        corpus = stage_corpus(config)
        bundle = stage_scores(config, corpus)
        client = make_client(config)
        chains = stage_chains(config, corpus, client)
        model = stage_cluster(config, corpus, bundle)
        demos = stage_demos(config, corpus, model, chains)
    except Exception as exc:
        _fail(exc)
    click.echo(f"sampled {len(demos)} demonstrations: {[d.item_id for d in demos]}")


@main.command("build-prompts")
@with_pipeline_options
@click.option("--dump-dir", type=click.Path(), help="Also write one prompt text file per item.")
def build_prompts(dump_dir, **kwargs):
    """Render prompts for the configured mode."""
    try:
        config = _config_from_kwargs(kwargs)
        corpus = stage_corpus(config)
        bundle = stage_scores(config, corpus)
        demos = []
        chains = None
        if config.mode in (PromptMode.FULL, PromptMode.NO_CANDIDATES):
            client = make_client(config)
            chains = stage_chains(config, corpus, client)
            model = stage_cluster(config, corpus, bundle)
            demos = stage_demos(config, corpus, model, chains)
        prompts = stage_prompts(config, corpus, bundle, demos, chains)
    except Exception as exc:
        _fail(exc)
    if dump_dir:
        dump = Path(dump_dir)
        dump.mkdir(parents=True, exist_ok=True)
        for prompt in prompts:
            (dump / f"{prompt.item_id}.{prompt.mode.value}.txt").write_text(
                prompt.rendered_text + "\n", encoding="utf-8"
            )
    click.echo(f"built {len(prompts)} prompts in mode {config.mode.value}")


@main.command()
@with_pipeline_options
@click.option("--submission", type=click.Path(), help="Also write a letter-per-item submission file.")
def run(submission, **kwargs):
    """Run the full pipeline for one mode and write the report."""
    try:
        config = _config_from_kwargs(kwargs)
        if config.track == 2:
            corpus = stage_corpus(config)
            bundle = stage_scores(config, corpus)
            predictions = scorer_argmax(bundle, corpus)
            from .evaluate import accuracy

            report = accuracy(predictions, corpus, mode="scorer_argmax")
            out = Path(config.out_dir)
            (out / "report.scorer_argmax.json").write_text(report.to_json() + "\n", encoding="utf-8")
            if submission:
                write_submission(predictions, corpus, submission)
        else:
            report = run_pipeline(config)
            if submission:
                corpus = stage_corpus(config)
                rows = json.loads(
                    (Path(config.out_dir) / f"report.{config.mode.value}.json").read_text(
                        encoding="utf-8"
                    )
                )["per_item"]
                from .dataset import OptionLabel
                from .evaluate import Prediction

                predictions = [
                    Prediction(
                        item_id=r["item_id"],
                        predicted=OptionLabel(r["predicted"]) if r["predicted"] else None,
                        mode=config.mode.value,
                    )
                    for r in rows
                ]
                write_submission(predictions, corpus, submission)
    except PipelineError as exc:
        _fail(exc)
    except Exception as exc:
        _fail(exc)
    click.echo(report.to_table())


@main.command()
@with_pipeline_options
def ablate(**kwargs):
    """Run the four ablation modes and write a comparison table."""
    try:
        config = _config_from_kwargs(kwargs)
        reports = run_ablation(config)
    except Exception as exc:
        _fail(exc)
    for mode_name, rep in reports.items():
        click.echo(f"{mode_name:<20} accuracy={rep.accuracy:.4f}")


@main.command()
@click.option("--out", "out_dir", type=click.Path(exists=True), required=True, help="Run output directory to report on.")
@click.option("--plots/--no-plots", default=True)
def report(out_dir, plots):
    """Summarize reports in a run directory; render comparison figures."""
    out = Path(out_dir)
    reports = sorted(out.glob("report.*.json"))
    if not reports:
        _fail(FileNotFoundError(f"no report.*.json files under {out}"))
    accuracies = {}
    for path in reports:
        data = json.loads(path.read_text(encoding="utf-8"))
        accuracies[data["mode"]] = data["accuracy"]
        click.echo(f"{data['mode']:<20} accuracy={data['accuracy']:.4f} counts={data['counts']}")
    if plots:
        from . import plotting

        plotting.plot_ablation(accuracies, out / "comparison.png")
        click.echo(f"wrote {out / 'comparison.png'}")
        curve_path = out / "inertia_curve.jsonl"
        if curve_path.exists():
            points = [
                (rec["k"], rec["inertia"])
                for rec in map(json.loads, curve_path.read_text(encoding="utf-8").splitlines())
            ]
            plotting.plot_inertia_curve(InertiaCurve(points=tuple(points)), out / "elbow.png")
            click.echo(f"wrote {out / 'elbow.png'}")


if __name__ == "__main__":
    main()
