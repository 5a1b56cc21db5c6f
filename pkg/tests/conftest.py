from __future__ import annotations

from pathlib import Path

import pytest

from metamcq.client import LLMClient, ReplayBackend, TranscriptCache
from metamcq.clustering import kmeans
from metamcq.cot import ChainCache, generate_chains, sample_demonstrations
from metamcq.dataset import load_corpus
from metamcq.pipeline import PipelineConfig
from metamcq.scores import load_scores

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(FIXTURES / "corpus.jsonl")


@pytest.fixture(scope="session")
def bundle(corpus):
    return load_scores(FIXTURES / "scores.jsonl", corpus)


@pytest.fixture(scope="session")
def transcript_path() -> Path:
    return FIXTURES / "transcript.jsonl"


@pytest.fixture()
def replay_client(transcript_path):
    return LLMClient(
        backend=ReplayBackend(TranscriptCache(transcript_path)), retries=1
    )


@pytest.fixture(scope="session")
def cluster_model(corpus, bundle):
    return kmeans([bundle.embedding(i) for i in corpus.ids()], k=3, seed=0, restarts=10)


@pytest.fixture(scope="session")
def fixture_chains(corpus, transcript_path):
    client = LLMClient(
        backend=ReplayBackend(TranscriptCache(transcript_path)), retries=1
    )
    return generate_chains(corpus, client, ChainCache())


@pytest.fixture(scope="session")
def fixture_demos(cluster_model, fixture_chains, corpus):
    return sample_demonstrations(cluster_model, fixture_chains, corpus)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import CRITERION_RESULTS
    except ImportError:
        return
    if not CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in CRITERION_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}")


@pytest.fixture()
def make_config(tmp_path, transcript_path):
    def factory(out_name: str = "out", **overrides) -> PipelineConfig:
        defaults = dict(
            corpus_path=str(FIXTURES / "corpus.jsonl"),
            out_dir=str(tmp_path / out_name),
            scores_path=str(FIXTURES / "scores.jsonl"),
            backend="replay",
            transcript_path=str(transcript_path),
            k=3,
        )
        defaults.update(overrides)
        return PipelineConfig(**defaults)

    return factory
