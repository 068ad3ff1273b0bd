import numpy as np
import pytest

from evoshield.benchmark import benchmark_pipeline, make_benchmark
from evoshield.classifier import TrainConfig
from evoshield.corpus import Dataset, Document
from evoshield.defense import DefenseConfig
from evoshield.featurizer import FeaturizerConfig
from evoshield.harness import PipelineConfig, build_ablation_victims
from evoshield.paraphraser import SynonymLexicon

POS_WORDS = ("good", "great", "fine")
NEG_WORDS = ("bad", "awful", "poor")
FILLER = ("movie", "film", "plot", "story", "scene", "actor", "script", "screen")


@pytest.fixture
def tiny_lexicon():
    return SynonymLexicon(
        {
            "good": ("great", "fine"),
            "great": ("good", "fine"),
            "fine": ("good", "great"),
            "bad": ("awful", "poor"),
            "awful": ("bad", "poor"),
            "poor": ("bad", "awful"),
            "movie": ("film",),
            "film": ("movie",),
        }
    )


def make_mini_corpus(n=60, seed=0) -> Dataset:
    """Small linearly separable sentiment corpus (already-normalized texts)."""
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n):
        label = i % 2
        marker = POS_WORDS[int(rng.integers(3))] if label else NEG_WORDS[int(rng.integers(3))]
        extra = [FILLER[int(rng.integers(len(FILLER)))] for _ in range(3)]
        toks = [marker] + extra
        order = rng.permutation(len(toks))
        docs.append(Document(" ".join(toks[j] for j in order), label))
    return Dataset(tuple(docs), 2)


@pytest.fixture
def mini_corpus():
    return make_mini_corpus()


@pytest.fixture
def mini_pipeline():
    return PipelineConfig(
        defense=DefenseConfig(n_paraphrases=3, top_k=2, rounds=3, seed=0),
        classifier=TrainConfig(hidden_size=16, epochs=20, seed=0),
        featurizer=FeaturizerConfig(dim=512),
    )


@pytest.fixture(scope="session")
def bench():
    return make_benchmark()


@pytest.fixture(scope="session")
def bench_pipeline():
    return benchmark_pipeline(seed=0)


@pytest.fixture(scope="session")
def bench_victims(bench, bench_pipeline):
    """The four ablation wirings trained on the bundled benchmark (expensive)."""
    return build_ablation_victims(bench.train, bench_pipeline, bench.lexicon)
