"""Bundled synthetic sentiment benchmark.

Two-class corpus whose vocabulary is built from synonym clusters, so
word-substitution attacks have real leverage: each class has strong signal
clusters in which only the first few "common" members ever appear in training,
while the remaining "rare" members are reachable only through the lexicon.
Swapping a common word for a rare one strips the training signal; paraphrasing
can put it back.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Dataset, Document, write_dataset
from .paraphraser import SynonymLexicon

FUNCTION_WORDS = ("the", "a", "is", "it", "was", "and", "of", "to", "this", "so")

_CONSONANTS = "bcdfghjklmnpqrstvwz"
_VOWELS = "aeiou"


@dataclass(frozen=True)
class BenchmarkConfig:
    seed: int = 7
    train_size: int = 2000
    test_size: int = 500
    strong_clusters_per_class: int = 40
    filler_clusters: int = 720
    cluster_size: int = 6
    n_common: int = 3  # cluster members eligible to appear in original training text
    weak_opposite_prob: float = 0.4


@dataclass(frozen=True)
class Benchmark:
    train: Dataset
    test: Dataset
    lexicon: SynonymLexicon
    lexicon_lines: tuple[str, ...]


def _make_word(rng: np.random.Generator, used: set[str]) -> str:
    while True:
        n_syll = int(rng.integers(2, 4))
        word = "".join(
            _CONSONANTS[int(rng.integers(len(_CONSONANTS)))]
            + _VOWELS[int(rng.integers(len(_VOWELS)))]
            for _ in range(n_syll)
        )
        if int(rng.integers(2)):
            word += _CONSONANTS[int(rng.integers(len(_CONSONANTS)))]
        if word not in used:
            used.add(word)
            return word


def _make_clusters(rng: np.random.Generator, used: set[str], count: int, size: int):
    return [tuple(_make_word(rng, used) for _ in range(size)) for _ in range(count)]


def _make_doc(
    rng: np.random.Generator,
    label: int,
    strong: list[list[tuple[str, ...]]],
    fillers: list[tuple[str, ...]],
    cfg: BenchmarkConfig,
) -> Document:
    own, other = strong[label], strong[1 - label]
    n_strong = int(rng.integers(2, 5))
    tokens: list[str] = []
    for ci in rng.choice(len(own), size=n_strong, replace=False):
        tokens.append(own[ci][int(rng.integers(cfg.n_common))])
    if rng.random() < cfg.weak_opposite_prob:
        ci = int(rng.integers(len(other)))
        tokens.append(other[ci][int(rng.integers(cfg.n_common))])
    n_filler = int(rng.integers(4, 7))
    for ci in rng.choice(len(fillers), size=n_filler, replace=False):
        tokens.append(fillers[ci][int(rng.integers(cfg.cluster_size))])
    n_func = int(rng.integers(2, 4))
    for _ in range(n_func):
        tokens.append(FUNCTION_WORDS[int(rng.integers(len(FUNCTION_WORDS)))])
    order = rng.permutation(len(tokens))
    return Document(" ".join(tokens[i] for i in order), label)


def make_benchmark(cfg: BenchmarkConfig = BenchmarkConfig()) -> Benchmark:
    vocab_rng = np.random.default_rng([cfg.seed, 0])
    used = set(FUNCTION_WORDS)
    strong = [
        _make_clusters(vocab_rng, used, cfg.strong_clusters_per_class, cfg.cluster_size)
        for _ in range(2)
    ]
    fillers = _make_clusters(vocab_rng, used, cfg.filler_clusters, cfg.cluster_size)

    lines: list[str] = []
    entries: dict[str, tuple[str, ...]] = {}
    for cluster in [c for side in strong for c in side] + fillers:
        for w in cluster:
            syns = tuple(s for s in cluster if s != w)
            entries[w] = syns
            lines.append(f"{w}\t{','.join(syns)}")

    def make_split(size: int, stream: int) -> Dataset:
        rng = np.random.default_rng([cfg.seed, stream])
        docs = tuple(
            _make_doc(rng, i % 2, strong, fillers, cfg) for i in range(size)
        )
        return Dataset(docs, 2)

    return Benchmark(
        train=make_split(cfg.train_size, 1),
        test=make_split(cfg.test_size, 2),
        lexicon=SynonymLexicon(entries),
        lexicon_lines=tuple(lines),
    )


def benchmark_pipeline(seed: int = 0):
    """Pipeline configuration the bundled experiments run with.

    Smaller feature space and hidden layer than the library defaults: the
    synthetic corpus has a few thousand word types, and the experiment suite
    retrains several models.
    """
    from .classifier import TrainConfig
    from .defense import DefenseConfig
    from .featurizer import FeaturizerConfig
    from .harness import PipelineConfig

    return PipelineConfig(
        defense=DefenseConfig(seed=seed, alpha=50.0),
        classifier=TrainConfig(hidden_size=32, epochs=12, seed=seed),
        featurizer=FeaturizerConfig(dim=4096),
    )


def write_benchmark(out_dir, cfg: BenchmarkConfig = BenchmarkConfig()) -> dict[str, str]:
    """Write train/test JSONL and the lexicon TSV; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bench = make_benchmark(cfg)
    paths = {
        "train": str(out / "benchmark_train.jsonl"),
        "test": str(out / "benchmark_test.jsonl"),
        "lexicon": str(out / "lexicon.tsv"),
    }
    write_dataset(bench.train, paths["train"])
    write_dataset(bench.test, paths["test"])
    with open(paths["lexicon"], "w", encoding="utf-8") as f:
        for line in bench.lexicon_lines:
            f.write(line + "\n")
    return paths
