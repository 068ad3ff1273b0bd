"""Hashed n-gram TF-IDF features.

Tokens and n-grams are hashed with FNV-1a 64 into a fixed power-of-two bucket
space, so the vocabulary needs no storage and unseen attacker words still land
in a bucket.  Term weights are sublinear TF times smoothed IDF, L2-normalized.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .corpus import Dataset, tokenize

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64_bytes(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


@lru_cache(maxsize=1 << 16)
def fnv1a64(s: str) -> int:
    return fnv1a64_bytes(s.encode("utf-8"))


def hash_token(token_or_ngram: str, dim: int) -> int:
    """Bucket index of a token or space-joined n-gram; bit-exact across platforms."""
    return fnv1a64(token_or_ngram) % dim


@dataclass(frozen=True)
class FeaturizerConfig:
    dim: int = 1 << 14
    ngram_orders: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        if self.dim < 2 or self.dim & (self.dim - 1):
            raise ValueError(f"dim must be a power of two >= 2, got {self.dim}")
        if not self.ngram_orders or any(n < 1 for n in self.ngram_orders):
            raise ValueError(f"ngram orders must be positive, got {self.ngram_orders}")


@dataclass(eq=False, frozen=True)
class FeaturizerModel:
    dim: int
    ngram_orders: tuple[int, ...]
    idf: np.ndarray  # (dim,) smoothed inverse document frequencies


def _ngrams(tokens, orders):
    for n in orders:
        for i in range(len(tokens) - n + 1):
            yield tokens[i] if n == 1 else " ".join(tokens[i : i + n])


def fit(config: FeaturizerConfig, train: Dataset) -> FeaturizerModel:
    """Learn per-bucket IDF weights: idf[b] = ln((1 + n_docs) / (1 + df_b)) + 1."""
    if len(train) == 0:
        raise ValueError("cannot fit a featurizer on an empty dataset")
    orders = tuple(sorted(set(config.ngram_orders)))
    df = np.zeros(config.dim, dtype=np.float64)
    for doc in train.docs:
        toks = tokenize(doc.text).tokens
        buckets = {hash_token(g, config.dim) for g in _ngrams(toks, orders)}
        for b in buckets:
            df[b] += 1.0
    idf = np.log((1.0 + len(train)) / (1.0 + df)) + 1.0
    return FeaturizerModel(config.dim, orders, idf)


def featurize_sparse(model: FeaturizerModel, text: str) -> tuple[np.ndarray, np.ndarray]:
    """Sparse form of :func:`featurize`: sorted bucket indices and their weights."""
    toks = tokenize(text).tokens
    tf: dict[int, float] = {}
    for g in _ngrams(toks, model.ngram_orders):
        b = hash_token(g, model.dim)
        tf[b] = tf.get(b, 0.0) + 1.0
    if not tf:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    idx = np.array(sorted(tf), dtype=np.int64)
    vals = np.log1p([tf[b] for b in idx]) * model.idf[idx]
    norm = float(np.sqrt(np.dot(vals, vals)))
    if norm > 0.0:
        vals = vals / norm
    return idx, vals


def featurize(model: FeaturizerModel, text: str) -> np.ndarray:
    """Dense TF-IDF vector of length ``model.dim``; zero vector for empty text."""
    idx, vals = featurize_sparse(model, text)
    out = np.zeros(model.dim, dtype=np.float64)
    out[idx] = vals
    return out
