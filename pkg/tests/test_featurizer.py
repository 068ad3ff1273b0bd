import functools
import json
from pathlib import Path

import numpy as np
import pytest

from evoshield.corpus import Dataset, Document
from evoshield.featurizer import (
    FeaturizerConfig,
    featurize,
    featurize_sparse,
    fit,
    fnv1a64,
    hash_token,
)

GOLDEN = json.loads((Path(__file__).parent / "golden" / "hash_buckets.json").read_text())


def reference_fnv1a64(data: bytes) -> int:
    # Independent oracle, deliberately written differently from the package.
    return functools.reduce(
        lambda h, b: ((h ^ b) * 1099511628211) % (1 << 64), data, 14695981039346656037
    )


class TestHashToken:
    def test_reference_matches_published_vectors(self):
        assert reference_fnv1a64(b"") == 0xCBF29CE484222325
        assert reference_fnv1a64(b"a") == 0xAF63DC4C8601EC8C
        assert reference_fnv1a64(b"foobar") == 0x85944171F73967E8

    def test_golden_pins(self):
        assert len(GOLDEN) == 100
        for entry in GOLDEN:
            assert fnv1a64(entry["s"]) == entry["h64"]
            assert hash_token(entry["s"], 16384) == entry["bucket16384"]

    def test_golden_agrees_with_reference(self):
        for entry in GOLDEN:
            assert reference_fnv1a64(entry["s"].encode("utf-8")) == entry["h64"]

    def test_unigram_and_bigram_distinct(self):
        assert hash_token("movie", 16384) == 783
        assert hash_token("movie movie", 16384) == 11591

    def test_repeatable(self):
        assert hash_token("stable", 1024) == hash_token("stable", 1024)


def make_dataset(texts):
    return Dataset(tuple(Document(t, 0) for t in texts), 1)


class TestFit:
    def test_idf_bucket_in_every_doc(self):
        ds = make_dataset(["apple", "apple", "apple"])
        model = fit(FeaturizerConfig(dim=64, ngram_orders=(1,)), ds)
        b = hash_token("apple", 64)
        assert model.idf[b] == pytest.approx(np.log(4 / 4) + 1.0)
        assert model.idf[b] == 1.0

    def test_idf_absent_bucket(self):
        ds = make_dataset(["apple", "pear", "plum"])
        model = fit(FeaturizerConfig(dim=64, ngram_orders=(1,)), ds)
        occupied = {hash_token(w, 64) for w in ("apple", "pear", "plum")}
        empty_bucket = next(b for b in range(64) if b not in occupied)
        assert model.idf[empty_bucket] == pytest.approx(np.log(4 / 1) + 1.0)
        assert model.idf[empty_bucket] == pytest.approx(2.3863, abs=1e-4)

    def test_deterministic(self):
        ds = make_dataset(["one two", "three four", "five"])
        m1 = fit(FeaturizerConfig(dim=128), ds)
        m2 = fit(FeaturizerConfig(dim=128), ds)
        assert np.array_equal(m1.idf, m2.idf)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            fit(FeaturizerConfig(dim=64), Dataset((), 1))

    def test_dim_must_be_power_of_two(self):
        with pytest.raises(ValueError):
            FeaturizerConfig(dim=100)
        with pytest.raises(ValueError):
            FeaturizerConfig(dim=1)


class TestFeaturize:
    @pytest.fixture
    def model(self):
        return fit(FeaturizerConfig(dim=256), make_dataset(["good movie", "bad film", "fine plot"]))

    def test_empty_text_zero_vector(self, model):
        v = featurize(model, "")
        assert v.shape == (256,)
        assert not v.any()

    def test_repeated_single_token_is_unit_one_hot(self, model):
        v = featurize(model, "zzz zzz")
        # buckets: unigram zzz (tf 2) and bigram "zzz zzz" (tf 1)
        nz = np.flatnonzero(v)
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)
        assert set(nz) == {hash_token("zzz", 256), hash_token("zzz zzz", 256)}

    def test_norm_is_zero_or_one(self, model):
        for text in ("", "good", "good movie", "unseen words here", "a b c d e f"):
            n = np.linalg.norm(featurize(model, text))
            assert n == pytest.approx(0.0, abs=1e-9) or n == pytest.approx(1.0, abs=1e-9)

    def test_pure_function(self, model):
        a = featurize(model, "good movie")
        b = featurize(model, "good movie")
        assert np.array_equal(a, b)

    def test_unigram_only_order_invariant(self):
        model = fit(
            FeaturizerConfig(dim=256, ngram_orders=(1,)),
            make_dataset(["alpha beta gamma"]),
        )
        assert np.array_equal(
            featurize(model, "alpha beta gamma"), featurize(model, "gamma alpha beta")
        )

    def test_bigrams_make_order_matter(self, model):
        assert not np.array_equal(
            featurize(model, "good movie plot"), featurize(model, "plot movie good")
        )

    def test_sparse_matches_dense(self, model):
        idx, vals = featurize_sparse(model, "good movie twice twice")
        dense = featurize(model, "good movie twice twice")
        assert np.array_equal(np.flatnonzero(dense), idx)
        assert np.allclose(dense[idx], vals)
