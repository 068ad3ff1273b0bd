"""Versioned single-file JSON serialization of a trained defense bundle.

The lexicon itself is not embedded; the model records its path and an FNV-1a
64 content hash and re-verifies both on load.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .classifier import Classifier, TrainConfig
from .defense import DefenseConfig, DefenseModel
from .density import GmmModel, Threshold
from .featurizer import FeaturizerModel, fnv1a64_bytes
from .paraphraser import load_lexicon

FORMAT_VERSION = 1


class ModelIOError(ValueError):
    """Model file is malformed, wrong version, or its lexicon changed."""


def _lexicon_hash(path) -> str:
    return f"{fnv1a64_bytes(Path(path).read_bytes()):016x}"


def save_defense_model(model: DefenseModel, path, lexicon_path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "defense_config": vars(model.config),
        "featurizer": {
            "dim": model.featurizer.dim,
            "ngram_orders": list(model.featurizer.ngram_orders),
            "idf": model.featurizer.idf.tolist(),
        },
        "classifier": {
            "w1": model.classifier.w1.tolist(),
            "b1": model.classifier.b1.tolist(),
            "w2": model.classifier.w2.tolist(),
            "b2": model.classifier.b2.tolist(),
            "train_config": vars(model.classifier.train_config),
        },
        "gmm": {
            "weights": model.gmm.weights.tolist(),
            "means": model.gmm.means.tolist(),
            "variances": model.gmm.variances.tolist(),
        },
        "threshold": {"value": model.threshold.value, "alpha": model.threshold.alpha},
        "lexicon": {"path": str(lexicon_path), "fnv1a64": _lexicon_hash(lexicon_path)},
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_defense_model(path, lexicon_path=None) -> DefenseModel:
    with open(path, encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelIOError(f"{path}: not valid JSON ({e.msg})") from e
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelIOError(
            f"{path}: unsupported format version {doc.get('format_version')!r}"
        )
    try:
        feats = FeaturizerModel(
            dim=int(doc["featurizer"]["dim"]),
            ngram_orders=tuple(doc["featurizer"]["ngram_orders"]),
            idf=np.asarray(doc["featurizer"]["idf"], dtype=np.float64),
        )
        c = doc["classifier"]
        clf = Classifier(
            w1=np.asarray(c["w1"], dtype=np.float64),
            b1=np.asarray(c["b1"], dtype=np.float64),
            w2=np.asarray(c["w2"], dtype=np.float64),
            b2=np.asarray(c["b2"], dtype=np.float64),
            featurizer=feats,
            train_config=TrainConfig(**c["train_config"]),
        )
        g = doc["gmm"]
        gmm = GmmModel(
            weights=np.asarray(g["weights"], dtype=np.float64),
            means=np.asarray(g["means"], dtype=np.float64),
            variances=np.asarray(g["variances"], dtype=np.float64),
        )
        threshold = Threshold(float(doc["threshold"]["value"]), float(doc["threshold"]["alpha"]))
        config = DefenseConfig(**doc["defense_config"])
        lex_info = doc["lexicon"]
    except (KeyError, TypeError) as e:
        raise ModelIOError(f"{path}: missing or malformed field ({e})") from e
    lex_path = lexicon_path if lexicon_path is not None else lex_info["path"]
    actual = _lexicon_hash(lex_path)
    if actual != lex_info["fnv1a64"]:
        raise ModelIOError(
            f"lexicon {lex_path} hash {actual} does not match the model's "
            f"recorded {lex_info['fnv1a64']}"
        )
    lexicon = load_lexicon(lex_path)
    return DefenseModel(clf, gmm, threshold, lexicon, config)
