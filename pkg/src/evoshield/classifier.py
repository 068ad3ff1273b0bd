"""One-hidden-layer softmax text classifier trained with mini-batch SGD.

The ReLU hidden activation doubles as the representation handed to the
anomaly model, so the network is the smallest one with a meaningful
"final layer" to reason about.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Dataset
from .featurizer import FeaturizerModel, featurize_sparse


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss)."""


@dataclass(frozen=True)
class TrainConfig:
    hidden_size: int = 64
    epochs: int = 10
    learning_rate: float = 0.1
    momentum: float = 0.9
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.hidden_size < 1:
            raise ValueError("hidden_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(eq=False)
class Classifier:
    w1: np.ndarray  # (dim, H)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H, L)
    b2: np.ndarray  # (L,)
    featurizer: FeaturizerModel
    train_config: TrainConfig
    epoch_losses: tuple[float, ...] = field(default=(), repr=False)

    @property
    def hidden_size(self) -> int:
        return self.w1.shape[1]

    @property
    def num_classes(self) -> int:
        return self.w2.shape[1]


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(clf: Classifier, x_dense: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hidden activations and class probabilities for a batch of dense inputs."""
    h = np.maximum(x_dense @ clf.w1 + clf.b1, 0.0)
    return h, _softmax(h @ clf.w2 + clf.b2)


def loss_and_gradients(clf: Classifier, x_dense: np.ndarray, y: np.ndarray):
    """Mean cross-entropy over the batch and gradients for all four parameters."""
    n = x_dense.shape[0]
    h, p = forward(clf, x_dense)
    loss = float(-np.log(np.maximum(p[np.arange(n), y], 1e-300)).mean())
    dz2 = p.copy()
    dz2[np.arange(n), y] -= 1.0
    dz2 /= n
    gw2 = h.T @ dz2
    gb2 = dz2.sum(axis=0)
    dh = dz2 @ clf.w2.T
    dh[h <= 0.0] = 0.0
    gw1 = x_dense.T @ dh
    gb1 = dh.sum(axis=0)
    return loss, {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2}


def _init_params(dim: int, hidden: int, n_classes: int, seed: int):
    rng = np.random.default_rng(seed)
    a1 = np.sqrt(6.0 / (dim + hidden))
    a2 = np.sqrt(6.0 / (hidden + n_classes))
    w1 = rng.uniform(-a1, a1, size=(dim, hidden))
    w2 = rng.uniform(-a2, a2, size=(hidden, n_classes))
    return w1, np.zeros(hidden), w2, np.zeros(n_classes)


def _densify(rows, dim: int) -> np.ndarray:
    out = np.zeros((len(rows), dim), dtype=np.float64)
    for i, (idx, vals) in enumerate(rows):
        out[i, idx] = vals
    return out


def train(data: Dataset, featurizer: FeaturizerModel, config: TrainConfig) -> Classifier:
    """Train by mini-batch SGD with momentum; deterministic for a fixed seed."""
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    if data.num_classes < 2:
        raise ValueError("training requires at least 2 classes")
    labels = data.labels()
    if labels.max() >= data.num_classes:
        raise ValueError("label out of range")

    w1, b1, w2, b2 = _init_params(featurizer.dim, config.hidden_size, data.num_classes, config.seed)
    clf = Classifier(w1, b1, w2, b2, featurizer, config)
    rows = [featurize_sparse(featurizer, d.text) for d in data.docs]
    rng = np.random.default_rng(config.seed + 1)
    velocity = {k: np.zeros_like(getattr(clf, k)) for k in ("w1", "b1", "w2", "b2")}
    epoch_losses: list[float] = []
    for epoch in range(config.epochs):
        perm = rng.permutation(len(rows))
        batch_losses = []
        for start in range(0, len(rows), config.batch_size):
            idx = perm[start : start + config.batch_size]
            x = _densify([rows[i] for i in idx], featurizer.dim)
            loss, grads = loss_and_gradients(clf, x, labels[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch + 1}")
            batch_losses.append(loss)
            for k, g in grads.items():
                v = velocity[k]
                v *= config.momentum
                v += g
                getattr(clf, k)[...] -= config.learning_rate * v
        epoch_losses.append(float(np.mean(batch_losses)))
    clf.epoch_losses = tuple(epoch_losses)
    return clf


def predict_proba(clf: Classifier, text: str) -> np.ndarray:
    """Class probabilities for one text; pure function of (model, text)."""
    idx, vals = featurize_sparse(clf.featurizer, text)
    z1 = clf.b1 + (vals @ clf.w1[idx] if idx.size else 0.0)
    h = np.maximum(z1, 0.0)
    return _softmax(h @ clf.w2 + clf.b2)


def extract_features(clf: Classifier, text: str) -> np.ndarray:
    """ReLU hidden activations for one text (the anomaly-model representation)."""
    idx, vals = featurize_sparse(clf.featurizer, text)
    z1 = clf.b1 + (vals @ clf.w1[idx] if idx.size else 0.0)
    return np.maximum(z1, 0.0)


def extract_features_batch(clf: Classifier, texts) -> np.ndarray:
    return np.stack([extract_features(clf, t) for t in texts])


def accuracy(clf: Classifier, data: Dataset) -> float:
    correct = sum(
        int(np.argmax(predict_proba(clf, d.text)) == d.label) for d in data.docs
    )
    return correct / len(data)
