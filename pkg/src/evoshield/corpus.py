"""Labeled text datasets: loading, tokenization, and deterministic splits.

The canonical on-disk format is JSON-lines, one ``{"text": ..., "label": ...}``
object per line (UTF-8).  A TSV alternative (``text<TAB>label``) is accepted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class DatasetError(ValueError):
    """A dataset file failed to parse or validate."""


@dataclass(frozen=True)
class Document:
    text: str
    label: int


@dataclass(frozen=True)
class Dataset:
    docs: tuple[Document, ...]
    num_classes: int

    def __len__(self) -> int:
        return len(self.docs)

    def __iter__(self):
        return iter(self.docs)

    def __getitem__(self, i: int) -> Document:
        return self.docs[i]

    def labels(self) -> np.ndarray:
        return np.array([d.label for d in self.docs], dtype=np.int64)


@dataclass(frozen=True)
class TokenSeq:
    """Lowercased word tokens plus (start, end) offsets into the source text."""

    tokens: tuple[str, ...]
    spans: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize(text: str) -> TokenSeq:
    """Lowercase and split on maximal runs of non-alphanumeric characters."""
    tokens: list[str] = []
    spans: list[tuple[int, int]] = []
    start = None
    for i, ch in enumerate(text):
        if ch.isalnum():
            if start is None:
                start = i
        elif start is not None:
            tokens.append(text[start:i].lower())
            spans.append((start, i))
            start = None
    if start is not None:
        tokens.append(text[start:].lower())
        spans.append((start, len(text)))
    return TokenSeq(tuple(tokens), tuple(spans))


def detokenize(tokens) -> str:
    return " ".join(tokens)


def _parse_jsonl_line(line: str, lineno: int) -> Document:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise DatasetError(f"line {lineno}: invalid JSON ({e.msg})") from e
    if not isinstance(obj, dict):
        raise DatasetError(f"line {lineno}: expected a JSON object")
    if "text" not in obj:
        raise DatasetError(f'line {lineno}: missing "text" field')
    if "label" not in obj:
        raise DatasetError(f'line {lineno}: missing "label" field')
    text, label = obj["text"], obj["label"]
    if not isinstance(text, str):
        raise DatasetError(f'line {lineno}: "text" must be a string')
    if not isinstance(label, int) or isinstance(label, bool):
        raise DatasetError(f'line {lineno}: "label" must be an integer')
    return Document(text, label)


def _parse_tsv_line(line: str, lineno: int) -> Document:
    if "\t" not in line:
        raise DatasetError(f"line {lineno}: expected text<TAB>label")
    text, _, raw = line.rpartition("\t")
    try:
        label = int(raw)
    except ValueError:
        raise DatasetError(f"line {lineno}: label {raw!r} is not an integer") from None
    return Document(text, label)


def load_dataset(
    path,
    format: str = "jsonl",
    num_classes: int | None = None,
    allow_empty_text: bool = False,
) -> Dataset:
    """Load a labeled dataset, preserving record order.

    ``num_classes`` is inferred as ``1 + max(label)`` unless given explicitly.
    """
    if format not in ("jsonl", "tsv"):
        raise DatasetError(f"unknown format {format!r}")
    parse = _parse_jsonl_line if format == "jsonl" else _parse_tsv_line
    docs: list[Document] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            doc = parse(line, lineno)
            if doc.label < 0:
                raise DatasetError(f"line {lineno}: label {doc.label} is negative")
            if not doc.text and not allow_empty_text:
                raise DatasetError(f"line {lineno}: empty text (pass allow_empty_text to accept)")
            docs.append(doc)
    if num_classes is None:
        if not docs:
            raise DatasetError(f"{path}: empty dataset and no num_classes declared")
        num_classes = 1 + max(d.label for d in docs)
    for lineno, doc in enumerate(docs, start=1):
        if doc.label >= num_classes:
            raise DatasetError(
                f"line {lineno}: label {doc.label} out of range for {num_classes} classes"
            )
    return Dataset(tuple(docs), num_classes)


def write_dataset(data: Dataset, path) -> None:
    """Write canonical JSONL: one compact object per line, keys text then label."""
    with open(path, "w", encoding="utf-8") as f:
        for doc in data.docs:
            f.write(json.dumps({"text": doc.text, "label": doc.label}, ensure_ascii=False))
            f.write("\n")


def split(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic train/test partition, stratified when every class has >= 2 docs."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if len(data) == 0:
        raise ValueError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    labels = data.labels()
    counts = np.bincount(labels, minlength=data.num_classes)
    present = counts[counts > 0]
    test_idx: list[int] = []
    if present.size and present.min() >= 2:
        for c in range(data.num_classes):
            idx = np.flatnonzero(labels == c)
            if idx.size == 0:
                continue
            n_test = int(round(test_fraction * idx.size))
            picked = rng.permutation(idx)[:n_test]
            test_idx.extend(int(i) for i in picked)
    else:
        n_test = int(round(test_fraction * len(data)))
        picked = rng.permutation(len(data))[:n_test]
        test_idx.extend(int(i) for i in picked)
    test_set = set(test_idx)
    train_docs = tuple(d for i, d in enumerate(data.docs) if i not in test_set)
    test_docs = tuple(d for i, d in enumerate(data.docs) if i in test_set)
    return (
        Dataset(train_docs, data.num_classes),
        Dataset(test_docs, data.num_classes),
    )
