"""Stochastic synonym-substitution paraphrasing from a TSV lexicon.

Substitution-only by design: every variant keeps the source token count, so
paraphrases are label-preserving under the word-substitution threat model and
the same lexicon format can drive both defense and attacks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import detokenize, tokenize


class LexiconError(ValueError):
    """A lexicon file failed to parse or validate."""


@dataclass(frozen=True)
class SynonymLexicon:
    entries: dict[str, tuple[str, ...]]  # lowercase word -> ordered distinct synonyms

    def get(self, word: str) -> tuple[str, ...]:
        return self.entries.get(word.lower(), ())

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def _single_token(word: str, lineno: int, role: str) -> str:
    toks = tokenize(word).tokens
    if len(toks) != 1:
        raise LexiconError(f"line {lineno}: {role} {word!r} is not a single word token")
    return toks[0]


def load_lexicon(path) -> SynonymLexicon:
    """Parse TSV lines ``word<TAB>syn1,syn2,...``; duplicate head words merge."""
    entries: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise LexiconError(f"line {lineno}: expected word<TAB>synonyms")
            head_raw, _, rest = line.partition("\t")
            head = _single_token(head_raw.strip(), lineno, "head word")
            syns = entries.setdefault(head, [])
            for piece in rest.split(","):
                piece = piece.strip()
                if not piece:
                    raise LexiconError(f"line {lineno}: empty synonym")
                syn = _single_token(piece, lineno, "synonym")
                if syn != head and syn not in syns:
                    syns.append(syn)
    return SynonymLexicon({w: tuple(s) for w, s in entries.items() if s})


@dataclass(frozen=True)
class ParaphraseSet:
    source: str
    variants: tuple[str, ...]


def paraphrase(
    lex: SynonymLexicon,
    text: str,
    n_variants: int,
    p_sub: float,
    rng_seed: int,
) -> ParaphraseSet:
    """Generate ``n_variants`` independent variants of ``text``.

    Each token with a lexicon entry is replaced, with probability ``p_sub``,
    by a uniformly sampled synonym.  Deterministic given the seed; duplicate
    variants are allowed.
    """
    if n_variants < 0:
        raise ValueError("n_variants must be >= 0")
    if not 0.0 <= p_sub <= 1.0:
        raise ValueError("p_sub must be in [0, 1]")
    source_tokens = tokenize(text).tokens
    rng = np.random.default_rng(rng_seed)
    variants = []
    for _ in range(n_variants):
        out = list(source_tokens)
        for i, tok in enumerate(source_tokens):
            syns = lex.get(tok)
            if syns and rng.random() < p_sub:
                out[i] = syns[int(rng.integers(len(syns)))]
        variants.append(detokenize(out))
    return ParaphraseSet(text, tuple(variants))
