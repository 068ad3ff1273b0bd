"""Black-box word-substitution attacks with exact query accounting.

Two greedy attackers over a shared synonym lexicon: saliency-weighted
substitution (probability drop times softmax word saliency) and
deletion-importance ordering.  The victim is any text -> probability-vector
function; every probe counts against a hard query budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import detokenize, tokenize
from .paraphraser import SynonymLexicon

UNK_TOKEN = "<unk>"
DEFAULT_BUDGET = 3000


class CountingVictim:
    """Wraps a classify function with a per-attack monotone query counter."""

    def __init__(self, classify_fn):
        self._fn = classify_fn
        self.queries = 0

    def classify(self, text: str) -> np.ndarray:
        self.queries += 1
        return np.asarray(self._fn(text), dtype=np.float64)


class _BudgetExhausted(Exception):
    pass


@dataclass(frozen=True)
class AttackResult:
    success: bool
    original_text: str
    adversarial_text: str | None
    original_label: int
    final_label: int
    queries: int
    substitutions: tuple[tuple[int, str, str], ...]  # (position, old, new)
    initially_correct: bool

    def to_json_dict(self) -> dict:
        return {
            "success": self.success,
            "original_text": self.original_text,
            "adversarial_text": self.adversarial_text,
            "original_label": self.original_label,
            "final_label": self.final_label,
            "queries": self.queries,
            "substitutions": [list(s) for s in self.substitutions],
            "initially_correct": self.initially_correct,
        }


def _softmax(v: np.ndarray) -> np.ndarray:
    e = np.exp(v - v.max())
    return e / e.sum()


def _make_query(victim: CountingVictim, budget: int):
    def query(text: str) -> np.ndarray:
        if victim.queries >= budget:
            raise _BudgetExhausted
        return victim.classify(text)

    return query


def _finish_failure(x, y, victim, initially_correct=True, final_label=None):
    return AttackResult(
        success=False,
        original_text=x,
        adversarial_text=None,
        original_label=y,
        final_label=y if final_label is None else final_label,
        queries=victim.queries,
        substitutions=(),
        initially_correct=initially_correct,
    )


def pwws_attack(
    victim: CountingVictim,
    x: str,
    y: int,
    lex: SynonymLexicon,
    budget: int = DEFAULT_BUDGET,
) -> AttackResult:
    """Saliency-weighted greedy substitution.

    Word saliency is the probability drop when a token is masked with an
    out-of-vocabulary marker; each substitutable position keeps its single
    most damaging synonym; replacements are applied in descending
    drop-times-softmax-saliency order until the label flips.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    query = _make_query(victim, budget)
    probs0 = query(x)
    if int(np.argmax(probs0)) != y:
        return _finish_failure(x, y, victim, initially_correct=False, final_label=int(np.argmax(probs0)))
    p_orig = probs0[y]
    tokens = list(tokenize(x).tokens)
    positions = [i for i, t in enumerate(tokens) if lex.get(t)]
    if not positions:
        return _finish_failure(x, y, victim)
    try:
        saliency = np.empty(len(positions))
        for j, i in enumerate(positions):
            probed = tokens.copy()
            probed[i] = UNK_TOKEN
            saliency[j] = p_orig - query(detokenize(probed))[y]
        sal_soft = _softmax(saliency)

        best_syn: list[str] = []
        best_drop = np.empty(len(positions))
        for j, i in enumerate(positions):
            syns = lex.get(tokens[i])
            drops = np.empty(len(syns))
            for k, w in enumerate(syns):
                probed = tokens.copy()
                probed[i] = w
                drops[k] = p_orig - query(detokenize(probed))[y]
            pick = int(np.argmax(drops))
            best_syn.append(syns[pick])
            best_drop[j] = drops[pick]

        order = sorted(range(len(positions)), key=lambda j: -(best_drop[j] * sal_soft[j]))
        current = tokens.copy()
        subs: list[tuple[int, str, str]] = []
        for j in order:
            i = positions[j]
            subs.append((i, tokens[i], best_syn[j]))
            current[i] = best_syn[j]
            probs = query(detokenize(current))
            label = int(np.argmax(probs))
            if label != y:
                return AttackResult(
                    success=True,
                    original_text=x,
                    adversarial_text=detokenize(current),
                    original_label=y,
                    final_label=label,
                    queries=victim.queries,
                    substitutions=tuple(subs),
                    initially_correct=True,
                )
    except _BudgetExhausted:
        pass
    return _finish_failure(x, y, victim)


def deletion_importance_attack(
    victim: CountingVictim,
    x: str,
    y: int,
    lex: SynonymLexicon,
    budget: int = DEFAULT_BUDGET,
) -> AttackResult:
    """Deletion-importance greedy substitution.

    Token importance is the probability drop when the token is deleted;
    positions are visited in descending importance, committing at each the
    synonym that most reduces the true-class probability.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    query = _make_query(victim, budget)
    probs0 = query(x)
    if int(np.argmax(probs0)) != y:
        return _finish_failure(x, y, victim, initially_correct=False, final_label=int(np.argmax(probs0)))
    tokens = list(tokenize(x).tokens)
    if not tokens:
        return _finish_failure(x, y, victim)
    try:
        importance = np.empty(len(tokens))
        for i in range(len(tokens)):
            probed = tokens[:i] + tokens[i + 1 :]
            importance[i] = probs0[y] - query(detokenize(probed))[y]
        order = np.argsort(-importance, kind="stable")

        current = tokens.copy()
        p_cur = probs0[y]
        subs: list[tuple[int, str, str]] = []
        for i in order:
            syns = lex.get(current[i])
            if not syns:
                continue
            cand_probs = []
            for w in syns:
                probed = current.copy()
                probed[i] = w
                cand_probs.append(query(detokenize(probed)))
            p_y = np.array([p[y] for p in cand_probs])
            pick = int(np.argmin(p_y))
            if p_y[pick] >= p_cur:
                continue
            subs.append((int(i), current[i], syns[pick]))
            current[i] = syns[pick]
            p_cur = p_y[pick]
            label = int(np.argmax(cand_probs[pick]))
            if label != y:
                return AttackResult(
                    success=True,
                    original_text=x,
                    adversarial_text=detokenize(current),
                    original_label=y,
                    final_label=label,
                    queries=victim.queries,
                    substitutions=tuple(subs),
                    initially_correct=True,
                )
    except _BudgetExhausted:
        pass
    return _finish_failure(x, y, victim)


ATTACK_METHODS = {
    "pwws": pwws_attack,
    "delimp": deletion_importance_attack,
}
