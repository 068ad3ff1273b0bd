import itertools

import numpy as np
import pytest

from evoshield.attacks import (
    CountingVictim,
    deletion_importance_attack,
    pwws_attack,
)
from evoshield.corpus import detokenize, tokenize
from evoshield.paraphraser import SynonymLexicon


def presence_classify(text):
    """Class 1 iff the token 'good' is present."""
    if "good" in tokenize(text).tokens:
        return np.array([0.1, 0.9])
    return np.array([0.9, 0.1])


def linear_classify_fn(weights):
    def fn(text):
        z = sum(weights.get(t, 0.0) for t in tokenize(text).tokens)
        p1 = 1.0 / (1.0 + np.exp(-z))
        return np.array([1.0 - p1, p1])

    return fn


def exhaustive_flip_exists(classify, text, y, lex):
    tokens = list(tokenize(text).tokens)
    positions = [i for i, t in enumerate(tokens) if lex.get(t)]
    choice_sets = [(tokens[i],) + lex.get(tokens[i]) for i in positions]
    for combo in itertools.product(*choice_sets):
        cur = tokens.copy()
        for pos, word in zip(positions, combo):
            cur[pos] = word
        if int(np.argmax(classify(detokenize(cur)))) != y:
            return True
    return False


GOOD_LEX = SynonymLexicon({"good": ("fine",)})


class TestPwws:
    def test_success_single_substitution(self):
        victim = CountingVictim(presence_classify)
        res = pwws_attack(victim, "good movie", 1, GOOD_LEX)
        assert res.success
        assert res.adversarial_text == "fine movie"
        assert res.substitutions == ((0, "good", "fine"),)
        assert res.final_label == 0
        assert res.queries == 4  # init + 1 saliency + 1 synonym + 1 flip check
        assert exhaustive_flip_exists(presence_classify, "good movie", 1, GOOD_LEX)

    def test_initially_misclassified(self):
        victim = CountingVictim(presence_classify)
        res = pwws_attack(victim, "bad movie", 1, GOOD_LEX)
        assert not res.success
        assert not res.initially_correct
        assert res.queries == 1
        assert res.final_label == 0

    def test_no_substitutable_positions(self):
        victim = CountingVictim(presence_classify)
        res = pwws_attack(victim, "good movie", 1, SynonymLexicon({"zzz": ("qqq",)}))
        assert not res.success
        assert res.initially_correct
        assert res.queries == 1

    def test_budget_exhaustion_exact(self):
        victim = CountingVictim(presence_classify)
        res = pwws_attack(victim, "good movie", 1, GOOD_LEX, budget=2)
        assert not res.success
        assert res.queries == 2
        assert victim.queries == 2

    def test_budget_one_only_initial_check(self):
        victim = CountingVictim(presence_classify)
        res = pwws_attack(victim, "good movie", 1, GOOD_LEX, budget=1)
        assert not res.success
        assert res.queries == 1


class TestDeletionImportance:
    def test_success_single_substitution(self):
        victim = CountingVictim(presence_classify)
        res = deletion_importance_attack(victim, "good movie", 1, GOOD_LEX)
        assert res.success
        assert res.adversarial_text == "fine movie"
        assert res.substitutions == ((0, "good", "fine"),)
        # init + 2 deletion probes + 1 synonym probe (flip read off the probe)
        assert res.queries == 4
        assert exhaustive_flip_exists(presence_classify, "good movie", 1, GOOD_LEX)

    def test_zero_importance_ordered_last(self):
        # 'filler' deletion leaves P unchanged; 'good' must be tried first
        lex = SynonymLexicon({"good": ("fine",), "filler": ("stuff",)})
        victim = CountingVictim(presence_classify)
        res = deletion_importance_attack(victim, "good filler", 1, lex)
        assert res.success
        assert res.substitutions == ((0, "good", "fine"),)

    def test_budget_one(self):
        victim = CountingVictim(presence_classify)
        res = deletion_importance_attack(victim, "good movie", 1, GOOD_LEX, budget=1)
        assert not res.success
        assert res.queries == 1
        assert victim.queries == 1

    def test_single_token_text(self):
        victim = CountingVictim(presence_classify)
        res = deletion_importance_attack(victim, "good", 1, GOOD_LEX)
        assert res.success
        assert res.adversarial_text == "fine"
        assert res.queries == 3


MICRO_LEX = SynonymLexicon(
    {
        "alpha": ("beta", "gamma"),
        "delta": ("eps", "zeta"),
        "eta": ("theta",),
    }
)


def micro_cases():
    rng = np.random.default_rng(7)
    vocab = ["alpha", "delta", "eta", "pad1", "pad2"]
    for _ in range(30):
        weights = {w: float(rng.normal() * 2) for w in vocab}
        for syn_group in MICRO_LEX.entries.values():
            for s in syn_group:
                weights[s] = float(rng.normal() * 2)
        k = int(rng.integers(2, 5))
        text = " ".join(vocab[int(i)] for i in rng.integers(len(vocab), size=k))
        yield weights, text


class TestGreedySoundness:
    @pytest.mark.parametrize("attack", [pwws_attack, deletion_importance_attack])
    def test_success_implies_real_flip(self, attack):
        for weights, text in micro_cases():
            classify = linear_classify_fn(weights)
            y = int(np.argmax(classify(text)))
            victim = CountingVictim(classify)
            res = attack(victim, text, y, MICRO_LEX)
            assert res.queries == victim.queries
            if res.success:
                fresh = int(np.argmax(classify(res.adversarial_text)))
                assert fresh == res.final_label != y
                assert exhaustive_flip_exists(classify, text, y, MICRO_LEX)

    @pytest.mark.parametrize("attack", [pwws_attack, deletion_importance_attack])
    def test_substitutions_reconstruct_adversarial_text(self, attack):
        for weights, text in micro_cases():
            classify = linear_classify_fn(weights)
            y = int(np.argmax(classify(text)))
            res = attack(CountingVictim(classify), text, y, MICRO_LEX)
            if not res.success:
                continue
            tokens = list(tokenize(text).tokens)
            for pos, old, new in res.substitutions:
                assert tokens[pos] == old
                assert new in MICRO_LEX.get(old)
                tokens[pos] = new
            assert detokenize(tokens) == res.adversarial_text

    @pytest.mark.parametrize("attack", [pwws_attack, deletion_importance_attack])
    def test_deterministic(self, attack):
        weights, text = next(micro_cases())
        classify = linear_classify_fn(weights)
        y = int(np.argmax(classify(text)))
        a = attack(CountingVictim(classify), text, y, MICRO_LEX)
        b = attack(CountingVictim(classify), text, y, MICRO_LEX)
        assert a == b
