"""Training, evolutionary search, and ensemble inference for the defense.

Training augments the corpus with paraphrases, trains the classifier on the
augmented set, fits the mixture model on its hidden features, and fixes the
normality threshold.  Inference evolves paraphrase candidates toward the
training distribution and ensembles their predictions with min-max score
weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import classifier as clf_mod
from . import density, featurizer
from .classifier import Classifier, TrainConfig
from .corpus import Dataset, Document
from .density import GmmConfig, GmmModel, Threshold
from .featurizer import FeaturizerConfig, fnv1a64
from .paraphraser import SynonymLexicon, paraphrase


@dataclass(frozen=True)
class DefenseConfig:
    n_paraphrases: int = 5
    top_k: int = 3
    rounds: int = 5
    alpha: float = 30.0
    p_sub: float = 0.2
    seed: int = 0
    gmm_max_components: int = 10
    fresh_inference_randomness: bool = False

    def __post_init__(self):
        if self.n_paraphrases < 1:
            raise ValueError("n_paraphrases must be >= 1")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0.0 <= self.alpha <= 100.0:
            raise ValueError("alpha must be in [0, 100]")
        if not 0.0 <= self.p_sub <= 1.0:
            raise ValueError("p_sub must be in [0, 1]")


@dataclass(eq=False)
class DefenseModel:
    classifier: Classifier
    gmm: GmmModel
    threshold: Threshold
    lexicon: SynonymLexicon
    config: DefenseConfig

    @property
    def featurizer(self):
        return self.classifier.featurizer

    def with_config(self, **changes) -> "DefenseModel":
        """Same trained bundle with inference-time config fields replaced."""
        return DefenseModel(
            self.classifier,
            self.gmm,
            self.threshold,
            self.lexicon,
            replace(self.config, **changes),
        )


@dataclass(frozen=True)
class CandidateSet:
    texts: tuple[str, ...]
    scores: tuple[float, ...]  # descending


@dataclass(frozen=True)
class EvolutionResult:
    candidates: CandidateSet
    rounds_used: int
    threshold_met: bool
    paraphrases_generated: int
    round_best_scores: tuple[float, ...]  # best kept score after each round
    round_min_scores: tuple[float, ...]  # worst kept score after each round


@dataclass(frozen=True)
class InferenceOutcome:
    label: int
    confidence: np.ndarray
    candidates: CandidateSet
    rounds_used: int
    threshold_met: bool


def augment_with_paraphrases(
    train: Dataset, lexicon: SynonymLexicon, config: DefenseConfig
) -> Dataset:
    """Original docs followed by n_paraphrases label-inheriting variants each."""
    extra: list[Document] = []
    for i, doc in enumerate(train.docs):
        seed = fnv1a64(f"{config.seed}:train:{i}")
        pset = paraphrase(lexicon, doc.text, config.n_paraphrases, config.p_sub, seed)
        extra.extend(Document(v, doc.label) for v in pset.variants)
    return Dataset(train.docs + tuple(extra), train.num_classes)


def _fit_pipeline(
    train: Dataset,
    config: DefenseConfig,
    classifier_config: TrainConfig,
    featurizer_config: FeaturizerConfig,
    lexicon: SynonymLexicon,
):
    """Shared trainer returning the model plus training features and scores."""
    if len(train) == 0:
        raise ValueError("cannot train a defense on an empty dataset")
    if np.unique(train.labels()).size < 2:
        raise ValueError("training data must contain at least two classes")
    augmented = augment_with_paraphrases(train, lexicon, config)
    feats_model = featurizer.fit(featurizer_config, augmented)
    clf = clf_mod.train(augmented, feats_model, classifier_config)
    hidden = clf_mod.extract_features_batch(clf, [d.text for d in augmented.docs])
    _, gmm = density.select_components(
        hidden, config.gmm_max_components, GmmConfig(seed=config.seed)
    )
    scores = density.log_density(gmm, hidden)
    threshold = density.percentile_threshold(scores, config.alpha)
    model = DefenseModel(clf, gmm, threshold, lexicon, config)
    return model, hidden, scores


def train_defense(
    train: Dataset,
    config: DefenseConfig,
    classifier_config: TrainConfig,
    featurizer_config: FeaturizerConfig,
    lexicon: SynonymLexicon,
) -> DefenseModel:
    model, _, _ = _fit_pipeline(train, config, classifier_config, featurizer_config, lexicon)
    return model


def _call_seed(config: DefenseConfig, text: str) -> int:
    if config.fresh_inference_randomness:
        return int(np.random.SeedSequence().entropy & ((1 << 63) - 1))
    return fnv1a64(f"{config.seed}|{text}")


def _dedupe(texts: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for t in texts:
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def evolve(model: DefenseModel, x: str) -> EvolutionResult:
    """Iterated paraphrase / score / select loop.

    Each round generates at most n_paraphrases variants spread over the current
    seeds, pools them with the seeds, keeps the top_k by normality score, and
    exits early once every kept candidate scores at or above the threshold.
    """
    cfg = model.config
    rng = np.random.default_rng(_call_seed(cfg, x))
    seeds = [x]
    generated = 0
    texts: list[str] = [x]
    scores = np.zeros(1)
    rounds_used = 0
    threshold_met = False
    round_best: list[float] = []
    round_min: list[float] = []
    for _ in range(cfg.rounds):
        rounds_used += 1
        per_seed = math.ceil(cfg.n_paraphrases / len(seeds))
        new: list[str] = []
        for s in seeds:
            want = min(per_seed, cfg.n_paraphrases - len(new))
            if want <= 0:
                break
            pset = paraphrase(model.lexicon, s, want, cfg.p_sub, int(rng.integers(1 << 63)))
            new.extend(pset.variants)
        generated += len(new)
        pool = _dedupe(new + seeds)
        hidden = clf_mod.extract_features_batch(model.classifier, pool)
        pool_scores = density.log_density(model.gmm, hidden)
        order = np.argsort(-pool_scores, kind="stable")[: cfg.top_k]
        texts = [pool[i] for i in order]
        scores = pool_scores[order]
        round_best.append(float(scores[0]))
        round_min.append(float(scores[-1]))
        if scores[-1] >= model.threshold.value:
            threshold_met = True
            break
        seeds = texts
    candidates = CandidateSet(tuple(texts), tuple(float(s) for s in scores))
    return EvolutionResult(
        candidates,
        rounds_used,
        threshold_met,
        generated,
        tuple(round_best),
        tuple(round_min),
    )


def compute_weights(scores) -> np.ndarray:
    """Min-max normalize scores, then divide by the sum; uniform when degenerate."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ValueError("scores must be non-empty")
    spread = s.max() - s.min()
    if spread == 0.0:
        return np.full(s.size, 1.0 / s.size)
    m = (s - s.min()) / spread
    return m / m.sum()


def infer(model: DefenseModel, x: str) -> InferenceOutcome:
    """Evolve candidates, weight them by normality, and ensemble the predictions."""
    evo = evolve(model, x)
    weights = compute_weights(evo.candidates.scores)
    confs = np.stack(
        [clf_mod.predict_proba(model.classifier, t) for t in evo.candidates.texts]
    )
    combined = weights @ confs
    return InferenceOutcome(
        label=int(np.argmax(combined)),
        confidence=combined,
        candidates=evo.candidates,
        rounds_used=evo.rounds_used,
        threshold_met=evo.threshold_met,
    )
