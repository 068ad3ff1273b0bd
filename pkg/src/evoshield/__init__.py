"""Training-distribution-aligned paraphrase defense for text classifiers,
with black-box word-substitution attacks and an evaluation harness."""

from .classifier import Classifier, TrainConfig, extract_features, predict_proba, train
from .corpus import Dataset, Document, load_dataset, split, tokenize, write_dataset
from .defense import (
    CandidateSet,
    DefenseConfig,
    DefenseModel,
    InferenceOutcome,
    compute_weights,
    evolve,
    infer,
    train_defense,
)
from .density import (
    GmmConfig,
    GmmModel,
    Threshold,
    bic,
    fit_gmm,
    log_density,
    percentile_threshold,
    score,
    select_components,
)
from .featurizer import FeaturizerConfig, FeaturizerModel, featurize, fit, hash_token
from .paraphraser import ParaphraseSet, SynonymLexicon, load_lexicon, paraphrase

__version__ = "0.1.0"
