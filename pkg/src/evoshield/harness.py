"""Experiment driver: clean accuracy, attack evaluation, ablations, sweeps.

Metrics follow the usual black-box attack accounting: clean accuracy over the
full test set; accuracy under attack over the sampled docs; success rate over
the docs the victim initially got right; average queries over the sampled
docs.  Attacks run per-sample with isolated victims, so parallel execution
cannot change any reported number.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
from dataclasses import dataclass, field, replace

import numpy as np

from . import classifier as clf_mod
from . import density, featurizer
from .attacks import ATTACK_METHODS, DEFAULT_BUDGET, AttackResult, CountingVictim
from .classifier import Classifier, TrainConfig
from .corpus import Dataset
from .defense import DefenseConfig, DefenseModel, infer, train_defense
from .featurizer import FeaturizerConfig, fnv1a64
from .paraphraser import SynonymLexicon, paraphrase


@dataclass(frozen=True)
class PlainVictim:
    """The classifier queried directly, no defense."""

    classifier: Classifier

    def classify(self, text: str) -> np.ndarray:
        return clf_mod.predict_proba(self.classifier, text)


@dataclass(frozen=True)
class DefendedVictim:
    """The full defense pipeline queried as an opaque black box."""

    model: DefenseModel

    def classify(self, text: str) -> np.ndarray:
        return infer(self.model, text).confidence


@dataclass(frozen=True)
class ParaphraseEnsembleVictim:
    """One round of paraphrases, uniform-weight ensemble, no anomaly model."""

    classifier: Classifier
    lexicon: SynonymLexicon
    n_paraphrases: int
    p_sub: float
    seed: int

    def classify(self, text: str) -> np.ndarray:
        call_seed = fnv1a64(f"{self.seed}|{text}")
        pset = paraphrase(self.lexicon, text, self.n_paraphrases, self.p_sub, call_seed)
        cands = [text, *pset.variants]
        probs = np.stack([clf_mod.predict_proba(self.classifier, t) for t in cands])
        return probs.mean(axis=0)


def evaluate_clean(classify_fn, test: Dataset) -> float:
    """Percent of test docs whose predicted label matches the true label."""
    if len(test) == 0:
        raise ValueError("test set is empty")
    correct = sum(int(np.argmax(classify_fn(d.text)) == d.label) for d in test.docs)
    return 100.0 * correct / len(test)


@dataclass(frozen=True)
class AttackRunConfig:
    method: str
    n_samples: int
    seed: int
    budget: int = DEFAULT_BUDGET
    jobs: int = 1

    def __post_init__(self):
        if self.method not in ATTACK_METHODS:
            raise ValueError(f"unknown attack method {self.method!r}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass(frozen=True)
class EvalReport:
    victim: str
    method: str
    ca: float
    aua: float
    asr: float
    avg_queries: float
    n_sampled: int
    n_attempted: int
    n_success: int
    seed: int
    config_snapshot: dict
    config_hash: str

    def to_json_dict(self) -> dict:
        return {
            "victim": self.victim,
            "method": self.method,
            "ca": self.ca,
            "aua": self.aua,
            "asr": self.asr,
            "avg_queries": self.avg_queries,
            "n_sampled": self.n_sampled,
            "n_attempted": self.n_attempted,
            "n_success": self.n_success,
            "seed": self.seed,
            "config_snapshot": self.config_snapshot,
            "config_hash": self.config_hash,
        }


def compute_metrics(results: list[AttackResult], n_sampled: int) -> dict:
    """Aggregate counts and percentages from raw per-sample attack results."""
    n_attempted = sum(r.initially_correct for r in results)
    n_success = sum(r.success for r in results)
    total_queries = sum(r.queries for r in results)
    aua = 100.0 * (n_attempted - n_success) / n_sampled
    asr = 100.0 * n_success / n_attempted if n_attempted else 0.0
    avg_queries = total_queries / n_sampled
    return {
        "n_sampled": n_sampled,
        "n_attempted": n_attempted,
        "n_success": n_success,
        "aua": aua,
        "asr": asr,
        "avg_queries": avg_queries,
    }


def config_hash(snapshot: dict) -> str:
    canon = json.dumps(snapshot, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def sample_docs(test: Dataset, n_samples: int, seed: int) -> list[int]:
    if n_samples > len(test):
        raise ValueError(f"n_samples {n_samples} exceeds test size {len(test)}")
    rng = np.random.default_rng(seed)
    return [int(i) for i in rng.choice(len(test), size=n_samples, replace=False)]


_WORKER: dict = {}


def _init_worker(victim, method, lexicon, budget):
    _WORKER.update(victim=victim, method=method, lexicon=lexicon, budget=budget)


def _attack_one(args):
    text, label = args
    counting = CountingVictim(_WORKER["victim"].classify)
    return ATTACK_METHODS[_WORKER["method"]](
        counting, text, label, _WORKER["lexicon"], _WORKER["budget"]
    )


def run_attack_eval(
    victim,
    attack_lexicon: SynonymLexicon,
    test: Dataset,
    run: AttackRunConfig,
    victim_name: str = "victim",
    extra_snapshot: dict | None = None,
) -> tuple[EvalReport, list[AttackResult]]:
    """Attack a seeded sample of test docs and aggregate the metrics.

    Every sampled doc is passed to the attack (the initial classification
    counts as its first query); docs the victim initially misclassifies are
    recorded but not perturbed.
    """
    idx = sample_docs(test, run.n_samples, run.seed)
    ca = evaluate_clean(victim.classify, test)
    jobs_args = [(test.docs[i].text, test.docs[i].label) for i in idx]
    if run.jobs == 1:
        _init_worker(victim, run.method, attack_lexicon, run.budget)
        results = [_attack_one(a) for a in jobs_args]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(
            run.jobs,
            initializer=_init_worker,
            initargs=(victim, run.method, attack_lexicon, run.budget),
        ) as pool:
            results = pool.map(_attack_one, jobs_args)
    metrics = compute_metrics(results, run.n_samples)
    snapshot = {
        "victim": victim_name,
        "method": run.method,
        "n_samples": run.n_samples,
        "seed": run.seed,
        "budget": run.budget,
        **(extra_snapshot or {}),
    }
    report = EvalReport(
        victim=victim_name,
        method=run.method,
        ca=ca,
        aua=metrics["aua"],
        asr=metrics["asr"],
        avg_queries=metrics["avg_queries"],
        n_sampled=metrics["n_sampled"],
        n_attempted=metrics["n_attempted"],
        n_success=metrics["n_success"],
        seed=run.seed,
        config_snapshot=snapshot,
        config_hash=config_hash(snapshot),
    )
    return report, results


ABLATION_VARIANTS = (
    "original",
    "augmented_training",
    "paraphrase_ensemble",
    "full_defense",
)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to build the defense and its ablation variants."""

    defense: DefenseConfig = field(default_factory=DefenseConfig)
    classifier: TrainConfig = field(default_factory=TrainConfig)
    featurizer: FeaturizerConfig = field(default_factory=FeaturizerConfig)

    def snapshot(self) -> dict:
        enc = lambda c: {k: list(v) if isinstance(v, tuple) else v for k, v in vars(c).items()}
        return {
            "defense": enc(self.defense),
            "classifier": enc(self.classifier),
            "featurizer": enc(self.featurizer),
        }


def train_original(train: Dataset, pipeline: PipelineConfig) -> Classifier:
    feats = featurizer.fit(pipeline.featurizer, train)
    return clf_mod.train(train, feats, pipeline.classifier)


def build_ablation_victims(
    train: Dataset, pipeline: PipelineConfig, lexicon: SynonymLexicon
) -> dict[str, object]:
    """Train once per distinct model and wire the four ablation variants."""
    original = train_original(train, pipeline)
    defense = train_defense(
        train, pipeline.defense, pipeline.classifier, pipeline.featurizer, lexicon
    )
    return {
        "original": PlainVictim(original),
        "augmented_training": PlainVictim(defense.classifier),
        "paraphrase_ensemble": ParaphraseEnsembleVictim(
            original,
            lexicon,
            pipeline.defense.n_paraphrases,
            pipeline.defense.p_sub,
            pipeline.defense.seed,
        ),
        "full_defense": DefendedVictim(defense),
    }


def run_ablation(
    train: Dataset,
    test: Dataset,
    pipeline: PipelineConfig,
    lexicon: SynonymLexicon,
    attack_lexicon: SynonymLexicon,
    methods: tuple[str, ...],
    n_samples: int,
    seed: int,
    budget: int = DEFAULT_BUDGET,
    jobs: int = 1,
) -> dict[str, dict[str, EvalReport]]:
    victims = build_ablation_victims(train, pipeline, lexicon)
    table: dict[str, dict[str, EvalReport]] = {}
    for variant in ABLATION_VARIANTS:
        table[variant] = {}
        for method in methods:
            run = AttackRunConfig(method, n_samples, seed, budget, jobs)
            report, _ = run_attack_eval(
                victims[variant],
                attack_lexicon,
                test,
                run,
                victim_name=variant,
                extra_snapshot={"variant": variant, "pipeline": pipeline.snapshot()},
            )
            table[variant][method] = report
    return table


@dataclass(frozen=True)
class TransferReport:
    method: str
    n_sampled: int
    n_transferred: int
    source_name: str
    accuracies: dict  # target name -> percent accuracy, or None when empty

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "n_sampled": self.n_sampled,
            "n_transferred": self.n_transferred,
            "source_name": self.source_name,
            "accuracies": self.accuracies,
        }


def run_transferability(
    source_victim,
    source_name: str,
    targets: list[tuple[str, object]],
    attack_lexicon: SynonymLexicon,
    test: Dataset,
    run: AttackRunConfig,
) -> TransferReport:
    """Craft adversarial examples against the source victim and replay the
    successful ones against every target, reporting accuracy per target."""
    _, results = run_attack_eval(
        source_victim, attack_lexicon, test, run, victim_name=source_name
    )
    transferred = [
        (r.adversarial_text, r.original_label) for r in results if r.success
    ]
    accuracies: dict[str, float | None] = {}
    for name, victim in targets:
        if not transferred:
            accuracies[name] = None
            continue
        correct = sum(
            int(np.argmax(victim.classify(t)) == y) for t, y in transferred
        )
        accuracies[name] = 100.0 * correct / len(transferred)
    return TransferReport(
        method=run.method,
        n_sampled=run.n_samples,
        n_transferred=len(transferred),
        source_name=source_name,
        accuracies=accuracies,
    )


SWEEP_AXES = {
    "n": "n_paraphrases",
    "n_paraphrases": "n_paraphrases",
    "alpha": "alpha",
    "r": "rounds",
    "rounds": "rounds",
    "k": "top_k",
    "top_k": "top_k",
}


def run_sweep(
    axis: str,
    values: list,
    train: Dataset,
    test: Dataset,
    pipeline: PipelineConfig,
    lexicon: SynonymLexicon,
    attack_lexicon: SynonymLexicon,
    methods: tuple[str, ...],
    n_samples: int = 100,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
    jobs: int = 1,
) -> list[dict]:
    """Accuracy-under-attack curve along one hyperparameter axis.

    The test subset is sampled once and held fixed across values.  Rounds and
    top-k sweeps re-wire a single trained model; alpha sweeps re-threshold it
    from the stored training scores; paraphrase-count sweeps retrain.
    """
    from .defense import _fit_pipeline  # shared trainer with score access

    axis_key = SWEEP_AXES.get(axis.lower())
    if axis_key is None:
        raise ValueError(f"unknown sweep axis {axis!r}")
    if not values:
        raise ValueError("values must be non-empty")
    subset_idx = sample_docs(test, n_samples, seed)
    subset = Dataset(tuple(test.docs[i] for i in subset_idx), test.num_classes)

    models: dict = {}
    if axis_key in ("rounds", "top_k"):
        base_cfg = pipeline.defense if axis_key == "rounds" else replace(pipeline.defense, rounds=5)
        base = train_defense(train, base_cfg, pipeline.classifier, pipeline.featurizer, lexicon)
        for v in values:
            models[v] = base.with_config(**{axis_key: int(v)})
    elif axis_key == "alpha":
        base, _, scores = _fit_pipeline(
            train, pipeline.defense, pipeline.classifier, pipeline.featurizer, lexicon
        )
        for v in values:
            thr = density.percentile_threshold(scores, float(v))
            models[v] = DefenseModel(
                base.classifier,
                base.gmm,
                thr,
                base.lexicon,
                replace(base.config, alpha=float(v)),
            )
    else:  # n_paraphrases: augmentation changes, so retrain per value
        for v in values:
            cfg = replace(pipeline.defense, n_paraphrases=int(v))
            models[v] = train_defense(train, cfg, pipeline.classifier, pipeline.featurizer, lexicon)

    rows: list[dict] = []
    for v in values:
        for method in methods:
            run = AttackRunConfig(method, len(subset), seed, budget, jobs)
            report, _ = run_attack_eval(
                DefendedVictim(models[v]),
                attack_lexicon,
                subset,
                run,
                victim_name="full_defense",
                extra_snapshot={"sweep_axis": axis_key, "sweep_value": v},
            )
            rows.append({"axis": axis_key, "value": v, "method": method, "aua": report.aua, "report": report})
    return rows


def format_report_table(reports: list[EvalReport]) -> str:
    """Aligned text table, one decimal place per metric."""
    headers = ["victim", "method", "CA", "AUA", "ASR", "AvgQ", "sampled", "attempted", "success"]
    rows = [
        [
            r.victim,
            r.method,
            f"{r.ca:.1f}",
            f"{r.aua:.1f}",
            f"{r.asr:.1f}",
            f"{r.avg_queries:.1f}",
            str(r.n_sampled),
            str(r.n_attempted),
            str(r.n_success),
        ]
        for r in reports
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(headers)]
    def fmt(row):
        return "  ".join(s.ljust(w) for s, w in zip(row, widths)).rstrip()
    return "\n".join([fmt(headers)] + [fmt(r) for r in rows])
