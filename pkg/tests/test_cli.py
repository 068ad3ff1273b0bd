import json

import numpy as np
import pytest

from evoshield.cli import main
from evoshield.corpus import write_dataset
from evoshield.defense import infer
from evoshield.modelio import ModelIOError, load_defense_model

from conftest import make_mini_corpus

LEXICON_TSV = (
    "good\tgreat,fine\n"
    "great\tgood,fine\n"
    "fine\tgood,great\n"
    "bad\tawful,poor\n"
    "awful\tbad,poor\n"
    "poor\tbad,awful\n"
    "movie\tfilm\n"
    "film\tmovie\n"
)

FAST_FLAGS = [
    "--dim", "256", "--hidden-size", "8", "--epochs", "3",
    "--n-paraphrases", "2", "--top-k", "2", "--rounds", "2",
    "--gmm-max-components", "3", "--seed", "0",
]


@pytest.fixture
def workdir(tmp_path):
    train = make_mini_corpus(n=40, seed=1)
    test = make_mini_corpus(n=16, seed=2)
    write_dataset(train, tmp_path / "train.jsonl")
    write_dataset(test, tmp_path / "test.jsonl")
    (tmp_path / "lexicon.tsv").write_text(LEXICON_TSV)
    return tmp_path


def train_model(workdir, extra=()):
    model_path = workdir / "model.json"
    rc = main(
        [
            "train",
            "--train-data", str(workdir / "train.jsonl"),
            "--lexicon", str(workdir / "lexicon.tsv"),
            "--out", str(model_path),
            *FAST_FLAGS,
            *extra,
        ]
    )
    assert rc == 0
    return model_path


class TestTrainEvalAttack:
    def test_round_trip(self, workdir, capsys):
        model_path = train_model(workdir)
        model = load_defense_model(model_path)
        assert model.config.n_paraphrases == 2
        assert model.featurizer.dim == 256

        rc = main(
            [
                "eval",
                "--model", str(model_path),
                "--test-data", str(workdir / "test.jsonl"),
                "--victim", "plain",
                "--out", str(workdir / "ca.json"),
            ]
        )
        assert rc == 0
        ca = json.loads((workdir / "ca.json").read_text())
        assert 0.0 <= ca["ca"] <= 100.0

        rc = main(
            [
                "attack",
                "--model", str(model_path),
                "--test-data", str(workdir / "test.jsonl"),
                "--method", "pwws",
                "--n-samples", "6",
                "--seed", "3",
                "--out", str(workdir / "report.json"),
                "--results-out", str(workdir / "results.jsonl"),
            ]
        )
        assert rc == 0
        report = json.loads((workdir / "report.json").read_text())
        lines = (workdir / "results.jsonl").read_text().splitlines()
        assert report["n_sampled"] == 6
        assert len(lines) == 6
        recomputed_queries = sum(json.loads(l)["queries"] for l in lines)
        assert report["avg_queries"] == recomputed_queries / 6

    def test_model_predictions_survive_round_trip(self, workdir):
        model_path = train_model(workdir)
        model = load_defense_model(model_path)
        out = infer(model, "good movie plot")
        again = infer(load_defense_model(model_path), "good movie plot")
        assert out.label == again.label
        assert np.array_equal(out.confidence, again.confidence)


class TestConfigFile:
    def test_flags_override_file(self, workdir):
        cfg = workdir / "run.cfg"
        cfg.write_text("alpha=40\np_sub=0.3\n# comment\n\n")
        model_path = train_model(workdir, extra=["--config", str(cfg), "--alpha", "60"])
        doc = json.loads(model_path.read_text())
        assert doc["defense_config"]["alpha"] == 60.0
        assert doc["defense_config"]["p_sub"] == 0.3

    def test_every_defense_field_and_budget_settable_from_file(self, workdir):
        cfg = workdir / "run.cfg"
        cfg.write_text("fresh_inference_randomness=true\nbudget=77\n")
        model_path = train_model(workdir, extra=["--config", str(cfg)])
        doc = json.loads(model_path.read_text())
        assert doc["defense_config"]["fresh_inference_randomness"] is True

        rc = main(
            [
                "ablate",
                "--train-data", str(workdir / "train.jsonl"),
                "--test-data", str(workdir / "test.jsonl"),
                "--lexicon", str(workdir / "lexicon.tsv"),
                "--config", str(cfg),
                "--methods", "pwws",
                "--n-samples", "4",
                "--out-dir", str(workdir / "abl"),
                *FAST_FLAGS,
            ]
        )
        assert rc == 0
        table = json.loads((workdir / "abl" / "ablation.json").read_text())
        assert table["original"]["pwws"]["config_snapshot"]["budget"] == 77

    def test_unknown_key_rejected(self, workdir, capsys):
        cfg = workdir / "run.cfg"
        cfg.write_text("nonsense=1\n")
        rc = main(
            [
                "train",
                "--train-data", str(workdir / "train.jsonl"),
                "--lexicon", str(workdir / "lexicon.tsv"),
                "--out", str(workdir / "m.json"),
                "--config", str(cfg),
            ]
        )
        assert rc == 1
        assert "unknown key" in capsys.readouterr().err


class TestErrors:
    def test_missing_file_is_diagnosed(self, tmp_path, capsys):
        rc = main(
            [
                "train",
                "--train-data", str(tmp_path / "absent.jsonl"),
                "--lexicon", str(tmp_path / "absent.tsv"),
                "--out", str(tmp_path / "m.json"),
            ]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_lexicon_hash_mismatch(self, workdir, capsys):
        model_path = train_model(workdir)
        (workdir / "lexicon.tsv").write_text(LEXICON_TSV + "extra\tword\n")
        with pytest.raises(ModelIOError, match="hash"):
            load_defense_model(model_path)


class TestBenchmarkCommand:
    def test_writes_three_files(self, tmp_path):
        rc = main(
            [
                "benchmark",
                "--out-dir", str(tmp_path / "bench"),
                "--train-size", "30",
                "--test-size", "10",
            ]
        )
        assert rc == 0
        for name in ("benchmark_train.jsonl", "benchmark_test.jsonl", "lexicon.tsv"):
            assert (tmp_path / "bench" / name).exists()


class TestExperimentCommands:
    def test_ablate_writes_reports(self, workdir):
        rc = main(
            [
                "ablate",
                "--train-data", str(workdir / "train.jsonl"),
                "--test-data", str(workdir / "test.jsonl"),
                "--lexicon", str(workdir / "lexicon.tsv"),
                "--methods", "pwws",
                "--n-samples", "5",
                "--budget", "150",
                "--out-dir", str(workdir / "ablation"),
                *FAST_FLAGS,
            ]
        )
        assert rc == 0
        table = json.loads((workdir / "ablation" / "ablation.json").read_text())
        assert set(table) == {
            "original", "augmented_training", "paraphrase_ensemble", "full_defense",
        }
        assert (workdir / "ablation" / "ablation.txt").exists()

    def test_transfer_and_sweep(self, workdir):
        rc = main(
            [
                "transfer",
                "--train-data", str(workdir / "train.jsonl"),
                "--test-data", str(workdir / "test.jsonl"),
                "--lexicon", str(workdir / "lexicon.tsv"),
                "--method", "pwws",
                "--n-samples", "5",
                "--budget", "150",
                "--out", str(workdir / "transfer.json"),
                *FAST_FLAGS,
            ]
        )
        assert rc == 0
        rep = json.loads((workdir / "transfer.json").read_text())
        assert set(rep["accuracies"]) == {"original", "full_defense"}

        rc = main(
            [
                "sweep",
                "--train-data", str(workdir / "train.jsonl"),
                "--test-data", str(workdir / "test.jsonl"),
                "--lexicon", str(workdir / "lexicon.tsv"),
                "--axis", "k",
                "--values", "1,2",
                "--methods", "pwws",
                "--n-samples", "5",
                "--budget", "150",
                "--out", str(workdir / "sweep.json"),
                *FAST_FLAGS,
            ]
        )
        assert rc == 0
        rows = json.loads((workdir / "sweep.json").read_text())
        assert len(rows) == 2
        assert {r["axis"] for r in rows} == {"top_k"}
