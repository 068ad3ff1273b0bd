"""Command-line driver.

Subcommands: benchmark, train, eval, attack, ablate, transfer, sweep.
Hyperparameters may come from a flat key=value config file; command-line
flags override file values.  All report files are deterministic for fixed
arguments and seeds.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from .attacks import DEFAULT_BUDGET
from .benchmark import BenchmarkConfig, write_benchmark
from .classifier import TrainConfig
from .corpus import Dataset, load_dataset
from .defense import DefenseConfig, train_defense
from .featurizer import FeaturizerConfig
from .harness import (
    AttackRunConfig,
    DefendedVictim,
    PipelineConfig,
    PlainVictim,
    evaluate_clean,
    format_report_table,
    run_ablation,
    run_attack_eval,
    run_sweep,
    run_transferability,
    train_original,
)
from .modelio import load_defense_model, save_defense_model
from .paraphraser import load_lexicon

def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(raw)


_CONFIG_TYPES = {
    "n_paraphrases": int,
    "top_k": int,
    "rounds": int,
    "alpha": float,
    "p_sub": float,
    "seed": int,
    "gmm_max_components": int,
    "fresh_inference_randomness": _parse_bool,
    "dim": int,
    "ngram_orders": str,
    "hidden_size": int,
    "epochs": int,
    "learning_rate": float,
    "momentum": float,
    "batch_size": int,
    "budget": int,
}


def _read_config_file(path) -> dict:
    values: dict = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path} line {lineno}: expected key=value")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_TYPES:
                raise ValueError(f"{path} line {lineno}: unknown key {key!r}")
            try:
                values[key] = _CONFIG_TYPES[key](raw.strip())
            except ValueError:
                raise ValueError(f"{path} line {lineno}: bad value for {key}") from None
    return values


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--n-paraphrases", type=int)
    p.add_argument("--top-k", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--p-sub", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--gmm-max-components", type=int)
    p.add_argument(
        "--fresh-inference-randomness", action=argparse.BooleanOptionalAction, default=None
    )
    p.add_argument("--dim", type=int)
    p.add_argument("--ngram-orders", help="comma-separated, e.g. 1,2")
    p.add_argument("--hidden-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--batch-size", type=int)


def _resolve_config(args) -> dict:
    values = _read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in _CONFIG_TYPES:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def _resolve_budget(args, values: dict) -> int:
    if getattr(args, "budget", None) is not None:
        return args.budget
    return values.get("budget", DEFAULT_BUDGET)


def _pipeline_from(values: dict) -> PipelineConfig:
    seed = values.get("seed", 0)
    dcfg_fields = {f.name for f in fields(DefenseConfig)}
    tcfg_fields = {f.name for f in fields(TrainConfig)}
    dcfg = {k: v for k, v in values.items() if k in dcfg_fields}
    tcfg = {k: v for k, v in values.items() if k in tcfg_fields}
    dcfg.setdefault("seed", seed)
    tcfg.setdefault("seed", seed)
    fkw = {}
    if "dim" in values:
        fkw["dim"] = values["dim"]
    if "ngram_orders" in values:
        fkw["ngram_orders"] = tuple(int(s) for s in str(values["ngram_orders"]).split(","))
    return PipelineConfig(
        defense=DefenseConfig(**dcfg),
        classifier=TrainConfig(**tcfg),
        featurizer=FeaturizerConfig(**fkw),
    )


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, sort_keys=True, indent=2)
        f.write("\n")


def _load_data(path) -> Dataset:
    fmt = "tsv" if str(path).endswith(".tsv") else "jsonl"
    return load_dataset(path, format=fmt)


def _cmd_benchmark(args) -> int:
    cfg = BenchmarkConfig(seed=args.seed, train_size=args.train_size, test_size=args.test_size)
    paths = write_benchmark(args.out_dir, cfg)
    for name, p in sorted(paths.items()):
        print(f"{name}: {p}")
    return 0


def _cmd_train(args) -> int:
    values = _resolve_config(args)
    pipeline = _pipeline_from(values)
    train = _load_data(args.train_data)
    lexicon = load_lexicon(args.lexicon)
    model = train_defense(
        train, pipeline.defense, pipeline.classifier, pipeline.featurizer, lexicon
    )
    save_defense_model(model, args.out, args.lexicon)
    print(f"model written to {args.out}")
    print(
        f"gmm components: {model.gmm.n_components}  "
        f"threshold: {model.threshold.value:.4f} (alpha={model.threshold.alpha:g})"
    )
    return 0


def _victim_from_model(model, kind: str):
    return DefendedVictim(model) if kind == "defended" else PlainVictim(model.classifier)


def _cmd_eval(args) -> int:
    model = load_defense_model(args.model, args.lexicon)
    test = _load_data(args.test_data)
    victim = _victim_from_model(model, args.victim)
    ca = evaluate_clean(victim.classify, test)
    print(f"CA ({args.victim}): {ca:.1f}")
    if args.out:
        _write_json({"victim": args.victim, "ca": ca, "n_test": len(test)}, args.out)
    return 0


def _cmd_attack(args) -> int:
    model = load_defense_model(args.model, args.lexicon)
    test = _load_data(args.test_data)
    victim = _victim_from_model(model, args.victim)
    attack_lexicon = (
        load_lexicon(args.attack_lexicon) if args.attack_lexicon else model.lexicon
    )
    run = AttackRunConfig(args.method, args.n_samples, args.seed, args.budget, args.jobs)
    report, results = run_attack_eval(
        victim, attack_lexicon, test, run, victim_name=args.victim
    )
    print(format_report_table([report]))
    if args.out:
        _write_json(report.to_json_dict(), args.out)
    if args.results_out:
        with open(args.results_out, "w", encoding="utf-8") as f:
            for r in results:
                f.write(json.dumps(r.to_json_dict(), sort_keys=True))
                f.write("\n")
    return 0


def _cmd_ablate(args) -> int:
    values = _resolve_config(args)
    pipeline = _pipeline_from(values)
    train = _load_data(args.train_data)
    test = _load_data(args.test_data)
    lexicon = load_lexicon(args.lexicon)
    attack_lexicon = load_lexicon(args.attack_lexicon) if args.attack_lexicon else lexicon
    methods = tuple(args.methods.split(","))
    table = run_ablation(
        train, test, pipeline, lexicon, attack_lexicon,
        methods, args.n_samples, args.seed, _resolve_budget(args, values), args.jobs,
    )
    reports = [table[v][m] for v in table for m in table[v]]
    text = format_report_table(reports)
    print(text)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(
            {v: {m: r.to_json_dict() for m, r in row.items()} for v, row in table.items()},
            out / "ablation.json",
        )
        (out / "ablation.txt").write_text(text + "\n", encoding="utf-8")
    return 0


def _cmd_transfer(args) -> int:
    values = _resolve_config(args)
    pipeline = _pipeline_from(values)
    train = _load_data(args.train_data)
    test = _load_data(args.test_data)
    lexicon = load_lexicon(args.lexicon)
    attack_lexicon = load_lexicon(args.attack_lexicon) if args.attack_lexicon else lexicon
    original = train_original(train, pipeline)
    defense = train_defense(
        train, pipeline.defense, pipeline.classifier, pipeline.featurizer, lexicon
    )
    run = AttackRunConfig(
        args.method, args.n_samples, args.seed, _resolve_budget(args, values), args.jobs
    )
    report = run_transferability(
        PlainVictim(original),
        "original",
        [("original", PlainVictim(original)), ("full_defense", DefendedVictim(defense))],
        attack_lexicon,
        test,
        run,
    )
    print(f"transferred {report.n_transferred} adversarial examples from {report.source_name}")
    for name, acc in report.accuracies.items():
        print(f"  {name}: {'n/a' if acc is None else f'{acc:.1f}'}")
    if args.out:
        _write_json(report.to_json_dict(), args.out)
    return 0


def _cmd_sweep(args) -> int:
    values_cfg = _resolve_config(args)
    pipeline = _pipeline_from(values_cfg)
    train = _load_data(args.train_data)
    test = _load_data(args.test_data)
    lexicon = load_lexicon(args.lexicon)
    attack_lexicon = load_lexicon(args.attack_lexicon) if args.attack_lexicon else lexicon
    methods = tuple(args.methods.split(","))
    sweep_values = [float(s) for s in args.values.split(",")]
    rows = run_sweep(
        args.axis, sweep_values, train, test, pipeline, lexicon, attack_lexicon,
        methods, args.n_samples, args.seed, _resolve_budget(args, values_cfg), args.jobs,
    )
    for row in rows:
        print(f"{row['axis']}={row['value']:g}  {row['method']}: AUA {row['aua']:.1f}")
    if args.out:
        _write_json(
            [
                {
                    "axis": r["axis"],
                    "value": r["value"],
                    "method": r["method"],
                    "aua": r["aua"],
                    "report": r["report"].to_json_dict(),
                }
                for r in rows
            ],
            args.out,
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evoshield",
        description="Paraphrase-evolution defense and word-substitution attack harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("benchmark", help="generate the bundled synthetic benchmark")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--train-size", type=int, default=2000)
    p.add_argument("--test-size", type=int, default=500)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("train", help="train a defense model")
    p.add_argument("--train-data", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="clean accuracy of a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--test-data", required=True)
    p.add_argument("--victim", choices=("defended", "plain"), default="defended")
    p.add_argument("--lexicon", help="override the lexicon path stored in the model")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("attack", help="attack a trained model and report metrics")
    p.add_argument("--model", required=True)
    p.add_argument("--test-data", required=True)
    p.add_argument("--method", choices=("pwws", "delimp"), required=True)
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--victim", choices=("defended", "plain"), default="defended")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--lexicon", help="override the lexicon path stored in the model")
    p.add_argument("--attack-lexicon", help="attacker substitution lexicon (defaults to the model's)")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--results-out", help="per-sample attack results JSONL path")
    p.set_defaults(func=_cmd_attack)

    for name, fn, extra in (
        ("ablate", _cmd_ablate, "out_dir"),
        ("transfer", _cmd_transfer, "out"),
        ("sweep", _cmd_sweep, "out"),
    ):
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--train-data", required=True)
        p.add_argument("--test-data", required=True)
        p.add_argument("--lexicon", required=True)
        p.add_argument("--attack-lexicon")
        p.add_argument("--n-samples", type=int, default=100)
        p.add_argument("--budget", type=int)
        p.add_argument("--jobs", type=int, default=1)
        if name == "transfer":
            p.add_argument("--method", choices=("pwws", "delimp"), required=True)
        else:
            p.add_argument("--methods", default="pwws,delimp", help="comma-separated")
        if name == "sweep":
            p.add_argument("--axis", required=True, help="one of n, alpha, r, k (or long names)")
            p.add_argument("--values", required=True, help="comma-separated values")
        if extra == "out_dir":
            p.add_argument("--out-dir")
        else:
            p.add_argument("--out")
        _add_config_flags(p)
        p.set_defaults(func=fn)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
