"""Command-line interface: train, eval, explain, faithfulness, ablate.

Every subcommand accepts --config FILE (JSON, keys named like the flags
with underscores); explicit flags override the config file, which
overrides the built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .datasets import load_dataset, split_train_val
from .embedding import (
    HttpEmbeddingClient,
    ReferenceEmbedder,
    ReferenceEmbedderConfig,
    cache_load,
)
from .errors import PrototextError
from .faithfulness import bootstrap_ci, faithfulness_eval, prototype_ablation_eval
from .losses import LossConfig
from .model import PrototypeModel
from .rationale import RationaleConfig, explain_sample
from .report import explanation_to_dict, render_report
from .similarity import L2Mode, SimilarityKind
from .training import TrainConfig, evaluate, load_model, save_history, save_model, train

DEFAULT_SEEDS = [11, 22, 33, 44, 55]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


_PROVIDER_DEFAULTS = {
    "provider": "reference",
    "embed_dim": 64,
    "embed_seed": 0,
    "use_bigrams": True,
    "cache_path": None,
    "endpoint": None,
    "timeout": 30.0,
}

_TRAIN_DEFAULTS = {
    "data_format": None,
    "val_data": None,
    "val_fraction": 0.1,
    "out_dir": "runs",
    "seed": 0,
    "runs": 1,
    "save_projections": False,
    "sim_kind": "weighted_cosine",
    "l2_mode": "corrected",
    "epochs": 100,
    "batch_size": 128,
    "lr": 0.005,
    "weight_decay": 0.0005,
    "lr_factor": 0.5,
    "lr_patience_epochs": 30,
    "projection_every": 5,
    "projection_start_fraction": 0.5,
    "final_phase_epochs": 3,
    "prototypes_per_class": 10,
    "head_mode": "prototype",
    "lambda_cluster": 0.5,
    "lambda_separation": 0.1,
    "lambda_distribution": 0.1,
    "lambda_diversity": 0.1,
    "lambda_l1": 1e-4,
    "separation_margin": 1.0,
    "diversity_threshold": 0.6,
    **_PROVIDER_DEFAULTS,
}

_EVAL_DEFAULTS = {"data_format": None, "folds": 1000, "seed": 0, "out": None, **_PROVIDER_DEFAULTS}

_EXPLAIN_DEFAULTS = {
    "format": "ansi",
    "out": None,
    "out_json": None,
    "n_removals": 10,
    "coverage": 0.75,
    "top_prototypes": 3,
    **_PROVIDER_DEFAULTS,
}

_FAITHFULNESS_DEFAULTS = {
    "data_format": None,
    "n_removals": 10,
    "coverage": 0.75,
    "top_prototypes": 3,
    "folds": 1000,
    "seed": 0,
    "out": None,
    **_PROVIDER_DEFAULTS,
}

_ABLATE_DEFAULTS = {"data_format": None, "k": "0", "out": None, **_PROVIDER_DEFAULTS}


def _add_provider_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider", choices=["reference", "cache", "http"])
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--embed-seed", type=int)
    p.add_argument("--no-bigrams", dest="use_bigrams", action="store_false", default=None)
    p.add_argument("--cache-path")
    p.add_argument("--endpoint")
    p.add_argument("--timeout", type=float)


def _build_parser() -> _Parser:
    parser = _Parser(prog="prototext", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a model and write checkpoint + history")
    t.add_argument("--data", required=True)
    t.add_argument("--config")
    t.add_argument("--data-format", choices=["csv", "jsonl"])
    t.add_argument("--val-data")
    t.add_argument("--val-fraction", type=float)
    t.add_argument("--out-dir")
    t.add_argument("--seed", type=int)
    t.add_argument("--runs", type=int)
    t.add_argument("--save-projections", action="store_true", default=None)
    t.add_argument("--sim-kind", choices=[k.value for k in SimilarityKind])
    t.add_argument("--l2-mode", choices=[m.value for m in L2Mode])
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--weight-decay", type=float)
    t.add_argument("--lr-factor", type=float)
    t.add_argument("--lr-patience-epochs", type=int)
    t.add_argument("--projection-every", type=int)
    t.add_argument("--projection-start-fraction", type=float)
    t.add_argument("--final-phase-epochs", type=int)
    t.add_argument("--prototypes-per-class", type=int)
    t.add_argument("--head-mode", choices=["prototype", "fc_only"])
    t.add_argument("--lambda-cluster", type=float)
    t.add_argument("--lambda-separation", type=float)
    t.add_argument("--lambda-distribution", type=float)
    t.add_argument("--lambda-diversity", type=float)
    t.add_argument("--lambda-l1", type=float)
    t.add_argument("--separation-margin", type=float)
    t.add_argument("--diversity-threshold", type=float)
    _add_provider_flags(t)

    e = sub.add_parser("eval", help="accuracy with a bootstrap confidence interval")
    e.add_argument("--data", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--config")
    e.add_argument("--data-format", choices=["csv", "jsonl"])
    e.add_argument("--folds", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--out")
    _add_provider_flags(e)

    x = sub.add_parser("explain", help="word-level rationales for input sentences")
    x.add_argument("--model", required=True)
    x.add_argument("--input", required=True, help="file of sentences, one per line, or -")
    x.add_argument("--config")
    x.add_argument("--format", choices=["ansi", "html"])
    x.add_argument("--out")
    x.add_argument("--out-json")
    x.add_argument("--n-removals", type=int)
    x.add_argument("--coverage", type=float)
    x.add_argument("--top-prototypes", type=int)
    _add_provider_flags(x)

    f = sub.add_parser("faithfulness", help="comprehensiveness/sufficiency report")
    f.add_argument("--data", required=True)
    f.add_argument("--model", required=True)
    f.add_argument("--config")
    f.add_argument("--data-format", choices=["csv", "jsonl"])
    f.add_argument("--n-removals", type=int)
    f.add_argument("--coverage", type=float)
    f.add_argument("--top-prototypes", type=int)
    f.add_argument("--folds", type=int)
    f.add_argument("--seed", type=int)
    f.add_argument("--out")
    _add_provider_flags(f)

    a = sub.add_parser("ablate", help="accuracy with top-k prototypes removed")
    a.add_argument("--data", required=True)
    a.add_argument("--model", required=True)
    a.add_argument("--config")
    a.add_argument("--data-format", choices=["csv", "jsonl"])
    a.add_argument("--k", help="comma-separated list of k values")
    a.add_argument("--out")
    _add_provider_flags(a)

    return parser


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """flag > config file > default, per field."""
    opts = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                file_opts = json.load(fh)
        except OSError as exc:
            raise PrototextError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
        unknown = set(file_opts) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        opts.update(file_opts)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def _make_provider(opts: dict):
    kind = opts["provider"]
    if kind == "reference":
        return ReferenceEmbedder(
            ReferenceEmbedderConfig(
                dim=opts["embed_dim"], seed=opts["embed_seed"], use_bigrams=opts["use_bigrams"]
            )
        )
    if kind == "cache":
        if not opts["cache_path"]:
            raise UsageError("--cache-path is required with --provider cache")
        return cache_load(opts["cache_path"])
    if not opts["endpoint"]:
        raise UsageError("--endpoint is required with --provider http")
    return HttpEmbeddingClient(opts["endpoint"], timeout=opts["timeout"])


def _train_config(opts: dict, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=opts["epochs"],
        batch_size=opts["batch_size"],
        lr=opts["lr"],
        weight_decay=opts["weight_decay"],
        lr_factor=opts["lr_factor"],
        lr_patience_epochs=opts["lr_patience_epochs"],
        projection_every=opts["projection_every"],
        projection_start_fraction=opts["projection_start_fraction"],
        final_phase_epochs=opts["final_phase_epochs"],
        prototypes_per_class=opts["prototypes_per_class"],
        seed=seed,
        sim_kind=SimilarityKind(opts["sim_kind"]),
        l2_mode=L2Mode(opts["l2_mode"]),
        head_mode=opts["head_mode"],
        loss=LossConfig(
            lambda_cluster=opts["lambda_cluster"],
            lambda_separation=opts["lambda_separation"],
            lambda_distribution=opts["lambda_distribution"],
            lambda_diversity=opts["lambda_diversity"],
            lambda_l1=opts["lambda_l1"],
            separation_margin=opts["separation_margin"],
            diversity_threshold=opts["diversity_threshold"],
        ),
    )


def _cmd_train(args) -> int:
    opts = _resolve(args, _TRAIN_DEFAULTS)
    provider = _make_provider(opts)
    records = load_dataset(args.data, opts["data_format"])
    if opts["val_data"]:
        train_records = records
        val_records = load_dataset(opts["val_data"], opts["data_format"])
    else:
        train_records, val_records = split_train_val(records, opts["val_fraction"], opts["seed"])
    train_pairs = [r.pair() for r in train_records]
    val_pairs = [r.pair() for r in val_records]

    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    runs = opts["runs"]
    if runs < 1:
        raise UsageError("--runs must be >= 1")
    if runs == 1:
        seeds = [opts["seed"]]
    else:
        seeds = (DEFAULT_SEEDS + [DEFAULT_SEEDS[-1] + i for i in range(1, runs)])[:runs]

    accuracies = []
    for run_seed in seeds:
        tag = "" if runs == 1 else f".seed{run_seed}"
        ckpt = out_dir / f"checkpoint{tag}.json"
        config = _train_config(opts, run_seed)
        model, history = train(
            train_pairs,
            val_pairs,
            provider,
            config,
            checkpoint_path=str(ckpt),
            save_projection_checkpoints=opts["save_projections"],
        )
        if not isinstance(model, PrototypeModel):
            save_model(model, str(ckpt))
        save_history(history, str(out_dir / f"history{tag}.jsonl"))
        val_acc = history[-1].val_accuracy
        accuracies.append(val_acc)
        print(f"seed {run_seed}: final val accuracy {val_acc:.4f}  checkpoint {ckpt}")

    metrics = {
        "val_accuracy": accuracies[0] if runs == 1 else None,
        "val_accuracies": accuracies,
        "seeds": seeds,
    }
    if runs > 1:
        mean = sum(accuracies) / runs
        stderr = (
            math.sqrt(sum((a - mean) ** 2 for a in accuracies) / (runs - 1)) / math.sqrt(runs)
        )
        metrics["val_accuracy_mean"] = mean
        metrics["val_accuracy_stderr"] = stderr
        print(f"mean val accuracy over {runs} runs: {mean:.4f} +/- {stderr:.4f} (stderr)")
    with open(out_dir / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2)
    return 0


def _cmd_eval(args) -> int:
    opts = _resolve(args, _EVAL_DEFAULTS)
    provider = _make_provider(opts)
    model = load_model(args.model)
    records = load_dataset(args.data, opts["data_format"])
    accuracy, per_sample = evaluate(model, provider, [r.pair() for r in records])
    correct = [1.0 if r["correct"] else 0.0 for r in per_sample]
    mean, low, high = bootstrap_ci(correct, folds=opts["folds"], seed=opts["seed"])
    print(f"accuracy: {accuracy:.4f}  95% CI ({low:.4f}, {high:.4f})  n={len(per_sample)}")
    if opts["out"]:
        with open(opts["out"], "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "accuracy": accuracy,
                    "ci_low": low,
                    "ci_high": high,
                    "folds": opts["folds"],
                    "seed": opts["seed"],
                    "n": len(per_sample),
                },
                fh,
                indent=2,
            )
    return 0


def _read_sentences(source: str) -> list[str]:
    if source == "-":
        lines = sys.stdin.read().splitlines()
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise PrototextError(f"cannot read input: {exc}") from exc
    sentences = [line.strip() for line in lines if line.strip()]
    if not sentences:
        raise PrototextError("no sentences in input")
    return sentences


def _cmd_explain(args) -> int:
    opts = _resolve(args, _EXPLAIN_DEFAULTS)
    provider = _make_provider(opts)
    model = load_model(args.model)
    if not isinstance(model, PrototypeModel):
        raise PrototextError("explain requires a prototype checkpoint, not fc_only")
    config = RationaleConfig(
        n_removals=opts["n_removals"],
        coverage=opts["coverage"],
        top_prototypes=opts["top_prototypes"],
    )
    sentences = _read_sentences(args.input)
    explanations = [explain_sample(s, model, provider, config) for s in sentences]
    rendered = render_report(explanations, opts["format"])
    if opts["out"]:
        with open(opts["out"], "w", encoding="utf-8") as fh:
            fh.write(rendered)
    else:
        print(rendered)
    if opts["out_json"]:
        with open(opts["out_json"], "w", encoding="utf-8") as fh:
            for exp in explanations:
                fh.write(json.dumps(explanation_to_dict(exp)) + "\n")
    return 0


def _cmd_faithfulness(args) -> int:
    opts = _resolve(args, _FAITHFULNESS_DEFAULTS)
    provider = _make_provider(opts)
    model = load_model(args.model)
    if not isinstance(model, PrototypeModel):
        raise PrototextError("faithfulness requires a prototype checkpoint")
    records = load_dataset(args.data, opts["data_format"])
    report = faithfulness_eval(
        model,
        provider,
        [r.pair() for r in records],
        RationaleConfig(
            n_removals=opts["n_removals"],
            coverage=opts["coverage"],
            top_prototypes=opts["top_prototypes"],
        ),
        folds=opts["folds"],
        seed=opts["seed"],
    )
    print(report.to_text_table())
    if opts["out"]:
        with open(opts["out"], "w", encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2)
    return 0


def _cmd_ablate(args) -> int:
    opts = _resolve(args, _ABLATE_DEFAULTS)
    provider = _make_provider(opts)
    model = load_model(args.model)
    if not isinstance(model, PrototypeModel):
        raise PrototextError("ablate requires a prototype checkpoint")
    records = load_dataset(args.data, opts["data_format"])
    try:
        ks = [int(part) for part in str(opts["k"]).split(",") if part.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"--k must be a comma-separated list of integers: {exc}") from exc
    if not ks:
        raise UsageError("--k needs at least one value")
    pairs = [r.pair() for r in records]
    results = {}
    for k in ks:
        acc = prototype_ablation_eval(model, provider, pairs, k)
        results[k] = acc
        print(f"k={k}: accuracy {acc:.4f}")
    if opts["out"]:
        with open(opts["out"], "w", encoding="utf-8") as fh:
            json.dump({"accuracy_by_k": {str(k): v for k, v in results.items()}}, fh, indent=2)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "explain": _cmd_explain,
    "faithfulness": _cmd_faithfulness,
    "ablate": _cmd_ablate,
}


def run_command(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PrototextError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
