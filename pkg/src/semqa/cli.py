"""Command-line entry point wiring the modules into reproducible pipelines."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .annotate import load_annotations
from .checks import MICRO_TOLERANCE, micro_gradcheck
from .config import ConfigError, load_run_config
from .corpus import DATASET_FORMAT, InterchangeError, load_dataset
from .evaluation import format_report, load_report
from .pipeline import (
    SPLITS,
    eval_run,
    format_ablation,
    load_corpus,
    oracle_splits,
    rebuild_bundle,
    run_ablation,
    run_dir_for,
    train_run,
    write_ablation,
    write_corpus,
)
from .supervision import format_oracle_report
from .synth import SyntheticSpec, generate_synthetic


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(
        seed=args.seed,
        train_docs=args.train_docs,
        dev_docs=args.dev_docs,
        test_docs=args.test_docs,
        sentences_per_doc=(args.min_sentences, args.max_sentences),
        questions_per_doc=(args.min_questions, args.max_questions),
        vocabulary_size=args.vocab,
    )
    corpus = generate_synthetic(spec)
    written = write_corpus(corpus, spec, args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def _sniff_format(path) -> str:
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    try:
        header = json.loads(first)
    except json.JSONDecodeError:
        return "unknown"
    return header.get("format", "unknown")


def _cmd_validate(args) -> int:
    dataset_paths = []
    annotation_paths = []
    for path in args.paths:
        fmt = _sniff_format(path)
        if fmt == DATASET_FORMAT:
            dataset_paths.append(path)
        else:
            annotation_paths.append(path)
    documents = {}
    for path in dataset_paths:
        dataset = load_dataset(path)
        documents.update(dataset.documents)
        print(f"{path}: OK ({len(dataset.documents)} documents, {len(dataset.examples)} examples)")
    for path in annotation_paths:
        bundles = load_annotations(path, documents if documents else None)
        print(f"{path}: OK ({len(bundles)} annotated documents)")
    return 0


def _cmd_oracle(args) -> int:
    splits = args.splits.split(",") if args.splits else list(SPLITS)
    reports = oracle_splits(args.data, args.out, splits)
    print(format_oracle_report(reports), end="")
    return 0


def _cmd_train(args) -> int:
    cfg = load_run_config(args.config, seed_override=args.seed,
                          out_override=args.out, preset_override=args.preset)
    bundle, manifest, run_dir = train_run(cfg)
    log = manifest["train_log"]
    print(f"run dir: {run_dir}")
    print(f"stopped: {log['stop_reason']} after {len(log['epochs'])} epochs; "
          f"best dev rouge_l {100 * log['best_dev_rouge_l']:.2f} at epoch {log['best_epoch']}")
    return 0


def _cmd_eval(args) -> int:
    cfg = load_run_config(args.config, seed_override=args.seed, preset_override=args.preset)
    bundle = rebuild_bundle(cfg, args.checkpoint)
    out_dir = args.out or run_dir_for(cfg)
    report = eval_run(cfg, bundle, args.split, out_dir, baseline_path=args.baseline)
    baseline = load_report(args.baseline) if args.baseline else None
    print(format_report(report, baseline), end="")
    return 0


def _cmd_gradcheck(args) -> int:
    if args.scale != "micro":
        print(f"unknown scale {args.scale!r}; only 'micro' is supported", file=sys.stderr)
        return 2
    max_rel, n_elements = micro_gradcheck()
    print(f"checked {n_elements} parameter elements: max relative error {max_rel:.3e}")
    if max_rel >= MICRO_TOLERANCE:
        print(f"FAIL: exceeds tolerance {MICRO_TOLERANCE:.0e}", file=sys.stderr)
        return 1
    print(f"PASS: below tolerance {MICRO_TOLERANCE:.0e}")
    return 0


def _cmd_ablate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as f:
        config_raw = json.load(f)
    if args.out:
        config_raw.setdefault("paths", {})["out_dir"] = args.out
    presets = [p.strip() for p in args.presets.split(",") if p.strip()]
    seeds = [int(s) for s in args.seeds.split(",")]
    table = run_ablation(config_raw, presets, seeds, threads=args.threads)
    out_dir = args.out or config_raw["paths"]["out_dir"]
    write_ablation(table, out_dir)
    print(format_ablation(table), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semqa",
                                     description="annotation-aware span-prediction QA toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic annotated corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--train-docs", type=int, default=30)
    p.add_argument("--dev-docs", type=int, default=10)
    p.add_argument("--test-docs", type=int, default=10)
    p.add_argument("--min-sentences", type=int, default=10)
    p.add_argument("--max-sentences", type=int, default=16)
    p.add_argument("--min-questions", type=int, default=2)
    p.add_argument("--max-questions", type=int, default=3)
    p.add_argument("--vocab", type=int, default=88)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("validate", help="validate dataset/annotation interchange files")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("oracle", help="fill oracle spans and report quality")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--splits", default="")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("train", help="train a model from a run config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--preset", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--out", default=None)
    p.add_argument("--baseline", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--preset", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gradcheck", help="end-to-end gradient check")
    p.add_argument("--scale", default="micro")
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("ablate", help="train/evaluate head presets over a seed set")
    p.add_argument("--config", required=True)
    p.add_argument("--presets", required=True)
    p.add_argument("--seeds", default="1,2,3")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InterchangeError, ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
