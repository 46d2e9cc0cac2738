"""End-to-end experiment pipelines: synth, oracle, train, eval, ablate.

Every artifact under a run directory is machine-readable and byte-identical
across reruns with the same config and seed (no timestamps in manifests).
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from . import numerics as nm
from .annotate import load_annotations, write_annotations
from .config import RunConfig
from .corpus import Dataset, load_dataset, write_dataset
from .evaluation import EvalReport, delta_report, evaluate, load_report, write_report
from .model import ModelBundle, TrainConfig, build_model, load_word_vectors, predict, train
from .supervision import format_oracle_report, oracle_dataset
from .synth import SyntheticCorpus, SyntheticSpec, generate_synthetic

SPLITS = ("train", "dev", "test")


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def write_corpus(corpus: SyntheticCorpus, spec: SyntheticSpec, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for split, dataset in corpus.datasets.items():
        path = out / f"{split}.jsonl"
        write_dataset(dataset, path)
        written.append(path)
    apath = out / "annotations.jsonl"
    write_annotations(corpus.annotations, apath)
    written.append(apath)
    spath = out / "synth-spec.json"
    with open(spath, "w", encoding="utf-8") as f:
        f.write(_dumps(spec.to_dict()) + "\n")
    written.append(spath)
    return written


def load_corpus(data_dir, annotations_path, splits=SPLITS, validate: bool = True):
    """Datasets for the requested splits plus annotations, cross-validated.

    Annotation records for documents outside the requested splits are kept
    but not validated here.
    """
    datasets: dict[str, Dataset] = {}
    documents = {}
    for split in splits:
        path = Path(data_dir) / f"{split}.jsonl"
        datasets[split] = load_dataset(path)
        documents.update(datasets[split].documents)
    annotations = load_annotations(
        annotations_path, documents if validate else None, require_known=False)
    return datasets, annotations


def oracle_splits(data_dir, out_dir, splits=SPLITS) -> list[dict]:
    """Fill oracle spans for each split file and write the quality report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for split in splits:
        dataset = load_dataset(Path(data_dir) / f"{split}.jsonl")
        filled, report = oracle_dataset(dataset)
        write_dataset(filled, out / f"{split}.jsonl")
        reports.append(report)
    with open(out / "oracle-report.json", "w", encoding="utf-8") as f:
        f.write(_dumps(reports) + "\n")
    with open(out / "oracle-report.txt", "w", encoding="utf-8") as f:
        f.write(format_oracle_report(reports))
    return reports


def run_dir_for(cfg: RunConfig) -> Path:
    return Path(cfg.out_dir) / f"{cfg.semantic_hash()}-s{cfg.seed}"


def _build_from_config(cfg: RunConfig, datasets, annotations) -> ModelBundle:
    vectors = load_word_vectors(cfg.word_vectors) if cfg.word_vectors else None
    return build_model(cfg.model, datasets["train"], annotations, seed=cfg.seed,
                       word_vectors=vectors)


def train_run(cfg: RunConfig) -> tuple[ModelBundle, dict, Path]:
    """Train per the config; write checkpoint and manifest into the run directory."""
    nm.set_default_dtype(cfg.precision)
    datasets, annotations = load_corpus(cfg.data_dir, cfg.annotations, splits=("train", "dev"))
    bundle = _build_from_config(cfg, datasets, annotations)
    result = train(bundle, datasets["train"], datasets["dev"], cfg.train)

    run_dir = run_dir_for(cfg)
    run_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = run_dir / "params"
    nm.save_checkpoint(bundle.eval_params(), checkpoint)
    manifest = {
        "config": cfg.resolved,
        "config_hash": cfg.semantic_hash(),
        "seed": cfg.seed,
        "train_log": result.log,
        "checkpoint": checkpoint.name,
    }
    with open(run_dir / "manifest.json", "w", encoding="utf-8") as f:
        f.write(_dumps(manifest) + "\n")
    return bundle, manifest, run_dir


def rebuild_bundle(cfg: RunConfig, checkpoint_prefix) -> ModelBundle:
    """Reconstruct the model deterministically and load checkpointed weights."""
    nm.set_default_dtype(cfg.precision)
    datasets, annotations = load_corpus(cfg.data_dir, cfg.annotations, splits=("train",))
    bundle = _build_from_config(cfg, datasets, annotations)
    nm.load_checkpoint(bundle.eval_params(), checkpoint_prefix)
    return bundle


def predictions_for(bundle: ModelBundle, dataset: Dataset) -> dict[str, tuple[str, ...]]:
    return {ex.id: predict(bundle, ex).answer_tokens for ex in dataset.examples}


def eval_run(cfg: RunConfig, bundle: ModelBundle, split: str, out_dir,
             baseline_path=None, config_name: str | None = None) -> EvalReport:
    """Predict a split, write predictions and the (optionally delta'd) report."""
    datasets, annotations = load_corpus(cfg.data_dir, cfg.annotations, splits=(split,))
    dataset = datasets[split]
    name = config_name or (cfg.model.stack.preset_name or "run")
    preds = {}
    rows = []
    for ex in dataset.examples:
        p = predict(bundle, ex)
        preds[ex.id] = p.answer_tokens
        rows.append({"id": p.example_id, "span": list(p.span), "tokens": list(p.answer_tokens)})
    report = evaluate(preds, dataset, name)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"predictions-{split}.jsonl", "w", encoding="utf-8") as f:
        for row in rows:
            f.write(_dumps(row) + "\n")
    baseline = load_report(baseline_path) if baseline_path else None
    write_report(report, out / f"report-{split}.json", out / f"report-{split}.txt", baseline)
    if baseline is not None:
        with open(out / f"delta-{split}.json", "w", encoding="utf-8") as f:
            f.write(_dumps(delta_report(report, baseline)) + "\n")
    return report


def ablation_row(config_raw: dict, preset: str, seed: int, split: str = "test") -> dict:
    """One train+eval run for a preset/seed pair; returns the comparison row."""
    from .config import run_config_from_dict

    cfg = run_config_from_dict(config_raw, seed_override=seed, preset_override=preset)
    bundle, manifest, run_dir = train_run(cfg)
    report = eval_run(cfg, bundle, split, run_dir, config_name=preset)
    return {
        "preset": preset,
        "seed": seed,
        "rouge_l": report.rouge_l,
        "bleu_1": report.bleu_1,
        "by_question_type": report.by_question_type,
        "run_dir": str(run_dir),
        "best_dev_rouge_l": manifest["train_log"]["best_dev_rouge_l"],
    }


def _ablation_worker(args):
    os.environ.setdefault("OMP_NUM_THREADS", "1")
    os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
    config_raw, preset, seed = args
    return ablation_row(config_raw, preset, seed)


def run_ablation(config_raw: dict, presets: list[str], seeds: list[int],
                 threads: int = 1) -> dict:
    """Train and evaluate each preset over the shared seed set; aggregate means."""
    jobs = [(config_raw, preset, seed) for preset in presets for seed in seeds]
    if threads > 1:
        import multiprocessing as mp
        from concurrent.futures import ProcessPoolExecutor

        method = "fork" if "fork" in mp.get_all_start_methods() else "spawn"
        ctx = mp.get_context(method)
        with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
            rows = list(pool.map(_ablation_worker, jobs))
    else:
        rows = [_ablation_worker(job) for job in jobs]

    summary = {}
    for preset in presets:
        preset_rows = [r for r in rows if r["preset"] == preset]
        mean_rouge = sum(r["rouge_l"] for r in preset_rows) / len(preset_rows)
        mean_bleu = sum(r["bleu_1"] for r in preset_rows) / len(preset_rows)
        types: dict[str, list[float]] = {}
        for r in preset_rows:
            for qtype, cell in r["by_question_type"].items():
                types.setdefault(qtype, []).append(cell["rouge_l"])
        summary[preset] = {
            "rouge_l": mean_rouge,
            "bleu_1": mean_bleu,
            "by_question_type": {t: sum(v) / len(v) for t, v in sorted(types.items())},
        }
    baseline_name = "base" if "base" in summary else presets[0]
    base = summary[baseline_name]
    for preset, cell in summary.items():
        cell["rouge_l_delta"] = cell["rouge_l"] - base["rouge_l"]
        cell["by_question_type_delta"] = {
            t: v - base["by_question_type"].get(t, 0.0)
            for t, v in cell["by_question_type"].items()
            if t in base["by_question_type"]
        }
    return {"rows": rows, "summary": summary, "baseline": baseline_name,
            "presets": presets, "seeds": seeds}


def format_ablation(table: dict) -> str:
    lines = [f"{'preset':<20}{'rouge_l':>9}{'delta':>8}{'bleu_1':>9}   per-type rouge_l (delta)"]
    for preset in table["presets"]:
        cell = table["summary"][preset]
        types = "  ".join(
            f"{t}:{100 * v:.1f}({100 * cell['by_question_type_delta'].get(t, 0.0):+.1f})"
            for t, v in cell["by_question_type"].items()
        )
        lines.append(
            f"{preset:<20}{100 * cell['rouge_l']:>9.2f}{100 * cell['rouge_l_delta']:>+8.2f}"
            f"{100 * cell['bleu_1']:>9.2f}   {types}"
        )
    lines.append(f"(means over seeds {table['seeds']}; deltas vs {table['baseline']})")
    return "\n".join(lines) + "\n"


def write_ablation(table: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "ablation.json", "w", encoding="utf-8") as f:
        f.write(_dumps(table) + "\n")
    with open(out / "ablation.txt", "w", encoding="utf-8") as f:
        f.write(format_ablation(table))
