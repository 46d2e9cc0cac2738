"""Reproduce the desk-scale ablation from the shipped configs.

Generates the synthetic corpus, fills oracle spans, then trains and evaluates
the base, DR(Exp), and SRL presets over seeds {1, 2, 3}.
"""

import argparse
import json
import os
import time
from pathlib import Path

os.environ.setdefault("OMP_NUM_THREADS", "1")

from semqa.pipeline import format_ablation, oracle_splits, run_ablation, write_ablation, write_corpus
from semqa.synth import SyntheticSpec, generate_synthetic

REPO = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/desk")
    parser.add_argument("--threads", type=int, default=min(4, os.cpu_count() or 1))
    parser.add_argument("--presets", default="base,DR(Exp),SRL")
    parser.add_argument("--seeds", default="1,2,3")
    args = parser.parse_args()

    out = Path(args.out)
    with open(REPO / "configs" / "desk-synth.json", "r", encoding="utf-8") as f:
        spec = SyntheticSpec.from_dict(json.load(f))
    corpus = generate_synthetic(spec)
    write_corpus(corpus, spec, out / "data")
    oracle_splits(out / "data", out / "oracle")

    with open(REPO / "configs" / "desk.json", "r", encoding="utf-8") as f:
        config = json.load(f)
    config["paths"] = {
        "data_dir": str(out / "oracle"),
        "annotations": str(out / "data" / "annotations.jsonl"),
        "out_dir": str(out / "runs"),
    }
    presets = [p.strip() for p in args.presets.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    start = time.time()
    table = run_ablation(config, presets, seeds, threads=args.threads)
    write_ablation(table, out)
    print(format_ablation(table), end="")
    print(f"total {time.time() - start:.0f}s with {args.threads} worker(s)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
