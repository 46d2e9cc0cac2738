"""Metrics and fine-grained report generation.

ROUGE-L is the LCS-based F measure (beta controls the recall weight); BLEU-1
is clipped unigram precision with a brevity penalty.  Token matching is
lowercased here, at metric time.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from math import exp
from typing import Optional, Sequence

from .corpus import Dataset, Document

ROUGE_BETA = 1.2

QUESTION_WORDS = ("what", "who", "why", "how", "where", "when", "which", "whose")

LENGTH_EDGES = (0, 200, 400, 600, 800, 1000)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length via dynamic programming."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[-1]))
        prev = cur
    return prev[-1]


def _lower(tokens: Sequence[str]) -> list[str]:
    return [t.lower() for t in tokens]


def rouge_l(candidate: Sequence[str], reference: Sequence[str], beta: float = ROUGE_BETA) -> float:
    cand, ref = _lower(candidate), _lower(reference)
    if not cand or not ref:
        return 0.0
    lcs = lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(cand)
    r = lcs / len(ref)
    return (1.0 + beta * beta) * p * r / (r + beta * beta * p)


def bleu_1(candidate: Sequence[str], reference: Sequence[str]) -> float:
    cand, ref = _lower(candidate), _lower(reference)
    if not cand or not ref:
        return 0.0
    ref_counts = Counter(ref)
    clipped = sum(min(c, ref_counts[tok]) for tok, c in Counter(cand).items())
    precision = clipped / len(cand)
    bp = exp(1.0 - len(ref) / len(cand)) if len(cand) < len(ref) else 1.0
    return precision * bp


@dataclass(frozen=True)
class MetricScore:
    rouge_l: float
    bleu_1: float

    def __post_init__(self):
        if not (0.0 <= self.rouge_l <= 1.0 and 0.0 <= self.bleu_1 <= 1.0):
            raise ValueError(f"metric out of [0, 1]: {self}")


def score_example(prediction: Sequence[str], references: Sequence[Sequence[str]]) -> MetricScore:
    """Per metric, the max over the example's two reference answers."""
    if len(references) != 2:
        raise ValueError(f"expected exactly 2 references, got {len(references)}")
    return MetricScore(
        rouge_l=max(rouge_l(prediction, r) for r in references),
        bleu_1=max(bleu_1(prediction, r) for r in references),
    )


def classify_question(question: Document) -> str:
    """Question-word heuristic: first token, else scan the first three tokens."""
    texts = [t.text.lower() for t in question.tokens[:3]]
    if texts and texts[0] in QUESTION_WORDS:
        return texts[0]
    for t in texts:
        if t in QUESTION_WORDS:
            return t
    return "other"


def bucket_label(n_tokens: int, edges: Sequence[int] = LENGTH_EDGES) -> str:
    for lo, hi in zip(edges, edges[1:]):
        if lo <= n_tokens < hi:
            return f"{lo}-{hi}"
    return f"{edges[-1]}+"


def bucket_by_length(examples, edges: Sequence[int] = LENGTH_EDGES) -> dict[str, list]:
    """Assign examples to half-open context-length intervals."""
    if list(edges) != sorted(set(edges)):
        raise ValueError("bucket edges must be strictly increasing")
    buckets: dict[str, list] = {}
    for ex in examples:
        buckets.setdefault(bucket_label(ex.context.n, edges), []).append(ex)
    return buckets


@dataclass
class EvalReport:
    config_name: str
    count: int
    rouge_l: float
    bleu_1: float
    by_question_type: dict[str, dict] = field(default_factory=dict)
    by_length_bucket: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config_name": self.config_name,
            "count": self.count,
            "rouge_l": self.rouge_l,
            "bleu_1": self.bleu_1,
            "by_question_type": self.by_question_type,
            "by_length_bucket": self.by_length_bucket,
        }

    @staticmethod
    def from_dict(d: dict) -> "EvalReport":
        return EvalReport(
            config_name=d["config_name"],
            count=d["count"],
            rouge_l=d["rouge_l"],
            bleu_1=d["bleu_1"],
            by_question_type=d["by_question_type"],
            by_length_bucket=d["by_length_bucket"],
        )


def _cell(scores: list[MetricScore]) -> dict:
    return {
        "count": len(scores),
        "rouge_l": sum(s.rouge_l for s in scores) / len(scores),
        "bleu_1": sum(s.bleu_1 for s in scores) / len(scores),
    }


def evaluate(predictions: dict[str, Sequence[str]], dataset: Dataset, config_name: str) -> EvalReport:
    """Mean metrics overall, per question type, and per context-length bucket."""
    missing = [ex.id for ex in dataset.examples if ex.id not in predictions]
    if missing:
        raise ValueError(f"missing predictions for {len(missing)} examples: {', '.join(missing[:5])}")
    scores: dict[str, MetricScore] = {}
    for ex in dataset.examples:
        scores[ex.id] = score_example(predictions[ex.id], ex.answers)
    overall = _cell([scores[ex.id] for ex in dataset.examples])
    by_type: dict[str, list[MetricScore]] = {}
    for ex in dataset.examples:
        by_type.setdefault(classify_question(ex.question), []).append(scores[ex.id])
    by_bucket: dict[str, list[MetricScore]] = {}
    for label, exs in bucket_by_length(dataset.examples).items():
        by_bucket[label] = [scores[ex.id] for ex in exs]
    return EvalReport(
        config_name=config_name,
        count=overall["count"],
        rouge_l=overall["rouge_l"],
        bleu_1=overall["bleu_1"],
        by_question_type={k: _cell(v) for k, v in sorted(by_type.items())},
        by_length_bucket={k: _cell(v) for k, v in sorted(by_bucket.items())},
    )


def delta_report(report: EvalReport, baseline: EvalReport) -> dict:
    """Cellwise metric deltas against a baseline report."""
    out = {
        "config_name": report.config_name,
        "baseline_name": baseline.config_name,
        "rouge_l_delta": report.rouge_l - baseline.rouge_l,
        "bleu_1_delta": report.bleu_1 - baseline.bleu_1,
        "by_question_type": {},
        "by_length_bucket": {},
    }
    for key, cells, base_cells in (
        ("by_question_type", report.by_question_type, baseline.by_question_type),
        ("by_length_bucket", report.by_length_bucket, baseline.by_length_bucket),
    ):
        for name, cell in cells.items():
            if name in base_cells:
                out[key][name] = {
                    "rouge_l_delta": cell["rouge_l"] - base_cells[name]["rouge_l"],
                    "bleu_1_delta": cell["bleu_1"] - base_cells[name]["bleu_1"],
                }
    return out


def format_report(report: EvalReport, baseline: Optional[EvalReport] = None) -> str:
    """Human-readable table; scores reported on the conventional 0-100 scale."""
    lines = [
        f"config: {report.config_name}",
        f"examples: {report.count}",
        f"rouge_l: {100 * report.rouge_l:.2f}    bleu_1: {100 * report.bleu_1:.2f}",
        "",
        f"{'question type':<16}{'n':>6}{'rouge_l':>10}{'bleu_1':>10}",
    ]
    for name, cell in report.by_question_type.items():
        lines.append(f"{name:<16}{cell['count']:>6}{100 * cell['rouge_l']:>10.2f}{100 * cell['bleu_1']:>10.2f}")
    lines.append("")
    lines.append(f"{'context length':<16}{'n':>6}{'rouge_l':>10}{'bleu_1':>10}")
    for name, cell in report.by_length_bucket.items():
        lines.append(f"{name:<16}{cell['count']:>6}{100 * cell['rouge_l']:>10.2f}{100 * cell['bleu_1']:>10.2f}")
    if baseline is not None:
        delta = delta_report(report, baseline)
        lines.append("")
        lines.append(f"delta vs {baseline.config_name}: rouge_l {100 * delta['rouge_l_delta']:+.2f}, "
                     f"bleu_1 {100 * delta['bleu_1_delta']:+.2f}")
        for name, cell in delta["by_question_type"].items():
            lines.append(f"  {name:<14}rouge_l {100 * cell['rouge_l_delta']:+.2f}")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, json_path, text_path, baseline: Optional[EvalReport] = None) -> None:
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")
    with open(text_path, "w", encoding="utf-8") as f:
        f.write(format_report(report, baseline))


def load_report(json_path) -> EvalReport:
    with open(json_path, "r", encoding="utf-8") as f:
        return EvalReport.from_dict(json.load(f))
