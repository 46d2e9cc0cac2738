"""Span supervision from free-form answers.

Candidate context spans of the answer's length are scored by ROUGE-L against
the answer; score ties are re-scored by matching each candidate's surrounding
15-token window against the question, and any remaining tie goes to the
leftmost span.  Of the two reference answers, the higher-scoring one
supervises training.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from typing import Sequence

from .corpus import Dataset, Document, QAExample
from .evaluation import rouge_l

TIE_BREAK_WINDOW = 15


@dataclass(frozen=True)
class OracleResult:
    span: tuple[int, int]
    rouge_l: float
    tie_broken: bool
    chosen_answer_index: int = 0


def _window(tokens: list[str], start: int, end: int, width: int = TIE_BREAK_WINDOW) -> list[str]:
    return tokens[max(0, start - width):min(len(tokens), end + width)]


def find_best_span(context: Document, answer: Sequence[str], question: Sequence[str]) -> OracleResult:
    """Best same-length context span for one answer, with window tie-breaking."""
    if not answer:
        raise ValueError("answer must be non-empty")
    if context.n == 0:
        raise ValueError("context must be non-empty")
    tokens = context.token_texts()
    n = len(tokens)
    length = min(len(answer), n)
    candidates = [(i, i + length) for i in range(n - length + 1)]
    scores = [rouge_l(tokens[s:e], answer) for s, e in candidates]
    best = max(scores)
    top = [c for c, sc in zip(candidates, scores) if sc == best]
    tie_broken = len(top) > 1
    if tie_broken:
        question_tokens = list(question)
        window_scores = [rouge_l(_window(tokens, s, e), question_tokens) for s, e in top]
        best_window = max(window_scores)
        top = [c for c, sc in zip(top, window_scores) if sc == best_window]
    return OracleResult(span=top[0], rouge_l=best, tie_broken=tie_broken)


def build_supervision(example: QAExample) -> OracleResult:
    """The higher-scoring of the two answers' best spans; ties prefer answer 0."""
    results = [
        find_best_span(example.context, answer, example.question.token_texts())
        for answer in example.answers
    ]
    index = 1 if results[1].rouge_l > results[0].rouge_l else 0
    return replace(results[index], chosen_answer_index=index)


def oracle_dataset(dataset: Dataset) -> tuple[Dataset, dict]:
    """Fill oracle spans for every example; report score quality for the split."""
    examples = []
    scores = []
    zero_ids = []
    for ex in dataset.examples:
        result = build_supervision(ex)
        examples.append(replace(ex, oracle_span=result.span))
        scores.append(result.rouge_l)
        if result.rouge_l == 0.0:
            zero_ids.append(ex.id)
    report = {
        "split": dataset.split,
        "count": len(scores),
        "mean_rouge_l": sum(scores) / len(scores) if scores else 0.0,
        "median_rouge_l": statistics.median(scores) if scores else 0.0,
        "pct_exact": 100.0 * sum(1 for s in scores if s == 1.0) / len(scores) if scores else 0.0,
        "pct_zero": 100.0 * len(zero_ids) / len(scores) if scores else 0.0,
        "zero_score_ids": zero_ids,
    }
    filled = Dataset(split=dataset.split, examples=examples, documents=dataset.documents)
    return filled, report


def format_oracle_report(reports: Sequence[dict]) -> str:
    lines = [f"{'split':<8}{'count':>8}{'mean':>10}{'median':>10}{'%=1.0':>9}{'%=0.0':>9}"]
    for r in reports:
        lines.append(
            f"{r['split']:<8}{r['count']:>8}{r['mean_rouge_l']:>10.4f}{r['median_rouge_l']:>10.4f}"
            f"{r['pct_exact']:>9.2f}{r['pct_zero']:>9.2f}"
        )
    for r in reports:
        if r["zero_score_ids"]:
            shown = ", ".join(r["zero_score_ids"][:10])
            lines.append(f"zero-score examples in {r['split']}: {shown}")
    return "\n".join(lines) + "\n"
