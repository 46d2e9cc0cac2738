"""Document/QA data model, rule tokenizer, and dataset interchange files.

Interchange files are UTF-8 JSON Lines: a header record followed by one
record per document / example.  All token indices are 0-based and
end-exclusive.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

SENTENCE_TERMINALS = frozenset({".", "!", "?"})
DETACHED_PUNCT = frozenset({".", "!", "?", ",", ";", ":"})

DATASET_FORMAT = "qa-dataset"
FORMAT_VERSION = 1


class InterchangeError(ValueError):
    """Malformed interchange record; message carries file:line and the field."""


@dataclass(frozen=True)
class Token:
    text: str
    char_start: int
    char_end: int
    sentence_index: int

    def __post_init__(self):
        if not self.char_start < self.char_end:
            raise ValueError(
                f"token {self.text!r}: char_start {self.char_start} must be < char_end {self.char_end}"
            )
        if self.sentence_index < 0:
            raise ValueError(f"token {self.text!r}: negative sentence_index")


@dataclass(frozen=True)
class Document:
    tokens: tuple[Token, ...]
    sentence_bounds: tuple[tuple[int, int], ...]

    def __post_init__(self):
        expected_start = 0
        for s, e in self.sentence_bounds:
            if s != expected_start or e <= s:
                raise ValueError(
                    f"sentence_bounds must partition [0, {len(self.tokens)}) contiguously; "
                    f"got bound ({s}, {e}) after {expected_start}"
                )
            expected_start = e
        if expected_start != len(self.tokens):
            raise ValueError(
                f"sentence_bounds cover [0, {expected_start}) but document has {len(self.tokens)} tokens"
            )
        for si, (s, e) in enumerate(self.sentence_bounds):
            for t in self.tokens[s:e]:
                if t.sentence_index != si:
                    raise ValueError(
                        f"token {t.text!r} carries sentence_index {t.sentence_index}, "
                        f"but lies in sentence {si}"
                    )

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def num_sentences(self) -> int:
        return len(self.sentence_bounds)

    def token_texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    def sentence_indices(self) -> list[int]:
        return [t.sentence_index for t in self.tokens]

    def sentence_of(self, token_index: int) -> int:
        return self.tokens[token_index].sentence_index


@dataclass(frozen=True)
class QAExample:
    id: str
    document_id: str
    context: Document
    question: Document
    answers: tuple[tuple[str, ...], tuple[str, ...]]
    oracle_span: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if len(self.answers) != 2:
            raise ValueError(f"example {self.id}: expected exactly 2 answers, got {len(self.answers)}")
        if self.oracle_span is not None:
            s, e = self.oracle_span
            if not (0 <= s < e <= self.context.n):
                raise ValueError(
                    f"example {self.id}: oracle_span ({s}, {e}) out of bounds for context of {self.context.n} tokens"
                )


@dataclass
class Dataset:
    split: str
    examples: list[QAExample] = field(default_factory=list)
    documents: dict[str, Document] = field(default_factory=dict)

    def __post_init__(self):
        for ex in self.examples:
            if ex.document_id not in self.documents:
                raise ValueError(f"example {ex.id} references unknown document {ex.document_id!r}")


def tokenize(text: str) -> Document:
    """Split on whitespace, detaching terminal punctuation as separate tokens.

    A sentence closes after each of ``. ! ?``; trailing unterminated
    material forms a final sentence.  Empty text gives an empty document.
    """
    raw: list[tuple[str, int, int]] = []
    for m in re.finditer(r"\S+", text):
        chunk, start = m.group(), m.start()
        j = len(chunk)
        while j > 0 and chunk[j - 1] in DETACHED_PUNCT:
            j -= 1
        if j > 0:
            raw.append((chunk[:j], start, start + j))
        for k in range(j, len(chunk)):
            raw.append((chunk[k], start + k, start + k + 1))

    tokens: list[Token] = []
    bounds: list[tuple[int, int]] = []
    sent_start = 0
    sent_index = 0
    for text_, cs, ce in raw:
        tokens.append(Token(text_, cs, ce, sent_index))
        if text_ in SENTENCE_TERMINALS:
            bounds.append((sent_start, len(tokens)))
            sent_start = len(tokens)
            sent_index += 1
    if sent_start < len(tokens):
        bounds.append((sent_start, len(tokens)))
    return Document(tuple(tokens), tuple(bounds))


def _token_to_record(t: Token) -> dict:
    return {
        "text": t.text,
        "char_start": t.char_start,
        "char_end": t.char_end,
        "sentence_index": t.sentence_index,
    }


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def write_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(_dumps({"kind": "header", "format": DATASET_FORMAT,
                        "version": FORMAT_VERSION, "split": dataset.split}) + "\n")
        for doc_id in sorted(dataset.documents):
            doc = dataset.documents[doc_id]
            f.write(_dumps({
                "kind": "document",
                "id": doc_id,
                "tokens": [_token_to_record(t) for t in doc.tokens],
                "sentence_bounds": [list(b) for b in doc.sentence_bounds],
            }) + "\n")
        for ex in dataset.examples:
            rec = {
                "kind": "example",
                "id": ex.id,
                "document_id": ex.document_id,
                "question_tokens": [_token_to_record(t) for t in ex.question.tokens],
                "question_sentence_bounds": [list(b) for b in ex.question.sentence_bounds],
                "answers": [list(a) for a in ex.answers],
            }
            if ex.oracle_span is not None:
                rec["oracle_span"] = list(ex.oracle_span)
            f.write(_dumps(rec) + "\n")


def _require(record: dict, field_name: str, where: str):
    if field_name not in record:
        raise InterchangeError(f"{where}: missing required field {field_name!r}")
    return record[field_name]


def _parse_tokens(items, where: str) -> tuple[Token, ...]:
    tokens = []
    for i, rec in enumerate(items):
        if not isinstance(rec, dict):
            raise InterchangeError(f"{where}.tokens[{i}]: expected an object")
        try:
            tokens.append(Token(
                text=_require(rec, "text", f"{where}.tokens[{i}]"),
                char_start=_require(rec, "char_start", f"{where}.tokens[{i}]"),
                char_end=_require(rec, "char_end", f"{where}.tokens[{i}]"),
                sentence_index=_require(rec, "sentence_index", f"{where}.tokens[{i}]"),
            ))
        except ValueError as exc:
            if isinstance(exc, InterchangeError):
                raise
            raise InterchangeError(f"{where}.tokens[{i}]: {exc}") from exc
    return tuple(tokens)


def _parse_bounds(items, where: str) -> tuple[tuple[int, int], ...]:
    bounds = []
    for i, pair in enumerate(items):
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise InterchangeError(f"{where}.sentence_bounds[{i}]: expected a [start, end] pair")
        bounds.append((pair[0], pair[1]))
    return tuple(bounds)


def load_dataset(path) -> Dataset:
    split = None
    documents: dict[str, Document] = {}
    pending: list[tuple[int, dict]] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InterchangeError(f"{where}: invalid JSON ({exc.msg})") from exc
            kind = _require(record, "kind", where)
            if kind == "header":
                fmt = _require(record, "format", where)
                if fmt != DATASET_FORMAT:
                    raise InterchangeError(f"{where}: format: expected {DATASET_FORMAT!r}, got {fmt!r}")
                split = _require(record, "split", where)
            elif kind == "document":
                doc_id = _require(record, "id", where)
                tokens = _parse_tokens(_require(record, "tokens", where), where)
                bounds = _parse_bounds(_require(record, "sentence_bounds", where), where)
                try:
                    documents[doc_id] = Document(tokens, bounds)
                except ValueError as exc:
                    raise InterchangeError(f"{where}: {exc}") from exc
            elif kind == "example":
                pending.append((lineno, record))
            else:
                raise InterchangeError(f"{where}: kind: unknown record kind {kind!r}")
    if split is None:
        raise InterchangeError(f"{path}: missing header record")

    examples: list[QAExample] = []
    for lineno, record in pending:
        where = f"{path}:{lineno}"
        ex_id = _require(record, "id", where)
        doc_id = _require(record, "document_id", where)
        if doc_id not in documents:
            raise InterchangeError(f"{where}: document_id: dangling reference {doc_id!r}")
        q_tokens = _parse_tokens(_require(record, "question_tokens", where), where)
        q_bounds = _parse_bounds(_require(record, "question_sentence_bounds", where), where)
        answers = _require(record, "answers", where)
        if not (isinstance(answers, list) and len(answers) == 2):
            raise InterchangeError(f"{where}: answers: expected exactly 2 answer token lists")
        span = record.get("oracle_span")
        try:
            question = Document(q_tokens, q_bounds)
            examples.append(QAExample(
                id=ex_id,
                document_id=doc_id,
                context=documents[doc_id],
                question=question,
                answers=(tuple(answers[0]), tuple(answers[1])),
                oracle_span=tuple(span) if span is not None else None,
            ))
        except ValueError as exc:
            raise InterchangeError(f"{where}: {exc}") from exc
    return Dataset(split=split, examples=examples, documents=documents)


def document_from_sentences(sentences: Iterable[list[str]]) -> Document:
    """Build a Document from pre-tokenized sentences, synthesizing char offsets."""
    tokens: list[Token] = []
    bounds: list[tuple[int, int]] = []
    cursor = 0
    for si, sent in enumerate(sentences):
        start = len(tokens)
        for text in sent:
            tokens.append(Token(text, cursor, cursor + len(text), si))
            cursor += len(text) + 1
        if len(tokens) > start:
            bounds.append((start, len(tokens)))
    return Document(tuple(tokens), tuple(bounds))
