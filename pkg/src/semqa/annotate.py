"""Projection of relational annotations to per-token label planes and scope masks.

Relations (semantic roles, coreference, discourse relations) are flattened to
one label string per token, one plane per attention head.  Masks restrict a
head's attention to sentence-derived scopes and are computable from sentence
boundaries alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import Document, InterchangeError

NULL_LABEL = "NONE"

SRL_TYPE = "SRL"
DR_EXP_TYPE = "DR_Exp"
DR_NONEXP_TYPE = "DR_NonExp"
COREF_TYPE = "Coref"
SENT_SPAN_TYPE = "SentSpan"
NO_TYPE = "None"

ANNOTATION_TYPES = (SRL_TYPE, DR_EXP_TYPE, DR_NONEXP_TYPE, COREF_TYPE, SENT_SPAN_TYPE, NO_TYPE)

DR_ROLES = ("Arg1", "Arg2", "CONN")

# The 15 fine-grained sense types of the shallow-discourse-parsing shared-task
# scheme (PDTB-derived).
PDTB_SENSES = (
    "Comparison.Concession",
    "Comparison.Contrast",
    "Contingency.Cause.Reason",
    "Contingency.Cause.Result",
    "Contingency.Condition",
    "EntRel",
    "Expansion.Alternative",
    "Expansion.Alternative.Chosen alternative",
    "Expansion.Conjunction",
    "Expansion.Exception",
    "Expansion.Instantiation",
    "Expansion.Restatement",
    "Temporal.Asynchronous.Precedence",
    "Temporal.Asynchronous.Succession",
    "Temporal.Synchrony",
)

ANNOTATIONS_FORMAT = "qa-annotations"


class AnnotationError(ValueError):
    """An annotation violates a structural invariant."""


@dataclass(frozen=True)
class SemanticView:
    """Per-token role tags induced by one verb (one semantic view)."""

    verb_token_index: int
    tags: tuple[str, ...]

    def __post_init__(self):
        if not (0 <= self.verb_token_index < len(self.tags)):
            raise AnnotationError(
                f"verb index {self.verb_token_index} outside tag sequence of length {len(self.tags)}"
            )
        if self.tags[self.verb_token_index] != "V":
            raise AnnotationError(
                f"tag at verb index {self.verb_token_index} must be 'V', got {self.tags[self.verb_token_index]!r}"
            )

    def validate(self, doc: Document, where: str = "srl_view") -> None:
        if len(self.tags) != doc.n:
            raise AnnotationError(f"{where}: tags length {len(self.tags)} != document length {doc.n}")
        verb_sentence = doc.sentence_of(self.verb_token_index)
        for i, tag in enumerate(self.tags):
            if tag != NULL_LABEL and doc.sentence_of(i) != verb_sentence:
                raise AnnotationError(
                    f"{where}: tag {tag!r} at token {i} lies outside the verb's sentence {verb_sentence}"
                )


@dataclass(frozen=True)
class CorefCluster:
    cluster_id: int
    mentions: tuple[tuple[int, int], ...]

    def __post_init__(self):
        spans = sorted(self.mentions)
        for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
            if s2 < e1:
                raise AnnotationError(
                    f"cluster {self.cluster_id}: overlapping mentions ({s1},{e1}) and ({s2},{e2})"
                )

    def validate(self, doc: Document, where: str = "coref") -> None:
        for s, e in self.mentions:
            if not (0 <= s < e <= doc.n):
                raise AnnotationError(f"{where}: mention ({s},{e}) out of bounds for {doc.n} tokens")

    def first_mention_start(self) -> int:
        return min(s for s, _ in self.mentions)


@dataclass(frozen=True)
class DiscourseRelation:
    kind: str  # "Explicit" | "NonExplicit"
    sense: str
    arg1_range: tuple[int, int]
    arg2_range: tuple[int, int]
    conn_range: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.kind not in ("Explicit", "NonExplicit"):
            raise AnnotationError(f"unknown discourse relation kind {self.kind!r}")
        if self.kind == "Explicit" and self.conn_range is None:
            raise AnnotationError("Explicit relation requires a connective range")

    def validate(self, doc: Document, where: str = "discourse") -> None:
        for name, rng in (("arg1", self.arg1_range), ("arg2", self.arg2_range)):
            s, e = rng
            if not (0 <= s < e <= doc.n):
                raise AnnotationError(f"{where}.{name}: range ({s},{e}) out of bounds for {doc.n} tokens")
        if self.kind == "Explicit":
            cs, ce = self.conn_range
            if not (0 <= cs < ce <= doc.n):
                raise AnnotationError(f"{where}.conn: range ({cs},{ce}) out of bounds")
            touched = list(range(*self.arg1_range)) + list(range(cs, ce)) + list(range(*self.arg2_range))
            sentences = {doc.sentence_of(i) for i in touched}
            if len(sentences) != 1:
                raise AnnotationError(f"{where}: Explicit relation spans sentences {sorted(sentences)}")
            if self.arg1_range[1] > cs:
                raise AnnotationError(f"{where}: arg1 must lie left of the connective")
            if self.arg2_range[0] < ce:
                raise AnnotationError(f"{where}: arg2 must lie right of the connective")
        else:
            i = doc.sentence_of(self.arg1_range[0])
            if self.arg1_range != doc.sentence_bounds[i]:
                raise AnnotationError(f"{where}: arg1 must span exactly one sentence")
            if i + 1 >= doc.num_sentences or self.arg2_range != doc.sentence_bounds[i + 1]:
                raise AnnotationError(f"{where}: arg2 must span exactly the following sentence")

    def arg1_sentence(self, doc: Document) -> int:
        return doc.sentence_of(self.arg1_range[0])


@dataclass(frozen=True)
class AnnotationBundle:
    srl_views: tuple[SemanticView, ...]
    coref: tuple[CorefCluster, ...]
    discourse: tuple[DiscourseRelation, ...]

    def validate(self, doc: Document, where: str = "annotations") -> None:
        for i, view in enumerate(self.srl_views):
            view.validate(doc, f"{where}.srl_views[{i}]")
        for i, cluster in enumerate(self.coref):
            cluster.validate(doc, f"{where}.coref[{i}]")
        for i, rel in enumerate(self.discourse):
            rel.validate(doc, f"{where}.discourse[{i}]")

    def explicit_relations(self) -> list[DiscourseRelation]:
        return [r for r in self.discourse if r.kind == "Explicit"]

    def nonexplicit_relations(self) -> list[DiscourseRelation]:
        return [r for r in self.discourse if r.kind == "NonExplicit"]


@dataclass(frozen=True)
class LabelPlane:
    """Per-token annotation labels feeding one attention head."""

    annotation_type: str
    tags: tuple[str, ...]

    def __post_init__(self):
        if self.annotation_type not in ANNOTATION_TYPES:
            raise AnnotationError(f"unknown annotation type {self.annotation_type!r}")

    @property
    def n(self) -> int:
        return len(self.tags)

    def ids(self, vocab: "LabelVocabulary") -> np.ndarray:
        """Resolve label strings to vocabulary ids; unknown labels map to the null id."""
        return np.array([vocab.get(t, 0) for t in self.tags], dtype=np.int64)

    def is_null(self) -> bool:
        return all(t == NULL_LABEL for t in self.tags)


class LabelVocabulary:
    """Bidirectional label-string <-> id map; id 0 is reserved for the null label."""

    def __init__(self):
        self._to_id: dict[str, int] = {NULL_LABEL: 0}
        self._labels: list[str] = [NULL_LABEL]

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, label: str) -> bool:
        return label in self._to_id

    def intern(self, label: str) -> int:
        if label not in self._to_id:
            self._to_id[label] = len(self._labels)
            self._labels.append(label)
        return self._to_id[label]

    def id_of(self, label: str) -> int:
        return self._to_id[label]

    def get(self, label: str, default: int = 0) -> int:
        return self._to_id.get(label, default)

    def label_of(self, label_id: int) -> str:
        return self._labels[label_id]

    def labels(self) -> tuple[str, ...]:
        return tuple(self._labels)


def build_vocab(planes: Iterable[LabelPlane]) -> LabelVocabulary:
    """Assign ids by first occurrence over a deterministic plane traversal."""
    vocab = LabelVocabulary()
    for plane in planes:
        for tag in plane.tags:
            vocab.intern(tag)
    return vocab


def project_srl(doc: Document, views: Sequence[SemanticView], slots: int) -> list[LabelPlane]:
    """Assign each sentence's views to planes round-robin in verb order.

    Views overflowing the slot count share a plane; on token conflicts the
    later verb's tag wins.
    """
    if slots < 1:
        raise AnnotationError(f"slots must be >= 1, got {slots}")
    for view in views:
        view.validate(doc)
    planes = [[NULL_LABEL] * doc.n for _ in range(slots)]
    by_sentence: dict[int, list[SemanticView]] = {}
    for view in views:
        by_sentence.setdefault(doc.sentence_of(view.verb_token_index), []).append(view)
    for sent_views in by_sentence.values():
        sent_views.sort(key=lambda v: v.verb_token_index)
        for k, view in enumerate(sent_views):
            slot = k % slots
            for i, tag in enumerate(view.tags):
                if tag != NULL_LABEL:
                    planes[slot][i] = f"SRL_{tag}"
    return [LabelPlane(SRL_TYPE, tuple(p)) for p in planes]


def project_dr_explicit(doc: Document, relations: Sequence[DiscourseRelation]) -> LabelPlane:
    tags = [NULL_LABEL] * doc.n
    for rel in relations:
        if rel.kind != "Explicit":
            raise AnnotationError(f"expected Explicit relation, got {rel.kind}")
        rel.validate(doc)
        for i in range(*rel.arg1_range):
            tags[i] = f"DiscRel_Exp_{rel.sense}_Arg1"
        for i in range(*rel.conn_range):
            tags[i] = f"DiscRel_Exp_{rel.sense}_CONN"
        for i in range(*rel.arg2_range):
            tags[i] = f"DiscRel_Exp_{rel.sense}_Arg2"
    return LabelPlane(DR_EXP_TYPE, tuple(tags))


def project_dr_nonexp(doc: Document, relations: Sequence[DiscourseRelation], parity: str) -> LabelPlane:
    """Project pair relations whose arg1 sentence index has the given parity.

    Two parity planes jointly cover all consecutive-pair relations without
    Arg1/Arg2 collisions on interior sentences.
    """
    if parity not in ("even", "odd"):
        raise AnnotationError(f"parity must be 'even' or 'odd', got {parity!r}")
    want = 0 if parity == "even" else 1
    tags = [NULL_LABEL] * doc.n
    seen_arg1: set[int] = set()
    for rel in relations:
        if rel.kind != "NonExplicit":
            raise AnnotationError(f"expected NonExplicit relation, got {rel.kind}")
        rel.validate(doc)
        arg1_sent = rel.arg1_sentence(doc)
        if arg1_sent in seen_arg1:
            raise AnnotationError(f"two relations share arg1 sentence {arg1_sent}")
        seen_arg1.add(arg1_sent)
        if arg1_sent % 2 != want:
            continue
        for i in range(*rel.arg1_range):
            tags[i] = f"DiscRel_NonE_{rel.sense}_Arg1"
        for i in range(*rel.arg2_range):
            tags[i] = f"DiscRel_NonE_{rel.sense}_Arg2"
    return LabelPlane(DR_NONEXP_TYPE, tuple(tags))


def project_coref(doc: Document, clusters: Sequence[CorefCluster]) -> LabelPlane:
    """Label mention tokens per cluster, reindexed densely by first mention order.

    Where mentions of different clusters overlap, the cluster whose first
    mention comes earlier keeps the token.
    """
    for cluster in clusters:
        cluster.validate(doc)
    tags = [NULL_LABEL] * doc.n
    ordered = sorted(clusters, key=lambda c: (c.first_mention_start(), c.cluster_id))
    for dense_id, cluster in enumerate(ordered):
        label = f"Coref_C{dense_id}"
        for s, e in cluster.mentions:
            for i in range(s, e):
                if tags[i] == NULL_LABEL:
                    tags[i] = label
    return LabelPlane(COREF_TYPE, tuple(tags))


def project_sent_span(doc: Document, k: int = 3) -> LabelPlane:
    """Tile sentences into consecutive groups of k; label by position in group."""
    if k < 1:
        raise AnnotationError(f"window size must be >= 1, got {k}")
    tags = [f"Sent{doc.sentence_of(i) % k + 1}" for i in range(doc.n)]
    return LabelPlane(SENT_SPAN_TYPE, tuple(tags))


def project_null(doc: Document) -> LabelPlane:
    """The dedicated all-null plane consumed by annotation-free heads."""
    return LabelPlane(NO_TYPE, (NULL_LABEL,) * doc.n)


def strip_sense(plane: LabelPlane) -> LabelPlane:
    """Drop the sense segment from discourse labels, keeping kind and role."""
    if plane.annotation_type not in (DR_EXP_TYPE, DR_NONEXP_TYPE):
        raise AnnotationError(f"strip_sense expects a discourse plane, got {plane.annotation_type}")
    stripped = []
    for tag in plane.tags:
        if tag == NULL_LABEL:
            stripped.append(tag)
            continue
        head, _, rest = tag.partition("_")  # "DiscRel"
        kind, _, rest = rest.partition("_")  # "Exp" | "NonE"
        if rest in DR_ROLES:  # already sense-free
            stripped.append(tag)
        else:
            role = rest.rsplit("_", 1)[1]
            stripped.append(f"{head}_{kind}_{role}")
    return LabelPlane(plane.annotation_type, tuple(stripped))


@dataclass(frozen=True)
class ScopeMask:
    """Symmetric n-by-n boolean attention scope with an all-true diagonal."""

    allowed: np.ndarray

    def __post_init__(self):
        a = self.allowed
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.dtype != np.bool_:
            raise ValueError(f"mask must be a square boolean matrix, got {a.dtype} {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("mask must be symmetric")
        if a.shape[0] and not a.diagonal().all():
            raise ValueError("mask diagonal must be all true")

    @property
    def n(self) -> int:
        return self.allowed.shape[0]


def _sentence_vector(doc: Document) -> np.ndarray:
    return np.asarray(doc.sentence_indices(), dtype=np.int64)


def mask_sentence(doc: Document) -> ScopeMask:
    sent = _sentence_vector(doc)
    return ScopeMask(sent[:, None] == sent[None, :])


def mask_pair(doc: Document) -> ScopeMask:
    sent = _sentence_vector(doc)
    return ScopeMask(np.abs(sent[:, None] - sent[None, :]) <= 1)


def mask_window(doc: Document, k: int) -> ScopeMask:
    if k < 1:
        raise ValueError(f"window size must be >= 1, got {k}")
    tile = _sentence_vector(doc) // k
    return ScopeMask(tile[:, None] == tile[None, :])


def mask_full(n: int) -> ScopeMask:
    return ScopeMask(np.ones((n, n), dtype=bool))


def build_masks(doc: Document, window_k: int = 3) -> dict[str, ScopeMask]:
    """All mask kinds for one document, keyed by mask-kind name."""
    return {
        "full": mask_full(doc.n),
        "sentence": mask_sentence(doc),
        "pair": mask_pair(doc),
        "window": mask_window(doc, window_k),
    }


def build_planes(
    doc: Document,
    bundle: AnnotationBundle,
    srl_slots: int = 3,
    sent_span_k: int = 3,
    no_sense: bool = False,
) -> dict[str, list[LabelPlane]]:
    """The full plane set one document contributes to the encoder, keyed by type."""
    dr_exp = project_dr_explicit(doc, bundle.explicit_relations())
    dr_even = project_dr_nonexp(doc, bundle.nonexplicit_relations(), "even")
    dr_odd = project_dr_nonexp(doc, bundle.nonexplicit_relations(), "odd")
    if no_sense:
        dr_exp, dr_even, dr_odd = strip_sense(dr_exp), strip_sense(dr_even), strip_sense(dr_odd)
    return {
        SRL_TYPE: project_srl(doc, bundle.srl_views, srl_slots),
        DR_EXP_TYPE: [dr_exp],
        DR_NONEXP_TYPE: [dr_even, dr_odd],
        COREF_TYPE: [project_coref(doc, bundle.coref)],
        SENT_SPAN_TYPE: [project_sent_span(doc, sent_span_k)],
        NO_TYPE: [project_null(doc)],
    }


def build_vocabularies(plane_sets: Iterable[dict[str, list[LabelPlane]]]) -> dict[str, LabelVocabulary]:
    """Per-annotation-type vocabularies over a deterministic dataset traversal."""
    grouped: dict[str, list[LabelPlane]] = {t: [] for t in ANNOTATION_TYPES}
    for planes in plane_sets:
        for kind, plist in planes.items():
            grouped[kind].extend(plist)
    return {kind: build_vocab(planes) for kind, planes in grouped.items()}


def _record_to_bundle(record: dict, where: str) -> AnnotationBundle:
    def require(rec, name, ctx):
        if name not in rec:
            raise InterchangeError(f"{ctx}: missing required field {name!r}")
        return rec[name]

    views = []
    for i, rec in enumerate(record.get("srl_views", [])):
        ctx = f"{where}.srl_views[{i}]"
        try:
            views.append(SemanticView(
                verb_token_index=require(rec, "verb_index", ctx),
                tags=tuple(require(rec, "tags", ctx)),
            ))
        except AnnotationError as exc:
            raise InterchangeError(f"{ctx}: {exc}") from exc
    clusters = []
    for i, rec in enumerate(record.get("coref", [])):
        ctx = f"{where}.coref[{i}]"
        try:
            clusters.append(CorefCluster(
                cluster_id=require(rec, "cluster_id", ctx),
                mentions=tuple(tuple(m) for m in require(rec, "mentions", ctx)),
            ))
        except AnnotationError as exc:
            raise InterchangeError(f"{ctx}: {exc}") from exc
    relations = []
    for i, rec in enumerate(record.get("discourse", [])):
        ctx = f"{where}.discourse[{i}]"
        try:
            conn = rec.get("conn")
            relations.append(DiscourseRelation(
                kind=require(rec, "kind", ctx),
                sense=require(rec, "sense", ctx),
                arg1_range=tuple(require(rec, "arg1", ctx)),
                arg2_range=tuple(require(rec, "arg2", ctx)),
                conn_range=tuple(conn) if conn is not None else None,
            ))
        except AnnotationError as exc:
            raise InterchangeError(f"{ctx}: {exc}") from exc
    return AnnotationBundle(tuple(views), tuple(clusters), tuple(relations))


def _bundle_to_record(document_id: str, bundle: AnnotationBundle) -> dict:
    rec = {
        "kind": "annotations",
        "document_id": document_id,
        "srl_views": [
            {"verb_index": v.verb_token_index, "tags": list(v.tags)} for v in bundle.srl_views
        ],
        "coref": [
            {"cluster_id": c.cluster_id, "mentions": [list(m) for m in c.mentions]}
            for c in bundle.coref
        ],
        "discourse": [],
    }
    for r in bundle.discourse:
        d = {"kind": r.kind, "sense": r.sense, "arg1": list(r.arg1_range), "arg2": list(r.arg2_range)}
        if r.conn_range is not None:
            d["conn"] = list(r.conn_range)
        rec["discourse"].append(d)
    return rec


def write_annotations(bundles: dict[str, AnnotationBundle], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        header = {"kind": "header", "format": ANNOTATIONS_FORMAT, "version": 1}
        f.write(json.dumps(header, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n")
        for doc_id in sorted(bundles):
            rec = _bundle_to_record(doc_id, bundles[doc_id])
            f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n")


def load_annotations(path, documents: Optional[dict[str, Document]] = None,
                     require_known: bool = True) -> dict[str, AnnotationBundle]:
    """Load annotation records; validates invariants when documents are supplied.

    With ``require_known`` a record referencing an unknown document is an
    error; otherwise such records load unvalidated (annotation files may
    cover more splits than are currently loaded).
    """
    bundles: dict[str, AnnotationBundle] = {}
    saw_header = False
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
            kind = record.get("kind")
            if kind == "header":
                if record.get("format") != ANNOTATIONS_FORMAT:
                    raise InterchangeError(
                        f"{where}: format: expected {ANNOTATIONS_FORMAT!r}, got {record.get('format')!r}"
                    )
                saw_header = True
                continue
            if kind != "annotations":
                raise InterchangeError(f"{where}: kind: unknown record kind {kind!r}")
            doc_id = record.get("document_id")
            if doc_id is None:
                raise InterchangeError(f"{where}: missing required field 'document_id'")
            bundle = _record_to_bundle(record, where)
            if documents is not None:
                if doc_id not in documents:
                    if require_known:
                        raise InterchangeError(f"{where}: document_id: dangling reference {doc_id!r}")
                else:
                    try:
                        bundle.validate(documents[doc_id], where)
                    except AnnotationError as exc:
                        raise InterchangeError(str(exc)) from exc
            bundles[doc_id] = bundle
    if not saw_header:
        raise InterchangeError(f"{path}: missing header record")
    return bundles
