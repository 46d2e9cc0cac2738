"""Synthetic annotated narrative corpus for offline desk-scale experiments.

Documents are template-generated mini narratives over fixed inventories of
actors, verbs, objects, places, and connectives.  Gold annotations fall out
of the templates: one semantic view per verb, coreference clusters over
repeated actor mentions and their pronouns, Explicit discourse relations
around connectives, and a Non-Explicit relation with a cycling sense for
every consecutive sentence pair.  Each question targets an argument of some
event and its first reference answer is an exact contiguous context span.

Generation is a pure function of the spec; the template grammar below is
versioned and must not be edited casually, since experiment numbers depend
on it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .annotate import (
    PDTB_SENSES,
    AnnotationBundle,
    CorefCluster,
    DiscourseRelation,
    SemanticView,
)
from .corpus import Dataset, Document, QAExample, document_from_sentences

GRAMMAR_VERSION = "v1"

# (name, pronoun) pairs; pronoun use links mentions into one cluster
ACTORS = (
    ("Mira", "she"), ("Jonas", "he"), ("Petra", "she"), ("Omar", "he"),
    ("Lena", "she"), ("Tariq", "he"), ("Greta", "she"), ("Ivan", "he"),
    ("Nadia", "she"), ("Felix", "he"), ("Rosa", "she"), ("Dmitri", "he"),
    ("Aiko", "she"), ("Bruno", "he"), ("Celia", "she"), ("Viktor", "he"),
)

# transitive verbs: (base form, past form, passive participle)
VERBS = (
    ("carry", "carried", "carried"), ("repair", "repaired", "repaired"),
    ("paint", "painted", "painted"), ("borrow", "borrowed", "borrowed"),
    ("polish", "polished", "polished"), ("examine", "examined", "examined"),
    ("sell", "sold", "sold"), ("deliver", "delivered", "delivered"),
    ("sketch", "sketched", "sketched"), ("weigh", "weighed", "weighed"),
    ("guard", "guarded", "guarded"), ("clean", "cleaned", "cleaned"),
    ("mend", "mended", "mended"), ("pack", "packed", "packed"),
)

# person-to-person verbs: both arguments are actors, so answering "who"
# requires knowing which name fills which role
PERSON_VERBS = (
    ("thank", "thanked", "thanked"), ("greet", "greeted", "greeted"),
    ("follow", "followed", "followed"), ("help", "helped", "helped"),
    ("warn", "warned", "warned"), ("visit", "visited", "visited"),
    ("trust", "trusted", "trusted"), ("blame", "blamed", "blamed"),
)

OBJECTS = (
    "lantern", "ledger", "violin", "satchel", "compass", "manuscript",
    "kettle", "telescope", "blanket", "medallion", "basket", "portrait",
    "harness", "journal", "locket", "banner",
)

PLACES = (
    "harbor", "market", "orchard", "library", "mill", "chapel",
    "station", "meadow", "cellar", "workshop", "bridge", "garden",
)

TIMES = (
    ("at", "dawn"), ("at", "noon"), ("at", "dusk"), ("at", "midnight"),
    ("before", "the", "storm"), ("after", "the", "festival"),
    ("on", "market", "day"), ("in", "the", "morning"),
)

REASON_VERBS = ("feared", "wanted", "remembered", "missed", "needed", "promised")

REASON_NOUNS = (
    "storm", "debt", "festival", "silence", "journey",
    "winter", "wager", "reward", "deadline", "ceremony",
)

ADVERBS = ("quietly", "carefully", "suddenly", "eagerly", "finally", "slowly")

OPENERS = ("Later", "Soon", "Afterwards", "Eventually", "Meanwhile")

CONNECTIVE_SENSES = {
    "because": "Contingency.Cause.Reason",
    "but": "Comparison.Contrast",
    "so": "Contingency.Cause.Result",
    "then": "Temporal.Asynchronous.Precedence",
    "and then": "Temporal.Asynchronous.Precedence",
}

_INVENTORY_TOTAL = (len(ACTORS) + len(VERBS) + len(PERSON_VERBS) + len(OBJECTS)
                    + len(PLACES) + len(TIMES) + len(REASON_VERBS) + len(REASON_NOUNS)
                    + len(ADVERBS))


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int
    train_docs: int = 30
    dev_docs: int = 10
    test_docs: int = 10
    sentences_per_doc: tuple[int, int] = (10, 16)
    questions_per_doc: tuple[int, int] = (2, 3)
    tokens_per_doc: tuple[int, int] = (80, 160)
    vocabulary_size: int = _INVENTORY_TOTAL

    def __post_init__(self):
        for name in ("train_docs", "dev_docs", "test_docs", "vocabulary_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("sentences_per_doc", "questions_per_doc", "tokens_per_doc"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ValueError(f"{name} must be an increasing range of positive counts")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "train_docs": self.train_docs,
            "dev_docs": self.dev_docs,
            "test_docs": self.test_docs,
            "sentences_per_doc": list(self.sentences_per_doc),
            "questions_per_doc": list(self.questions_per_doc),
            "tokens_per_doc": list(self.tokens_per_doc),
            "vocabulary_size": self.vocabulary_size,
            "grammar_version": GRAMMAR_VERSION,
        }

    @staticmethod
    def from_dict(d: dict) -> "SyntheticSpec":
        known = {"seed", "train_docs", "dev_docs", "test_docs", "sentences_per_doc",
                 "questions_per_doc", "tokens_per_doc", "vocabulary_size"}
        unknown = set(d) - known - {"grammar_version"}
        if unknown:
            raise ValueError(f"unknown synthetic-spec keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in d.items() if k in known}
        for name in ("sentences_per_doc", "questions_per_doc", "tokens_per_doc"):
            if name in kwargs:
                kwargs[name] = tuple(kwargs[name])
        return SyntheticSpec(**kwargs)


@dataclass
class SyntheticCorpus:
    datasets: dict[str, Dataset]
    annotations: dict[str, AnnotationBundle]


def _shrink(inventory, vocabulary_size: int):
    frac = min(1.0, vocabulary_size / _INVENTORY_TOTAL)
    return inventory[:max(2, int(len(inventory) * frac))]


@dataclass
class _Inventories:
    actors: tuple
    verbs: tuple
    person_verbs: tuple
    objects: tuple
    places: tuple
    times: tuple
    reason_verbs: tuple
    reason_nouns: tuple
    adverbs: tuple

    @staticmethod
    def sized(vocabulary_size: int) -> "_Inventories":
        return _Inventories(
            actors=_shrink(ACTORS, vocabulary_size),
            verbs=_shrink(VERBS, vocabulary_size),
            person_verbs=_shrink(PERSON_VERBS, vocabulary_size),
            objects=_shrink(OBJECTS, vocabulary_size),
            places=_shrink(PLACES, vocabulary_size),
            times=_shrink(TIMES, vocabulary_size),
            reason_verbs=_shrink(REASON_VERBS, vocabulary_size),
            reason_nouns=_shrink(REASON_NOUNS, vocabulary_size),
            adverbs=_shrink(ADVERBS, vocabulary_size),
        )


@dataclass
class _Candidate:
    qtype: str
    question: list[str]
    answer_span: tuple[int, int]  # global token range; answer 0 is this exact span
    answer_variant: list[str]


@dataclass
class _DocState:
    sentences: list[list[str]] = field(default_factory=list)
    views: list[tuple[int, dict[int, str]]] = field(default_factory=list)  # (verb, tags), global
    explicit: list[DiscourseRelation] = field(default_factory=list)
    mentions: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    candidates: list[_Candidate] = field(default_factory=list)
    used_vo: set = field(default_factory=set)
    used_obj: set = field(default_factory=set)
    used_av: set = field(default_factory=set)
    used_person: set = field(default_factory=set)
    last_actor: tuple[str, str] | None = None

    @property
    def offset(self) -> int:
        return sum(len(s) for s in self.sentences)


def _pick_vo(rng: random.Random, inv: _Inventories, state: _DocState):
    """A verb/object pairing; ``fresh`` means the object is new to this document,
    which makes it a safe anchor for an unambiguous question."""
    for _ in range(40):
        verb = rng.choice(inv.verbs)
        obj = rng.choice(inv.objects)
        if obj not in state.used_obj and (verb[1], obj) not in state.used_vo:
            state.used_obj.add(obj)
            state.used_vo.add((verb[1], obj))
            return verb, obj, True
    verb = rng.choice(inv.verbs)
    obj = rng.choice(inv.objects)
    state.used_vo.add((verb[1], obj))
    return verb, obj, False


def _mention(state: _DocState, actor: str, span: tuple[int, int]) -> None:
    state.mentions.setdefault(actor, []).append(span)


def _add_view(state: _DocState, verb_global: int, tags: dict[int, str]) -> None:
    state.views.append((verb_global, tags))


def _who_candidate(state: _DocState, verb, obj: str, answer_span, answer: str, fresh: bool):
    if fresh:
        state.candidates.append(_Candidate(
            "who", ["Who", verb[1], "the", obj, "?"], answer_span, [answer]))


def _what_candidate(state: _DocState, actor: str, verb, answer_span, obj: str,
                    anchor: list[str] | None = None):
    if (actor, verb[1]) not in state.used_av:
        state.used_av.add((actor, verb[1]))
        state.candidates.append(_Candidate(
            "what", ["What", "did", actor, verb[0], *(anchor or []), "?"],
            answer_span, [obj]))


def _sentence_simple(rng: random.Random, inv: _Inventories, state: _DocState, with_time: bool):
    base = state.offset
    actor, pron = rng.choice(inv.actors)
    verb, obj, fresh = _pick_vo(rng, inv, state)
    tokens = []
    tags = {}
    if rng.random() < 0.3:
        # fronted adjunct shifts the subject off the sentence-initial position
        tokens += [rng.choice(OPENERS), ","]
        tags[0] = "ARGM-TMP"
    actor_local = len(tokens)
    tokens.append(actor)
    tags[actor_local] = "ARG0"
    if rng.random() < 0.35:
        tokens.append(rng.choice(inv.adverbs))
        tags[len(tokens) - 1] = "ARGM-MNR"
    v_local = len(tokens)
    tokens.append(verb[1])
    tags[v_local] = "V"
    obj_local = len(tokens)
    tokens += ["the", obj]
    tags[obj_local] = "ARG1"
    tags[obj_local + 1] = "ARG1"
    if with_time:
        time = rng.choice(inv.times)
        t_local = len(tokens)
        tokens += list(time)
        for i in range(len(time)):
            tags[t_local + i] = "ARGM-TMP"
        adjunct_span = (base + t_local, base + t_local + len(time))
        anchor = list(time)
    else:
        place = rng.choice(inv.places)
        p_local = len(tokens)
        tokens += ["at", "the", place]
        for i in range(3):
            tags[p_local + i] = "ARGM-LOC"
        adjunct_span = (base + p_local + 1, base + p_local + 3)
        anchor = ["at", "the", place]
    tokens.append(".")

    _mention(state, actor, (base + actor_local, base + actor_local + 1))
    _add_view(state, base + v_local, {base + k: t for k, t in tags.items()})
    _who_candidate(state, verb, obj, (base + actor_local, base + actor_local + 1), actor, fresh)
    _what_candidate(state, actor, verb, (base + obj_local, base + obj_local + 2), obj,
                    anchor=anchor)
    if fresh:
        if with_time:
            state.candidates.append(_Candidate(
                "when", ["When", "did", actor, verb[0], "the", obj, "?"],
                adjunct_span, list(time[1:]) if len(time) > 1 else list(time)))
        else:
            state.candidates.append(_Candidate(
                "where", ["Where", "did", actor, verb[0], "the", obj, "?"],
                adjunct_span, [place]))
    state.last_actor = (actor, pron)
    state.sentences.append(tokens)


def _sentence_passive(rng: random.Random, inv: _Inventories, state: _DocState):
    base = state.offset
    actor, pron = rng.choice(inv.actors)
    verb, obj, fresh = _pick_vo(rng, inv, state)
    tokens = ["the", obj, "was", verb[2], "by", actor, "."]
    tags = {0: "ARG1", 1: "ARG1", 3: "V", 4: "ARG0", 5: "ARG0"}
    _mention(state, actor, (base + 5, base + 6))
    _add_view(state, base + 3, {base + k: t for k, t in tags.items()})
    _who_candidate(state, verb, obj, (base + 5, base + 6), actor, fresh)
    state.last_actor = (actor, pron)
    state.sentences.append(tokens)


def _sentence_causal(rng: random.Random, inv: _Inventories, state: _DocState):
    base = state.offset
    actor, pron = rng.choice(inv.actors)
    verb, obj, fresh = _pick_vo(rng, inv, state)
    rverb = rng.choice(inv.reason_verbs)
    rnoun = rng.choice(inv.reason_nouns)
    tokens = []
    main_tags = {}
    if rng.random() < 0.25:
        tokens += [rng.choice(OPENERS), ","]
        main_tags[0] = "ARGM-TMP"
    actor_local = len(tokens)
    tokens.append(actor)
    main_tags[actor_local] = "ARG0"
    if rng.random() < 0.3:
        tokens.append(rng.choice(inv.adverbs))
        main_tags[len(tokens) - 1] = "ARGM-MNR"
    v_local = len(tokens)
    tokens.append(verb[1])
    main_tags[v_local] = "V"
    obj_local = len(tokens)
    tokens += ["the", obj]
    main_tags[obj_local] = "ARG1"
    main_tags[obj_local + 1] = "ARG1"
    conn_local = len(tokens)
    tokens += ["because", pron, rverb, "the", rnoun, "."]
    for i in range(conn_local, len(tokens) - 1):
        main_tags[i] = "ARGM-CAU"
    reason_tags = {
        conn_local + 1: "ARG0",
        conn_local + 2: "V",
        conn_local + 3: "ARG1",
        conn_local + 4: "ARG1",
    }

    end = base + len(tokens)
    _mention(state, actor, (base + actor_local, base + actor_local + 1))
    _mention(state, actor, (base + conn_local + 1, base + conn_local + 2))
    _add_view(state, base + v_local, {base + k: t for k, t in main_tags.items()})
    _add_view(state, base + conn_local + 2, {base + k: t for k, t in reason_tags.items()})
    state.explicit.append(DiscourseRelation(
        kind="Explicit",
        sense=CONNECTIVE_SENSES["because"],
        arg1_range=(base, base + conn_local),
        conn_range=(base + conn_local, base + conn_local + 1),
        arg2_range=(base + conn_local + 1, end),
    ))
    _who_candidate(state, verb, obj, (base + actor_local, base + actor_local + 1), actor, fresh)
    if fresh:
        state.candidates.append(_Candidate(
            "why", ["Why", "did", actor, verb[0], "the", obj, "?"],
            (base + conn_local + 1, end - 1), ["the", rnoun]))
    state.last_actor = (actor, pron)
    state.sentences.append(tokens)


def _sentence_person(rng: random.Random, inv: _Inventories, state: _DocState):
    """Two actors in one event; who-questions here hinge on role assignment."""
    base = state.offset
    agent, agent_pron = rng.choice(inv.actors)
    patient, _ = rng.choice([a for a in inv.actors if a[0] != agent])
    verb = rng.choice(inv.person_verbs)
    passive = rng.random() < 0.4
    tokens = []
    tags = {}
    if not passive and rng.random() < 0.3:
        tokens += [rng.choice(OPENERS), ","]
        tags[0] = "ARGM-TMP"
    if passive:
        p_local = len(tokens)
        tokens += [patient, "was", verb[2], "by", agent]
        tags[p_local] = "ARG1"
        v_local = p_local + 2
        tags[v_local] = "V"
        tags[v_local + 1] = "ARG0"
        agent_local = v_local + 2
        tags[agent_local] = "ARG0"
        patient_local = p_local
    else:
        agent_local = len(tokens)
        tokens.append(agent)
        tags[agent_local] = "ARG0"
        v_local = len(tokens)
        tokens.append(verb[1])
        tags[v_local] = "V"
        patient_local = len(tokens)
        tokens.append(patient)
        tags[patient_local] = "ARG1"
        if rng.random() < 0.4:
            place = rng.choice(inv.places)
            loc = len(tokens)
            tokens += ["at", "the", place]
            for i in range(3):
                tags[loc + i] = "ARGM-LOC"
    tokens.append(".")

    _mention(state, agent, (base + agent_local, base + agent_local + 1))
    _mention(state, patient, (base + patient_local, base + patient_local + 1))
    _add_view(state, base + v_local, {base + k: t for k, t in tags.items()})
    if (verb[1], patient) not in state.used_person:
        state.used_person.add((verb[1], patient))
        state.candidates.append(_Candidate(
            "who", ["Who", verb[1], patient, "?"],
            (base + agent_local, base + agent_local + 1), [agent]))
    if (agent, verb[1]) not in state.used_person:
        state.used_person.add((agent, verb[1]))
        state.candidates.append(_Candidate(
            "who", ["Who", "did", agent, verb[0], "?"],
            (base + patient_local, base + patient_local + 1), [patient]))
    state.last_actor = (agent, agent_pron)
    state.sentences.append(tokens)


def _sentence_two_clause(rng: random.Random, inv: _Inventories, state: _DocState):
    base = state.offset
    conn_word = rng.choice(["but", "so", "then", "and then"])
    actor_a, pron_a = rng.choice(inv.actors)
    verb_a, obj_a, fresh_a = _pick_vo(rng, inv, state)
    verb_b, obj_b, fresh_b = _pick_vo(rng, inv, state)
    if conn_word == "but":
        actor_b, _pron_b = rng.choice([a for a in inv.actors if a[0] != actor_a])
        subj_b, subj_b_is_name = actor_b, True
    else:
        subj_b, subj_b_is_name = pron_a, False

    tokens = [actor_a, verb_a[1], "the", obj_a]
    conn_tokens = conn_word.split()
    conn_local = len(tokens)
    tokens += conn_tokens
    subj_local = len(tokens)
    tokens += [subj_b, verb_b[1], "the", obj_b, "."]
    end = base + len(tokens)

    tags_a = {0: "ARG0", 1: "V", 2: "ARG1", 3: "ARG1"}
    tags_b = {subj_local: "ARG0", subj_local + 1: "V",
              subj_local + 2: "ARG1", subj_local + 3: "ARG1"}
    _mention(state, actor_a, (base, base + 1))
    if subj_b_is_name:
        _mention(state, subj_b, (base + subj_local, base + subj_local + 1))
    else:
        _mention(state, actor_a, (base + subj_local, base + subj_local + 1))
    _add_view(state, base + 1, {base + k: t for k, t in tags_a.items()})
    _add_view(state, base + subj_local + 1, {base + k: t for k, t in tags_b.items()})
    state.explicit.append(DiscourseRelation(
        kind="Explicit",
        sense=CONNECTIVE_SENSES[conn_word],
        arg1_range=(base, base + conn_local),
        conn_range=(base + conn_local, base + conn_local + len(conn_tokens)),
        arg2_range=(base + subj_local, end),
    ))
    _who_candidate(state, verb_a, obj_a, (base, base + 1), actor_a, fresh_a)
    if subj_b_is_name:
        # pronoun-subject clauses yield no who-question: their answer would sit
        # on the antecedent name rather than the role-tagged subject token
        _who_candidate(state, verb_b, obj_b, (base + subj_local, base + subj_local + 1),
                       subj_b, fresh_b)
    elif conn_word == "so" and fresh_b:
        # the second clause is the result; its cause is the clause left of the
        # connective, so the answer sits on the opposite side than "because"
        state.candidates.append(_Candidate(
            "why", ["Why", "did", actor_a, verb_b[0], "the", obj_b, "?"],
            (base, base + conn_local), [obj_a]))
    _what_candidate(state, actor_a, verb_a, (base + 2, base + 4), obj_a)
    state.last_actor = (actor_a, pron_a)
    state.sentences.append(tokens)


def _sentence_followup(rng: random.Random, inv: _Inventories, state: _DocState):
    actor, pron = state.last_actor
    base = state.offset
    verb, obj, fresh = _pick_vo(rng, inv, state)
    place = rng.choice(inv.places)
    tokens = [pron.capitalize(), verb[1], "the", obj, "at", "the", place, "."]
    tags = {0: "ARG0", 1: "V", 2: "ARG1", 3: "ARG1", 4: "ARGM-LOC", 5: "ARGM-LOC", 6: "ARGM-LOC"}
    _mention(state, actor, (base, base + 1))
    _add_view(state, base + 1, {base + k: t for k, t in tags.items()})
    _what_candidate(state, actor, verb, (base + 2, base + 4), obj,
                    anchor=["at", "the", place])
    if fresh:
        state.candidates.append(_Candidate(
            "where", ["Where", "did", actor, verb[0], "the", obj, "?"],
            (base + 5, base + 7), [place]))
    state.sentences.append(tokens)


_SENTENCE_KINDS = ("simple_loc", "simple_tmp", "passive", "causal", "two_clause",
                   "person", "followup")
_SENTENCE_WEIGHTS = (14, 10, 12, 22, 16, 18, 8)


def _generate_document(rng: random.Random, inv: _Inventories, spec: SyntheticSpec):
    state = _DocState()
    n_sentences = rng.randint(*spec.sentences_per_doc)
    min_tokens, max_tokens = spec.tokens_per_doc
    while True:
        done_count = len(state.sentences) >= n_sentences
        if (done_count and state.offset >= min_tokens) or state.offset >= max_tokens - 14:
            break
        kind = rng.choices(_SENTENCE_KINDS, weights=_SENTENCE_WEIGHTS, k=1)[0]
        if kind == "followup" and state.last_actor is None:
            kind = "simple_loc"
        if kind == "simple_loc":
            _sentence_simple(rng, inv, state, with_time=False)
        elif kind == "simple_tmp":
            _sentence_simple(rng, inv, state, with_time=True)
        elif kind == "passive":
            _sentence_passive(rng, inv, state)
        elif kind == "causal":
            _sentence_causal(rng, inv, state)
        elif kind == "two_clause":
            _sentence_two_clause(rng, inv, state)
        elif kind == "person":
            _sentence_person(rng, inv, state)
        else:
            _sentence_followup(rng, inv, state)

    doc = document_from_sentences(state.sentences)

    views = []
    for verb_global, tags in state.views:
        tag_list = ["NONE"] * doc.n
        for idx, tag in tags.items():
            tag_list[idx] = tag
        views.append(SemanticView(verb_token_index=verb_global, tags=tuple(tag_list)))

    clusters = []
    next_id = 0
    for actor in sorted(state.mentions, key=lambda a: min(s for s, _ in state.mentions[a])):
        spans = sorted(set(state.mentions[actor]))
        if len(spans) >= 2:
            clusters.append(CorefCluster(cluster_id=next_id, mentions=tuple(spans)))
            next_id += 1

    relations = list(state.explicit)
    for i in range(doc.num_sentences - 1):
        relations.append(DiscourseRelation(
            kind="NonExplicit",
            sense=PDTB_SENSES[i % len(PDTB_SENSES)],
            arg1_range=doc.sentence_bounds[i],
            arg2_range=doc.sentence_bounds[i + 1],
        ))
    bundle = AnnotationBundle(tuple(views), tuple(clusters), tuple(relations))
    return doc, bundle, state.candidates


def _select_questions(rng: random.Random, candidates: list[_Candidate], count: int) -> list[_Candidate]:
    """Draw up to ``count`` candidates: most documents lead with a
    who-question, the rest cycle over the remaining types for balance."""
    by_type: dict[str, list[_Candidate]] = {}
    for c in candidates:
        by_type.setdefault(c.qtype, []).append(c)
    chosen: list[_Candidate] = []
    who = by_type.get("who")
    lead_with_who = rng.random() < 0.65
    if who and count > 0 and lead_with_who:
        chosen.append(who.pop(rng.randrange(len(who))))
    types = sorted(t for t in by_type if t != "who")
    rng.shuffle(types)
    while len(chosen) < count and any(by_type[t] for t in types):
        for t in types:
            bucket = by_type[t]
            if bucket and len(chosen) < count:
                chosen.append(bucket.pop(rng.randrange(len(bucket))))
    if len(chosen) < count and who:
        chosen.extend(who[:count - len(chosen)])
    return chosen


def generate_synthetic(spec: SyntheticSpec) -> SyntheticCorpus:
    """Deterministically generate the three splits and their gold annotations."""
    rng = random.Random(spec.seed)
    inv = _Inventories.sized(spec.vocabulary_size)
    datasets: dict[str, Dataset] = {}
    annotations: dict[str, AnnotationBundle] = {}
    for split, n_docs in (("train", spec.train_docs), ("dev", spec.dev_docs), ("test", spec.test_docs)):
        documents: dict[str, Document] = {}
        examples: list[QAExample] = []
        for d in range(n_docs):
            doc_id = f"{split}-{d:04d}"
            doc, bundle, candidates = _generate_document(rng, inv, spec)
            documents[doc_id] = doc
            annotations[doc_id] = bundle
            count = rng.randint(*spec.questions_per_doc)
            for q, cand in enumerate(_select_questions(rng, candidates, count)):
                answer_exact = tuple(t.text for t in doc.tokens[cand.answer_span[0]:cand.answer_span[1]])
                examples.append(QAExample(
                    id=f"{doc_id}-q{q}",
                    document_id=doc_id,
                    context=doc,
                    question=document_from_sentences([cand.question]),
                    answers=(answer_exact, tuple(cand.answer_variant)),
                ))
        datasets[split] = Dataset(split=split, examples=examples, documents=documents)
    return SyntheticCorpus(datasets=datasets, annotations=annotations)
