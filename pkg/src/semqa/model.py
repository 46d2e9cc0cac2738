"""Full span-prediction model and training loop.

Layers: word+char input embedding, a shared embedding-encoder block,
context-to-query attention, the modeling stack (three shared-weight passes),
and start/end span pointers.  Training follows the fixed schedule: Adam,
early stopping on dev ROUGE-L, learning-rate halving on stagnation, gradient
accumulation up to the effective batch size, and optional EMA weights for
evaluation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nm
from .annotate import AnnotationBundle, LabelVocabulary, build_masks, build_planes, build_vocabularies
from .attention import LABEL_EMB_DIM, init_label_table
from .corpus import Dataset, Document, QAExample
from .encoder import (
    DropoutCtx,
    EncoderBlockConfig,
    StackConfig,
    build_head_specs,
    encoder_block_forward,
    init_encoder_block,
    init_modeling_stack,
    modeling_stack_forward,
)
from .evaluation import score_example

PAD_ID = 0
UNK_ID = 1


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 32
    word_dim: int = 24
    char_dim: int = 12
    char_conv_width: int = 3
    max_chars: int = 12
    max_answer_len: int = 30
    dropout: float = 0.1
    label_dim: int = LABEL_EMB_DIM
    embed_convs: int = 4
    embed_conv_width: int = 7
    stack: StackConfig = field(default_factory=StackConfig)

    def __post_init__(self):
        for name in ("d_model", "word_dim", "char_dim", "max_chars", "max_answer_len", "label_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.d_model != self.stack.d_model:
            raise ValueError(
                f"model d_model {self.d_model} != stack d_model {self.stack.d_model}")
        if self.d_model % self.stack.num_heads:
            raise ValueError(f"d_model {self.d_model} not divisible by {self.stack.num_heads} heads")
        if self.stack.passes < 3:
            raise ValueError("the span head consumes three modeling passes; stack.passes must be >= 3")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    max_epochs: int = 15
    patience: int = 20
    halve_every: int = 8
    batch_size: int = 16
    context_cap: int = 800
    ema_decay: float = 0.9999
    use_ema: bool = True
    seed: int = 1

    def __post_init__(self):
        if not 0 < self.max_epochs <= 70:
            raise ValueError("max_epochs must lie in [1, 70]")
        if self.batch_size < 1 or self.batch_size > 32:
            raise ValueError("effective batch size must lie in [1, 32]")
        for name in ("lr", "patience", "halve_every", "context_cap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class Prediction:
    example_id: str
    span: tuple[int, int]
    answer_tokens: tuple[str, ...]
    start_prob: float
    end_prob: float


class Vocab:
    """Token <-> id map with reserved PAD and UNK entries."""

    def __init__(self, items):
        self.to_id = {"<pad>": PAD_ID, "<unk>": UNK_ID}
        for it in items:
            if it not in self.to_id:
                self.to_id[it] = len(self.to_id)

    def __len__(self):
        return len(self.to_id)

    def get(self, item) -> int:
        return self.to_id.get(item, UNK_ID)


class AnnotationResolver:
    """Per-document label planes (resolved to ids) and scope masks, cached."""

    def __init__(self, stack: StackConfig, label_vocabs: dict[str, LabelVocabulary],
                 annotations: dict[str, AnnotationBundle]):
        self.stack = stack
        self.label_vocabs = label_vocabs
        self.annotations = annotations
        self._planes: dict[str, dict[str, list[np.ndarray]]] = {}
        self._masks: dict[str, dict[str, np.ndarray]] = {}

    def planes_for(self, doc_id: str, doc: Document) -> dict[str, list[np.ndarray]]:
        cached = self._planes.get(doc_id)
        if cached is None:
            bundle = self.annotations.get(doc_id)
            if bundle is None:
                raise KeyError(f"no annotations for document {doc_id!r}")
            planes = build_planes(
                doc, bundle,
                srl_slots=self.stack.srl_slots_needed(),
                sent_span_k=self.stack.sent_span_k,
                no_sense=self.stack.no_sense,
            )
            cached = {
                kind: [p.ids(self.label_vocabs[kind]) for p in plist]
                for kind, plist in planes.items()
            }
            self._planes[doc_id] = cached
        return cached

    def masks_for(self, doc_id: str, doc: Document) -> dict[str, np.ndarray]:
        cached = self._masks.get(doc_id)
        if cached is None:
            cached = {k: m.allowed for k, m in build_masks(doc, self.stack.sent_span_k).items()}
            self._masks[doc_id] = cached
        return cached


def _null_planes(n: int) -> dict[str, list[np.ndarray]]:
    return {"None": [np.zeros(n, dtype=np.int64)]}


def _full_mask(n: int) -> dict[str, np.ndarray]:
    return {"full": np.ones((n, n), dtype=bool)}


@dataclass
class ModelBundle:
    cfg: ModelConfig
    params: dict[str, nm.Parameter]
    tables: dict[str, nm.Parameter]
    word_vocab: Vocab
    char_vocab: Vocab
    label_vocabs: dict[str, LabelVocabulary]
    resolver: AnnotationResolver

    def eval_params(self) -> dict[str, nm.Parameter]:
        merged = dict(self.params)
        merged.update({p.name: p for p in self.tables.values()})
        return merged


def _embed_block_config(cfg: ModelConfig) -> EncoderBlockConfig:
    return EncoderBlockConfig(
        num_convs=cfg.embed_convs,
        conv_kernel_width=cfg.embed_conv_width,
        d_model=cfg.d_model,
        head_specs=build_head_specs((), cfg.stack.num_heads),
        kind="base",
    )


def load_word_vectors(path) -> dict[str, np.ndarray]:
    """Plain-text vectors: one token followed by its float components per line."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected a token and its components")
            vectors[parts[0]] = np.asarray([float(x) for x in parts[1:]], dtype=np.float64)
    return vectors


def build_model(
    cfg: ModelConfig,
    train_dataset: Dataset,
    annotations: dict[str, AnnotationBundle],
    seed: int,
    word_vectors: dict[str, np.ndarray] | None = None,
) -> ModelBundle:
    """Vocabularies from the train split, then seeded parameter initialization.

    Tokens present in ``word_vectors`` start from the given embeddings
    (dimensions must match); everything else trains from scratch.
    """
    words: list[str] = []
    for ex in train_dataset.examples:
        words.extend(ex.question.token_texts())
    for doc_id in sorted(train_dataset.documents):
        words.extend(train_dataset.documents[doc_id].token_texts())
    word_vocab = Vocab(words)
    char_vocab = Vocab(ch for w in words for ch in w)

    train_planes = []
    for doc_id in sorted(train_dataset.documents):
        doc = train_dataset.documents[doc_id]
        if doc_id in annotations:
            train_planes.append(build_planes(
                doc, annotations[doc_id],
                srl_slots=cfg.stack.srl_slots_needed(),
                sent_span_k=cfg.stack.sent_span_k,
                no_sense=cfg.stack.no_sense,
            ))
    label_vocabs = build_vocabularies(train_planes)

    rng = nm.philox(seed, nm.stream_id("model-init"))
    params: dict[str, nm.Parameter] = {}

    def param(name, data):
        params[name] = nm.Parameter(data, name)

    word_emb = rng.normal(0.0, 0.1, size=(len(word_vocab), cfg.word_dim))
    if word_vectors:
        for token, idx in word_vocab.to_id.items():
            vec = word_vectors.get(token)
            if vec is None:
                continue
            if vec.shape != (cfg.word_dim,):
                raise ValueError(
                    f"word vector for {token!r} has {vec.shape[0]} components, expected {cfg.word_dim}")
            word_emb[idx] = vec
    param("embed.word", word_emb)
    param("embed.char", rng.normal(0.0, 0.1, size=(len(char_vocab), cfg.char_dim)))
    param("embed.char_conv.depth", nm.xavier_uniform((cfg.char_conv_width, cfg.char_dim), rng))
    param("embed.char_conv.point", nm.xavier_uniform((cfg.char_dim, cfg.char_dim), rng))
    param("embed.proj.w", nm.xavier_uniform((cfg.word_dim + cfg.char_dim, cfg.d_model), rng))
    param("embed.proj.b", np.zeros(cfg.d_model))
    init_encoder_block(params, "embed.encoder", _embed_block_config(cfg), cfg.label_dim, rng)

    d = cfg.d_model
    param("c2q.w_c", nm.xavier_uniform((d, 1), rng))
    param("c2q.w_q", nm.xavier_uniform((d, 1), rng))
    param("c2q.w_cq", nm.xavier_uniform((1, d), rng))
    param("c2q.proj.w", nm.xavier_uniform((4 * d, d), rng))
    param("c2q.proj.b", np.zeros(d))

    init_modeling_stack(params, "modeling", cfg.stack, cfg.label_dim, rng)

    # small pointer init keeps initial span logits near uniform despite the
    # unnormalized residual stream
    param("span.start.w", 0.1 * nm.xavier_uniform((2 * d, 1), rng))
    param("span.end.w", 0.1 * nm.xavier_uniform((2 * d, 1), rng))

    tables: dict[str, nm.Parameter] = {}
    for kind in sorted(cfg.stack.semantic_kinds()):
        tables[kind] = init_label_table(
            {}, f"tables.{kind}", len(label_vocabs[kind]), cfg.label_dim, rng)

    resolver = AnnotationResolver(cfg.stack, label_vocabs, annotations)
    return ModelBundle(cfg, params, tables, word_vocab, char_vocab, label_vocabs, resolver)


def _word_ids(doc: Document, vocab: Vocab) -> np.ndarray:
    return np.array([vocab.get(t.text) for t in doc.tokens], dtype=np.int64)


def _char_ids(doc: Document, vocab: Vocab, max_chars: int) -> np.ndarray:
    out = np.zeros((doc.n, max_chars), dtype=np.int64)
    for i, tok in enumerate(doc.tokens):
        for j, ch in enumerate(tok.text[:max_chars]):
            out[i, j] = vocab.get(ch)
    return out


def embed_tokens(bundle: ModelBundle, doc: Document, drop: DropoutCtx, scope: str) -> nm.Tensor:
    """Word + max-pooled char-conv embeddings, projected to d_model (pre-encoder)."""
    cfg, params = bundle.cfg, bundle.params
    we = nm.embedding(params["embed.word"], _word_ids(doc, bundle.word_vocab))
    ce = nm.embedding(params["embed.char"], _char_ids(doc, bundle.char_vocab, cfg.max_chars))
    ce = nm.depthwise_separable_conv1d(
        ce, params["embed.char_conv.depth"], params["embed.char_conv.point"])
    ce = nm.max_axis(nm.relu(ce), axis=-2)
    x = nm.concat_last([we, ce])
    x = drop.apply(x, f"{scope}.embed")
    return nm.linear(x, params["embed.proj.w"], params["embed.proj.b"])


def embed_inputs(bundle: ModelBundle, doc: Document, drop: DropoutCtx, scope: str,
                 reference_token_only: bool = False) -> nm.Tensor:
    """Token embeddings followed by the shared embedding-encoder block."""
    x = embed_tokens(bundle, doc, drop, scope)
    return encoder_block_forward(
        x, _embed_block_config(bundle.cfg), bundle.params, "embed.encoder",
        _null_planes(doc.n), _full_mask(doc.n), bundle.tables,
        drop=drop, drop_scope=f"{scope}.embed_encoder",
        reference_token_only=reference_token_only)


def c2q_parts(params: dict, c: nm.Tensor, q: nm.Tensor):
    """Similarity matrix plus the two attended summaries (A and broadcast B)."""
    s_c = nm.matmul(c, params["c2q.w_c"])                      # (n, 1)
    s_q = nm.transpose_last2(nm.matmul(q, params["c2q.w_q"]))  # (1, m)
    s_cq = nm.matmul(nm.mul(c, params["c2q.w_cq"]), nm.transpose_last2(q))  # (n, m)
    s = nm.add(nm.add(s_cq, s_c), s_q)
    a = nm.matmul(nm.softmax_last(s), q)                       # (n, d)
    n = c.data.shape[0]
    col_max = nm.max_axis(s, axis=-1)                          # (n,)
    beta = nm.reshape(nm.softmax_last(col_max), (1, n))
    b = nm.matmul(beta, c)                                     # (1, d), broadcast below
    return s, a, b


def context_query_attention(bundle: ModelBundle, c: nm.Tensor, q: nm.Tensor,
                            drop: DropoutCtx) -> nm.Tensor:
    """Trilinear similarity, context-to-query and query-to-context summaries."""
    params = bundle.params
    _, a, b = c2q_parts(params, c, q)
    out = nm.concat_last([c, a, nm.mul(c, a), nm.mul(c, b)])
    out = drop.apply(out, "c2q")
    return nm.linear(out, params["c2q.proj.w"], params["c2q.proj.b"])


def span_output(bundle: ModelBundle, m0: nm.Tensor, m1: nm.Tensor, m2: nm.Tensor):
    params = bundle.params
    n = m0.data.shape[0]
    start = nm.reshape(nm.matmul(nm.concat_last([m0, m1]), params["span.start.w"]), (n,))
    end = nm.reshape(nm.matmul(nm.concat_last([m0, m2]), params["span.end.w"]), (n,))
    return start, end


def forward_spans(bundle: ModelBundle, example: QAExample, drop: DropoutCtx,
                  reference_token_only: bool = False):
    """Run layers 1-5; returns (start logits, end logits) over context tokens."""
    if example.context.n == 0:
        raise ValueError(f"example {example.id}: empty context")
    c = embed_inputs(bundle, example.context, drop, "context",
                     reference_token_only=reference_token_only)
    q = embed_inputs(bundle, example.question, drop, "question",
                     reference_token_only=reference_token_only)
    x = context_query_attention(bundle, c, q, drop)
    if reference_token_only:
        planes = _null_planes(example.context.n)
        masks = _full_mask(example.context.n)
    else:
        planes = bundle.resolver.planes_for(example.document_id, example.context)
        masks = bundle.resolver.masks_for(example.document_id, example.context)
    outputs = modeling_stack_forward(
        x, bundle.cfg.stack, bundle.params, "modeling", planes, masks, bundle.tables,
        drop=drop, reference_token_only=reference_token_only)
    m0, m1, m2 = outputs[0], outputs[1], outputs[2]
    return span_output(bundle, m0, m1, m2)


def example_loss(bundle: ModelBundle, example: QAExample, drop: DropoutCtx) -> nm.Tensor:
    if example.oracle_span is None:
        raise ValueError(f"example {example.id}: missing oracle span")
    start, end = forward_spans(bundle, example, drop)
    s, e = example.oracle_span
    return nm.add(nm.nll_from_logits(start, s), nm.nll_from_logits(end, e - 1))


def decode_span(start_logits: np.ndarray, end_logits: np.ndarray, max_len: int) -> tuple[int, int]:
    """Constrained argmax of start/end scores; ties prefer smaller start, then end."""
    n = start_logits.shape[0]
    width = min(max_len, n)
    table = np.full((n, width), -np.inf)
    for off in range(1, width + 1):
        rows = n - off + 1
        table[:rows, off - 1] = start_logits[:rows] + end_logits[off - 1:off - 1 + rows]
    flat = int(np.argmax(table))
    s, off = divmod(flat, width)
    return s, s + off + 1


def predict(bundle: ModelBundle, example: QAExample) -> Prediction:
    with nm.no_grad():
        start, end = forward_spans(bundle, example, DropoutCtx())
    s, e = decode_span(start.data, end.data, bundle.cfg.max_answer_len)
    start_p = np.exp(start.data - start.data.max())
    start_p /= start_p.sum()
    end_p = np.exp(end.data - end.data.max())
    end_p /= end_p.sum()
    tokens = tuple(t.text for t in example.context.tokens[s:e])
    return Prediction(example.id, (s, e), tokens, float(start_p[s]), float(end_p[e - 1]))


def _mean_dev_rouge(bundle: ModelBundle, examples: list[QAExample]) -> float:
    scores = []
    for ex in examples:
        pred = predict(bundle, ex)
        scores.append(score_example(pred.answer_tokens, ex.answers).rouge_l)
    return sum(scores) / len(scores) if scores else 0.0


@dataclass
class TrainResult:
    log: dict
    best_params: dict[str, np.ndarray]


def train(bundle: ModelBundle, train_ds: Dataset, dev_ds: Dataset, tcfg: TrainConfig) -> TrainResult:
    """Train to the schedule; leaves the best weights loaded in the bundle."""
    missing = [ex.id for ex in train_ds.examples if ex.oracle_span is None]
    if missing:
        raise ValueError(f"train examples missing oracle spans: {', '.join(missing[:5])}")
    train_examples = [ex for ex in train_ds.examples if ex.context.n <= tcfg.context_cap]

    all_params = bundle.eval_params()
    adam = nm.AdamState(all_params, lr=tcfg.lr)
    ema = nm.EmaState(all_params, tcfg.ema_decay) if tcfg.use_ema else None

    best_score = -1.0
    best_snapshot = {name: p.data.copy() for name, p in all_params.items()}
    best_epoch = 0
    no_improve = 0
    stop_reason = "max_epochs"
    epochs_log = []
    example_counter = 0

    for epoch in range(1, tcfg.max_epochs + 1):
        order = list(range(len(train_examples)))
        shuffle_rng = random.Random(tcfg.seed * 100003 + epoch)
        shuffle_rng.shuffle(order)
        losses = []
        for batch_start in range(0, len(order), tcfg.batch_size):
            batch = order[batch_start:batch_start + tcfg.batch_size]
            inv = 1.0 / len(batch)
            for idx in batch:
                example_counter += 1
                drop = DropoutCtx(train=True, rate=bundle.cfg.dropout,
                                  seed=tcfg.seed, step=example_counter)
                loss = example_loss(bundle, train_examples[idx], drop)
                losses.append(loss.item())
                nm.scale(loss, inv).backward()
            adam.step()
            if ema is not None:
                ema.update(all_params)

        if ema is not None:
            with ema.swapped_in(all_params):
                dev_score = _mean_dev_rouge(bundle, dev_ds.examples)
            dev_raw = _mean_dev_rouge(bundle, dev_ds.examples)
        else:
            dev_score = _mean_dev_rouge(bundle, dev_ds.examples)
            dev_raw = dev_score

        epochs_log.append({
            "epoch": epoch,
            "train_loss": sum(losses) / len(losses) if losses else 0.0,
            "dev_rouge_l": dev_score,
            "dev_rouge_l_raw": dev_raw,
            "lr": adam.lr,
        })

        if dev_score > best_score:
            best_score = dev_score
            best_epoch = epoch
            no_improve = 0
            source = ema.shadow if ema is not None else {n: p.data for n, p in all_params.items()}
            best_snapshot = {name: arr.copy() for name, arr in source.items()}
        else:
            no_improve += 1
            if no_improve % tcfg.halve_every == 0:
                adam.lr /= 2.0
            if no_improve >= tcfg.patience:
                stop_reason = "patience"
                break

    for name, p in all_params.items():
        p.data = best_snapshot[name].copy()
    log = {
        "epochs": epochs_log,
        "stop_reason": stop_reason,
        "best_epoch": best_epoch,
        "best_dev_rouge_l": best_score,
        "train_examples_used": len(train_examples),
        "train_examples_capped": len(train_ds.examples) - len(train_examples),
    }
    return TrainResult(log=log, best_params=best_snapshot)
