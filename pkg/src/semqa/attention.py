"""Annotation-specialized self-attention heads.

Each head projects queries and keys from [token representation; label
embedding] and values from the token representation alone; attention scores
are restricted by a sentence-derived scope mask.  Annotation-free ("No")
heads run the same path with a frozen all-null plane and a full mask, and
carry no label-side projection weights.

The token-side projections of all heads in a layer are stored packed as one
(d_model, H*d_h) matrix per role; label-side blocks stay per head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numerics as nm
from .annotate import NO_TYPE

LABEL_EMB_DIM = 16
NUM_HEADS = 8

HEAD_KINDS = ("No", "SRL", "DR_Exp", "DR_NonExp", "Coref", "SentSpan")

# head kind -> plane annotation type
PLANE_TYPE_FOR_KIND = {
    "No": NO_TYPE,
    "SRL": "SRL",
    "DR_Exp": "DR_Exp",
    "DR_NonExp": "DR_NonExp",
    "Coref": "Coref",
    "SentSpan": "SentSpan",
}

DEFAULT_MASK_FOR_KIND = {
    "No": "full",
    "SRL": "sentence",
    "DR_Exp": "sentence",
    "DR_NonExp": "pair",
    "Coref": "full",
    "SentSpan": "window",
}

MASK_KINDS = ("full", "sentence", "pair", "window")


@dataclass(frozen=True)
class HeadSpec:
    kind: str
    plane_slot: int = 0
    mask_kind: str = ""

    def __post_init__(self):
        if self.kind not in HEAD_KINDS:
            raise ValueError(f"unknown head kind {self.kind!r}")
        if not self.mask_kind:
            object.__setattr__(self, "mask_kind", DEFAULT_MASK_FOR_KIND[self.kind])
        if self.mask_kind not in MASK_KINDS:
            raise ValueError(f"unknown mask kind {self.mask_kind!r}")
        if self.kind == "No" and (self.mask_kind != "full" or self.plane_slot != 0):
            raise ValueError("'No' heads require the full mask and the dedicated null plane")

    @property
    def semantic(self) -> bool:
        return self.kind != "No"


@dataclass
class HeadWeights:
    """One head's projections; label-side blocks are absent on 'No' heads."""

    w_q_r: nm.Tensor
    w_k_r: nm.Tensor
    w_v: nm.Tensor
    w_q_s: Optional[nm.Tensor] = None
    w_k_s: Optional[nm.Tensor] = None


def init_label_table(params: dict, name: str, vocab_size: int, d_i: int,
                     rng: np.random.Generator) -> nm.Parameter:
    table = nm.xavier_uniform((vocab_size, d_i), rng)
    table[0] = 0.0  # null label starts at zero
    p = nm.Parameter(table, name)
    params[name] = p
    return p


def init_multi_head(params: dict, prefix: str, d_model: int, head_specs: list[HeadSpec],
                    d_i: int, rng: np.random.Generator) -> None:
    n_heads = len(head_specs)
    if d_model % n_heads:
        raise ValueError(f"d_model {d_model} not divisible by {n_heads} heads")
    d_h = d_model // n_heads
    for role in ("w_q_r", "w_k_r", "w_v"):
        blocks = [nm.xavier_uniform((d_model, d_h), rng) for _ in head_specs]
        params[f"{prefix}.{role}"] = nm.Parameter(np.concatenate(blocks, axis=1), f"{prefix}.{role}")
    for i, spec in enumerate(head_specs):
        if spec.semantic:
            # gentle start: the label-side block begins 10x smaller than Xavier
            for role in ("w_q_s", "w_k_s"):
                params[f"{prefix}.h{i}.{role}"] = nm.Parameter(
                    0.1 * nm.xavier_uniform((d_i, d_h), rng), f"{prefix}.h{i}.{role}")
    params[f"{prefix}.w_o"] = nm.Parameter(nm.xavier_uniform((d_model, d_model), rng), f"{prefix}.w_o")


def head_weights(params: dict, prefix: str, i: int, n_heads: int) -> HeadWeights:
    """Per-head weight views sliced out of the packed layer parameters."""
    w_q_r = params[f"{prefix}.w_q_r"]
    d_h = w_q_r.data.shape[1] // n_heads
    sl = slice(i * d_h, (i + 1) * d_h)
    return HeadWeights(
        w_q_r=nm.Tensor(w_q_r.data[:, sl]),
        w_k_r=nm.Tensor(params[f"{prefix}.w_k_r"].data[:, sl]),
        w_v=nm.Tensor(params[f"{prefix}.w_v"].data[:, sl]),
        w_q_s=params.get(f"{prefix}.h{i}.w_q_s"),
        w_k_s=params.get(f"{prefix}.h{i}.w_k_s"),
    )


def semantic_head_forward(
    r: nm.Tensor,
    plane_ids: Optional[np.ndarray],
    mask_allowed: np.ndarray,
    weights: HeadWeights,
    table: Optional[nm.Tensor],
) -> nm.Tensor:
    """One head: q/k from [r; label embedding], v from r, scope-masked softmax."""
    d_h = weights.w_q_r.data.shape[1]
    q = nm.matmul(r, weights.w_q_r)
    k = nm.matmul(r, weights.w_k_r)
    if weights.w_q_s is not None:
        s = nm.embedding(table, plane_ids)
        q = nm.add(q, nm.matmul(s, weights.w_q_s))
        k = nm.add(k, nm.matmul(s, weights.w_k_s))
    v = nm.matmul(r, weights.w_v)
    scores = nm.scale(nm.matmul(q, nm.transpose_last2(k)), 1.0 / math.sqrt(d_h))
    attn = nm.masked_softmax(scores, mask_allowed)
    return nm.matmul(attn, v)


def token_only_head_forward(r: nm.Tensor, weights: HeadWeights) -> nm.Tensor:
    """Reference head: plain scaled dot-product attention over the full context."""
    d_h = weights.w_q_r.data.shape[1]
    q = nm.matmul(r, weights.w_q_r)
    k = nm.matmul(r, weights.w_k_r)
    v = nm.matmul(r, weights.w_v)
    scores = nm.scale(nm.matmul(q, nm.transpose_last2(k)), 1.0 / math.sqrt(d_h))
    return nm.matmul(nm.softmax_last(scores), v)


def _heads_first(x: nm.Tensor, n: int, n_heads: int, d_h: int) -> nm.Tensor:
    return nm.transpose_axes(nm.reshape(x, (n, n_heads, d_h)), (1, 0, 2))


def _resolve_plane(planes, spec: HeadSpec, i: int) -> np.ndarray:
    plane_type = PLANE_TYPE_FOR_KIND[spec.kind]
    slots = planes.get(plane_type)
    if slots is None or spec.plane_slot >= len(slots):
        raise KeyError(
            f"head {i} ({spec.kind}) needs plane slot {spec.plane_slot} of type {plane_type}, "
            f"but only {0 if slots is None else len(slots)} are available"
        )
    return slots[spec.plane_slot]


def multi_head_forward(
    r: nm.Tensor,
    head_specs: list[HeadSpec],
    params: dict,
    prefix: str,
    planes: dict[str, list[np.ndarray]],
    masks: dict[str, np.ndarray],
    tables: dict[str, nm.Parameter],
    reference_token_only: bool = False,
    attn_dropout: tuple | None = None,  # (rate, seed, layer, step) after the softmax
) -> nm.Tensor:
    """All heads batched: label-augmented q/k, scope-masked scores, one output mix."""
    n_heads = len(head_specs)
    n, d_model = r.data.shape
    d_h = d_model // n_heads
    q = nm.matmul(r, params[f"{prefix}.w_q_r"])
    k = nm.matmul(r, params[f"{prefix}.w_k_r"])
    v = nm.matmul(r, params[f"{prefix}.w_v"])

    if any(s.semantic for s in head_specs) and not reference_token_only:
        zeros = nm.Tensor(np.zeros((n, d_h), dtype=r.data.dtype))
        q_parts, k_parts = [], []
        for i, spec in enumerate(head_specs):
            if not spec.semantic:
                q_parts.append(zeros)
                k_parts.append(zeros)
                continue
            plane_type = PLANE_TYPE_FOR_KIND[spec.kind]
            table = tables.get(plane_type)
            if table is None:
                raise KeyError(f"head {i} ({spec.kind}) has no label embedding table")
            s = nm.embedding(table, _resolve_plane(planes, spec, i))
            q_parts.append(nm.matmul(s, params[f"{prefix}.h{i}.w_q_s"]))
            k_parts.append(nm.matmul(s, params[f"{prefix}.h{i}.w_k_s"]))
        q = nm.add(q, nm.concat_last(q_parts))
        k = nm.add(k, nm.concat_last(k_parts))

    q3 = _heads_first(q, n, n_heads, d_h)
    k3 = _heads_first(k, n, n_heads, d_h)
    v3 = _heads_first(v, n, n_heads, d_h)
    scores = nm.scale(nm.matmul(q3, nm.transpose_last2(k3)), 1.0 / math.sqrt(d_h))
    if reference_token_only or all(s.mask_kind == "full" for s in head_specs):
        attn = nm.softmax_last(scores)
    else:
        stacked = []
        for i, spec in enumerate(head_specs):
            allowed = masks.get(spec.mask_kind)
            if allowed is None:
                raise KeyError(f"head {i} ({spec.kind}) needs mask kind {spec.mask_kind!r}")
            stacked.append(allowed)
        attn = nm.masked_softmax(scores, np.stack(stacked))
    if attn_dropout is not None:
        rate, seed, layer, step = attn_dropout
        attn = nm.dropout(attn, rate, True, seed, layer, step)
    out = nm.matmul(attn, v3)
    out = nm.reshape(nm.transpose_axes(out, (1, 0, 2)), (n, n_heads * d_h))
    return nm.matmul(out, params[f"{prefix}.w_o"])


def relational_memory_report(n: int, num_heads: int, d_h: int) -> dict[str, int]:
    """Side-input size of label-augmented heads vs the dense edge representation."""
    if n < 1 or num_heads < 1 or d_h < 1:
        raise ValueError("all arguments must be positive")
    return {
        "semantic_side_input_count": 2 * n * d_h * num_heads,
        "dense_edge_count": n * n * d_h * num_heads,
    }
