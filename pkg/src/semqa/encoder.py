"""QANet-style encoder blocks and the 7-block modeling stack.

A block is positional encoding + K depthwise-separable conv sublayers +
multi-head self-attention + feed-forward, each sublayer pre-layer-norm with a
residual connection.  Knowledge-enhanced blocks sit at fixed stack positions
(default 1, 3, 5 of 7); the rest are base blocks whose heads are all
annotation-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics as nm
from .attention import HeadSpec, NUM_HEADS, init_multi_head, multi_head_forward


@dataclass(frozen=True)
class DropoutCtx:
    """Names one deterministic dropout stream per (seed, layer, step)."""

    train: bool = False
    rate: float = 0.0
    seed: int = 0
    step: int = 0

    def apply(self, x: nm.Tensor, layer: str) -> nm.Tensor:
        return nm.dropout(x, self.rate, self.train, self.seed, layer, self.step)


@dataclass(frozen=True)
class EncoderBlockConfig:
    num_convs: int
    conv_kernel_width: int
    d_model: int
    head_specs: tuple[HeadSpec, ...]
    kind: str = "base"
    attn_dropout: float = 0.0

    def __post_init__(self):
        if self.kind not in ("base", "enhanced"):
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.conv_kernel_width % 2 == 0:
            raise ValueError(f"conv kernel width must be odd, got {self.conv_kernel_width}")
        if self.kind == "base" and any(s.kind != "No" for s in self.head_specs):
            raise ValueError("base blocks must use only 'No' heads")
        if self.d_model % len(self.head_specs):
            raise ValueError(f"d_model {self.d_model} not divisible by {len(self.head_specs)} heads")


# preset name -> (head kinds and counts for enhanced blocks, sense-stripped discourse labels)
PRESETS: dict[str, tuple[tuple[tuple[str, int], ...], bool]] = {
    "base": ((), False),
    "SRL": ((("SRL", 3),), False),
    "DR(Exp)": ((("DR_Exp", 3),), False),
    "Coref": ((("Coref", 2),), False),
    "SRL+DR(Exp)": ((("SRL", 3), ("DR_Exp", 2)), False),
    "SRL+DR(All)+Coref": ((("SRL", 2), ("DR_Exp", 2), ("DR_NonExp", 2), ("Coref", 1)), False),
    "SentSpan3": ((("SentSpan", 3),), False),
    "DR(Exp)-NoSense": ((("DR_Exp", 3),), True),
}


def build_head_specs(
    mix: tuple[tuple[str, int], ...],
    num_heads: int = NUM_HEADS,
    mask_overrides: dict[str, str] | None = None,
) -> tuple[HeadSpec, ...]:
    """Expand a (kind, count) mix to per-head specs, padding with 'No' heads.

    SRL heads take successive plane slots (one semantic view each); pair
    discourse heads alternate between the even and odd parity planes; other
    kinds share slot 0.
    """
    overrides = mask_overrides or {}
    specs: list[HeadSpec] = []
    for kind, count in mix:
        for j in range(count):
            if kind == "SRL":
                slot = j
            elif kind == "DR_NonExp":
                slot = j % 2
            else:
                slot = 0
            specs.append(HeadSpec(kind, slot, overrides.get(kind, "")))
    if len(specs) > num_heads:
        raise ValueError(f"head mix requests {len(specs)} heads but the layer has {num_heads}")
    while len(specs) < num_heads:
        specs.append(HeadSpec("No"))
    return tuple(specs)


@dataclass(frozen=True)
class StackConfig:
    d_model: int = 32
    num_heads: int = NUM_HEADS
    num_blocks: int = 7
    enhanced_indices: tuple[int, ...] = (1, 3, 5)
    head_mix: tuple[tuple[str, int], ...] = ()
    mask_overrides: dict[str, str] = field(default_factory=dict)
    num_convs: int = 2
    conv_kernel_width: int = 5
    attn_dropout: float = 0.0
    no_sense: bool = False
    sent_span_k: int = 3
    passes: int = 3
    preset_name: str = ""

    def __post_init__(self):
        for i in self.enhanced_indices:
            if not 0 <= i < self.num_blocks:
                raise ValueError(f"enhanced index {i} out of range for {self.num_blocks} blocks")

    def block_configs(self) -> tuple[EncoderBlockConfig, ...]:
        enhanced = set(self.enhanced_indices) if self.head_mix else set()
        blocks = []
        for i in range(self.num_blocks):
            if i in enhanced:
                specs = build_head_specs(self.head_mix, self.num_heads, self.mask_overrides)
                kind = "enhanced"
            else:
                specs = build_head_specs((), self.num_heads)
                kind = "base"
            blocks.append(EncoderBlockConfig(
                num_convs=self.num_convs,
                conv_kernel_width=self.conv_kernel_width,
                d_model=self.d_model,
                head_specs=specs,
                kind=kind,
                attn_dropout=self.attn_dropout,
            ))
        return tuple(blocks)

    def srl_slots_needed(self) -> int:
        counts = [c for k, c in self.head_mix if k == "SRL"]
        return max(counts) if counts else 1

    def semantic_kinds(self) -> set[str]:
        return {k for k, _ in self.head_mix}


def stack_config_from_preset(name: str, **overrides) -> StackConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    mix, no_sense = PRESETS[name]
    return StackConfig(head_mix=mix, no_sense=no_sense, preset_name=name, **overrides)


_pe_cache: dict[tuple, np.ndarray] = {}


def positional_encoding(n: int, d_model: int) -> np.ndarray:
    """Sinusoidal position signal: sin on even dims, cos on odd dims."""
    if d_model % 2:
        raise ValueError(f"d_model must be even, got {d_model}")
    key = (n, d_model, np.dtype(nm.DEFAULT_DTYPE).name)
    cached = _pe_cache.get(key)
    if cached is not None:
        return cached
    pos = np.arange(n, dtype=nm.DEFAULT_DTYPE)[:, None]
    dim = np.arange(0, d_model, 2, dtype=nm.DEFAULT_DTYPE)[None, :]
    angle = pos / np.power(10000.0, dim / d_model)
    pe = np.zeros((n, d_model), dtype=nm.DEFAULT_DTYPE)
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    pe.setflags(write=False)
    _pe_cache[key] = pe
    return pe


def init_encoder_block(params: dict, prefix: str, cfg: EncoderBlockConfig, d_i: int,
                       rng: np.random.Generator) -> None:
    d = cfg.d_model
    for c in range(cfg.num_convs):
        params[f"{prefix}.ln_conv{c}.g"] = nm.Parameter(np.ones(d), f"{prefix}.ln_conv{c}.g")
        params[f"{prefix}.ln_conv{c}.b"] = nm.Parameter(np.zeros(d), f"{prefix}.ln_conv{c}.b")
        params[f"{prefix}.conv{c}.depth"] = nm.Parameter(
            nm.xavier_uniform((cfg.conv_kernel_width, d), rng), f"{prefix}.conv{c}.depth")
        params[f"{prefix}.conv{c}.point"] = nm.Parameter(
            nm.xavier_uniform((d, d), rng), f"{prefix}.conv{c}.point")
        params[f"{prefix}.conv{c}.bias"] = nm.Parameter(np.zeros(d), f"{prefix}.conv{c}.bias")
    params[f"{prefix}.ln_attn.g"] = nm.Parameter(np.ones(d), f"{prefix}.ln_attn.g")
    params[f"{prefix}.ln_attn.b"] = nm.Parameter(np.zeros(d), f"{prefix}.ln_attn.b")
    init_multi_head(params, f"{prefix}.attn", d, list(cfg.head_specs), d_i, rng)
    params[f"{prefix}.ln_ffn.g"] = nm.Parameter(np.ones(d), f"{prefix}.ln_ffn.g")
    params[f"{prefix}.ln_ffn.b"] = nm.Parameter(np.zeros(d), f"{prefix}.ln_ffn.b")
    params[f"{prefix}.ffn.w1"] = nm.Parameter(nm.xavier_uniform((d, d), rng), f"{prefix}.ffn.w1")
    params[f"{prefix}.ffn.b1"] = nm.Parameter(np.zeros(d), f"{prefix}.ffn.b1")
    params[f"{prefix}.ffn.w2"] = nm.Parameter(nm.xavier_uniform((d, d), rng), f"{prefix}.ffn.w2")
    params[f"{prefix}.ffn.b2"] = nm.Parameter(np.zeros(d), f"{prefix}.ffn.b2")


def encoder_block_forward(
    x: nm.Tensor,
    cfg: EncoderBlockConfig,
    params: dict,
    prefix: str,
    planes: dict[str, list[np.ndarray]],
    masks: dict[str, np.ndarray],
    tables: dict,
    drop: DropoutCtx = DropoutCtx(),
    use_pe: bool = True,
    reference_token_only: bool = False,
    drop_scope: str = "",
) -> nm.Tensor:
    scope = drop_scope or prefix
    n = x.data.shape[-2]
    if use_pe:
        x = nm.add(x, nm.Tensor(positional_encoding(n, cfg.d_model)))
    for c in range(cfg.num_convs):
        y = nm.layer_norm(x, params[f"{prefix}.ln_conv{c}.g"], params[f"{prefix}.ln_conv{c}.b"])
        y = nm.depthwise_separable_conv1d(
            y, params[f"{prefix}.conv{c}.depth"], params[f"{prefix}.conv{c}.point"],
            params[f"{prefix}.conv{c}.bias"])
        y = drop.apply(y, f"{scope}.conv{c}")
        x = nm.add(x, y)
    y = nm.layer_norm(x, params[f"{prefix}.ln_attn.g"], params[f"{prefix}.ln_attn.b"])
    attn_drop = None
    if drop.train and cfg.attn_dropout > 0.0:
        attn_drop = (cfg.attn_dropout, drop.seed, f"{scope}.attn_softmax", drop.step)
    try:
        y = multi_head_forward(
            y, list(cfg.head_specs), params, f"{prefix}.attn", planes, masks, tables,
            reference_token_only=reference_token_only, attn_dropout=attn_drop)
    except KeyError as exc:
        raise KeyError(f"block {prefix}: {exc.args[0]}") from exc
    y = drop.apply(y, f"{scope}.attn")
    x = nm.add(x, y)
    y = nm.layer_norm(x, params[f"{prefix}.ln_ffn.g"], params[f"{prefix}.ln_ffn.b"])
    y = nm.linear(y, params[f"{prefix}.ffn.w1"], params[f"{prefix}.ffn.b1"])
    y = nm.relu(y)
    y = nm.linear(y, params[f"{prefix}.ffn.w2"], params[f"{prefix}.ffn.b2"])
    y = drop.apply(y, f"{scope}.ffn")
    return nm.add(x, y)


def init_modeling_stack(params: dict, prefix: str, stack: StackConfig, d_i: int,
                        rng: np.random.Generator) -> None:
    for i, cfg in enumerate(stack.block_configs()):
        init_encoder_block(params, f"{prefix}.block{i}", cfg, d_i, rng)


def modeling_stack_forward(
    x: nm.Tensor,
    stack: StackConfig,
    params: dict,
    prefix: str,
    planes: dict[str, list[np.ndarray]],
    masks: dict[str, np.ndarray],
    tables: dict,
    drop: DropoutCtx = DropoutCtx(),
    passes: int | None = None,
    reference_token_only: bool = False,
) -> list[nm.Tensor]:
    """Run the shared-weight block stack repeatedly, returning each pass output."""
    passes = stack.passes if passes is None else passes
    configs = stack.block_configs()
    outputs = []
    for p in range(passes):
        for i, cfg in enumerate(configs):
            x = encoder_block_forward(
                x, cfg, params, f"{prefix}.block{i}", planes, masks, tables, drop=drop,
                reference_token_only=reference_token_only,
                drop_scope=f"{prefix}.pass{p}.block{i}")
        outputs.append(x)
    return outputs


def param_count(params: dict, prefix: str) -> int:
    return sum(p.data.size for name, p in params.items() if name.startswith(prefix))
