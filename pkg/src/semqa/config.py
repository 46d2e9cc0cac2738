"""Run-configuration files: strict parsing, resolution, and semantic hashing.

Configs are JSON; unknown keys are rejected with a precise path.  The config
hash covers the fully resolved semantics (defaults applied), so formatting
and key order never change it, while any semantic field does.  The seed and
output directory stay outside the hash; run directories are named
``<hash>-s<seed>``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from .encoder import PRESETS, StackConfig
from .model import ModelConfig, TrainConfig

HASH_LENGTH = 12


class ConfigError(ValueError):
    pass


def _check_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}; allowed: {sorted(allowed)}")


_STACK_KEYS = {"preset", "num_heads", "num_blocks", "enhanced_indices", "head_mix",
               "mask_overrides", "num_convs", "conv_kernel_width", "attn_dropout",
               "no_sense", "sent_span_k", "passes"}

_MODEL_KEYS = {"d_model", "word_dim", "char_dim", "char_conv_width", "max_chars",
               "max_answer_len", "dropout", "label_dim", "embed_convs", "embed_conv_width"}

_TRAIN_KEYS = {"lr", "max_epochs", "patience", "halve_every", "batch_size",
               "context_cap", "ema_decay", "use_ema"}


def stack_config_from_dict(d, d_model: int = 32) -> StackConfig:
    """Build a stack config from a preset name, an inline dict, or a mix of both."""
    if isinstance(d, str):
        d = {"preset": d}
    _check_keys(d, _STACK_KEYS, "stack")
    kwargs: dict = {"d_model": d_model}
    preset = d.get("preset", "")
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"stack.preset: unknown preset {preset!r}; "
                              f"available: {', '.join(sorted(PRESETS))}")
        mix, no_sense = PRESETS[preset]
        kwargs["head_mix"] = mix
        kwargs["no_sense"] = no_sense
        kwargs["preset_name"] = preset
    for key, value in d.items():
        if key == "preset":
            continue
        if key == "head_mix":
            value = tuple((kind, int(count)) for kind, count in value)
        elif key == "enhanced_indices":
            value = tuple(int(i) for i in value)
        kwargs[key] = value
    try:
        return StackConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"stack: {exc}") from exc


@dataclass
class RunConfig:
    seed: int
    precision: str
    data_dir: str
    annotations: str
    out_dir: str
    model: ModelConfig
    train: TrainConfig
    word_vectors: str | None = None
    resolved: dict = field(repr=False, default_factory=dict)

    def semantic_hash(self) -> str:
        return config_hash(self.resolved)


def _resolved_dict(cfg: "RunConfig") -> dict:
    model = asdict(cfg.model)
    stack = model.pop("stack")
    stack["enhanced_indices"] = list(stack["enhanced_indices"])
    stack["head_mix"] = [list(pair) for pair in stack["head_mix"]]
    train = asdict(cfg.train)
    train.pop("seed")  # the seed names the run directory, not the config hash
    return {
        "precision": cfg.precision,
        "data_dir": cfg.data_dir,
        "annotations": cfg.annotations,
        "word_vectors": cfg.word_vectors,
        "model": model,
        "stack": stack,
        "train": train,
    }


def config_hash(resolved: dict) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:HASH_LENGTH]


def run_config_from_dict(raw: dict, seed_override: int | None = None,
                         out_override: str | None = None,
                         preset_override: str | None = None) -> RunConfig:
    _check_keys(raw, {"seed", "precision", "paths", "model", "stack", "train"}, "config")
    paths = raw.get("paths", {})
    _check_keys(paths, {"data_dir", "annotations", "out_dir", "word_vectors"}, "config.paths")
    for required in ("data_dir", "annotations", "out_dir"):
        if required not in paths:
            raise ConfigError(f"config.paths: missing required key {required!r}")

    model_raw = dict(raw.get("model", {}))
    _check_keys(model_raw, _MODEL_KEYS, "config.model")
    train_raw = dict(raw.get("train", {}))
    _check_keys(train_raw, _TRAIN_KEYS, "config.train")

    precision = raw.get("precision", "float64")
    if precision not in ("float64", "float32"):
        raise ConfigError(f"config.precision: expected 'float64' or 'float32', got {precision!r}")

    seed = seed_override if seed_override is not None else raw.get("seed", 1)
    stack_raw = raw.get("stack", "base")
    if preset_override is not None:
        stack_raw = dict(stack_raw) if isinstance(stack_raw, dict) else {}
        stack_raw["preset"] = preset_override
    d_model = model_raw.get("d_model", 32)
    stack = stack_config_from_dict(stack_raw, d_model=d_model)

    try:
        model = ModelConfig(stack=stack, **model_raw)
        train = TrainConfig(seed=seed, **train_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    cfg = RunConfig(
        seed=seed,
        precision=precision,
        data_dir=paths["data_dir"],
        annotations=paths["annotations"],
        out_dir=out_override if out_override is not None else paths["out_dir"],
        model=model,
        train=train,
        word_vectors=paths.get("word_vectors"),
    )
    cfg.resolved = _resolved_dict(cfg)
    return cfg


def load_run_config(path, **overrides) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc
    try:
        return run_config_from_dict(raw, **overrides)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
