"""Dense-tensor kernel with reverse-mode gradients, Adam, EMA, and grad checking.

Float64 is the reference mode; float32 is an opt-in speed mode.  All ops are
defined on numpy arrays; the graph is built define-by-run and differentiated
by an iterative reverse traversal.
"""

from __future__ import annotations

import hashlib
import json
from contextlib import contextmanager
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

DEFAULT_DTYPE = np.float64
MASK_NEG = -1e30
LAYER_NORM_EPS = 1e-6

_grad_enabled = True


def set_default_dtype(dtype) -> None:
    """Switch tensor precision; float64 is the reference mode, float32 the speed mode."""
    global DEFAULT_DTYPE
    dt = np.dtype(dtype)
    if dt not in (np.dtype(np.float64), np.dtype(np.float32)):
        raise ValueError(f"unsupported dtype {dtype!r}")
    DEFAULT_DTYPE = dt.type


@contextmanager
def no_grad():
    """Disable graph recording (evaluation fast path)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class ShapeMismatch(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_acc")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=DEFAULT_DTYPE) if not isinstance(data, np.ndarray) else data
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Optional[Callable[[np.ndarray], tuple]] = None
        self._acc: Optional[np.ndarray] = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Reverse-accumulate gradients from this (scalar) tensor."""
        if self.data.size != 1:
            raise ValueError(f"backward requires a scalar, got shape {self.data.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and (p._backward is not None or p.requires_grad):
                    stack.append((p, False))
        self._acc = np.ones_like(self.data)
        for node in reversed(order):
            g = node._acc
            if g is None:
                continue
            node._acc = None
            if node.requires_grad:
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                node.grad += g
            if node._backward is None:
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None:
                    continue
                if parent._acc is None:
                    parent._acc = pg
                else:
                    parent._acc = parent._acc + pg


class Parameter(Tensor):
    __slots__ = ("name",)

    def __init__(self, data, name: str):
        super().__init__(np.asarray(data, dtype=DEFAULT_DTYPE), requires_grad=True)
        self.name = name


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    if _grad_enabled and any(p.requires_grad or p._backward is not None for p in parents):
        out = Tensor(data)
        out._parents = parents
        out._backward = backward_fn
        return out
    return Tensor(data)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=DEFAULT_DTYPE))


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data
    return _make(data, (a, b), lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data - b.data
    return _make(data, (a, b), lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data
    return _make(data, (a, b), lambda g: (
        _unbroadcast(g * b.data, a.data.shape),
        _unbroadcast(g * a.data, b.data.shape),
    ))


def scale(a: Tensor, c: float) -> Tensor:
    data = a.data * c
    return _make(data, (a,), lambda g: (g * c,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[-1] != b.data.shape[-2 if b.data.ndim > 1 else 0]:
        raise ShapeMismatch(f"matmul: inner dims differ, {a.data.shape} @ {b.data.shape}")
    data = a.data @ b.data

    def backward(g):
        ga = gb = None
        if a.requires_grad or a._backward is not None:
            ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape)
        if b.requires_grad or b._backward is not None:
            gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape)
        return ga, gb

    return _make(data, (a, b), backward)


def transpose_last2(x: Tensor) -> Tensor:
    data = np.swapaxes(x.data, -1, -2)
    return _make(data, (x,), lambda g: (np.swapaxes(g, -1, -2),))


def transpose_axes(x: Tensor, axes: tuple[int, ...]) -> Tensor:
    data = np.transpose(x.data, axes)
    inverse = tuple(int(i) for i in np.argsort(axes))
    return _make(data, (x,), lambda g: (np.transpose(g, inverse),))


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    data = x.data.reshape(shape)
    return _make(data, (x,), lambda g: (g.reshape(x.data.shape),))


def concat_last(parts: Sequence[Tensor]) -> Tensor:
    widths = [p.data.shape[-1] for p in parts]
    data = np.concatenate([p.data for p in parts], axis=-1)

    def backward(g):
        grads, ofs = [], 0
        for w in widths:
            grads.append(g[..., ofs:ofs + w])
            ofs += w
        return tuple(grads)

    return _make(data, tuple(parts), backward)


def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0.0)
    return _make(data, (x,), lambda g: (g * (x.data > 0),))


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    data = table.data[ids]

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids, g)
        return (gt,)

    return _make(data, (table,), backward)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    out = matmul(x, weight)
    return add(out, bias) if bias is not None else out


def philox(seed: int, *streams: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, streams); reproducible by construction."""
    material = b"".join((v & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little") for v in (seed, *streams))
    digest = hashlib.sha256(material).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@lru_cache(maxsize=4096)
def stream_id(name: str) -> int:
    """Stable 64-bit stream id for a layer name."""
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little")


_MASK64 = 0xFFFFFFFFFFFFFFFF


def _mix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def hash_uniform(key: int, size: int) -> np.ndarray:
    """Uniform [0, 1) floats from a counter-based 64-bit mix, keyed by ``key``."""
    idx = np.arange(size, dtype=np.uint64)
    z = np.uint64(key & _MASK64) + (idx + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return (z >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def dropout(x: Tensor, rate: float, train: bool, seed: int, layer: str, step: int) -> Tensor:
    """Deterministic dropout; the mask stream is keyed by (seed, layer, step)."""
    if not train or rate <= 0.0:
        return x
    key = _mix64(_mix64(seed & _MASK64) ^ stream_id(layer))
    key = _mix64(key ^ (step & _MASK64))
    keep = (hash_uniform(key, x.data.size).reshape(x.data.shape) >= rate).astype(x.data.dtype)
    scale_ = 1.0 / (1.0 - rate)
    data = x.data * keep * scale_
    return _make(data, (x,), lambda g: (g * keep * scale_,))


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    data = xhat * gain.data + bias.data

    def backward(g):
        d = x.data.shape[-1]
        dxhat = g * gain.data
        dx = inv_std * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        axes = tuple(range(g.ndim - 1))
        return dx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    return _make(data, (x, gain, bias), backward)


def _softmax_last(data: np.ndarray) -> np.ndarray:
    out = data - data.max(axis=-1, keepdims=True)
    np.exp(out, out=out)
    out /= out.sum(axis=-1, keepdims=True)
    return out


def softmax_last(x: Tensor) -> Tensor:
    y = _softmax_last(x.data)

    def backward(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return (y * (g - dot),)

    return _make(y, (x,), backward)


def masked_softmax(scores: Tensor, allowed: np.ndarray) -> Tensor:
    """Row softmax over allowed columns only; disallowed entries are exactly 0."""
    if allowed.shape not in (scores.data.shape, scores.data.shape[-2:]):
        raise ShapeMismatch(f"mask shape {allowed.shape} does not match scores {scores.data.shape}")
    surrogate = np.where(allowed, scores.data, MASK_NEG)
    y = _softmax_last(surrogate)
    y = np.where(allowed, y, 0.0)

    def backward(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return (y * (g - dot),)

    return _make(y, (scores,), backward)


def max_axis(x: Tensor, axis: int) -> Tensor:
    data = x.data.max(axis=axis)
    idx = np.expand_dims(x.data.argmax(axis=axis), axis)

    def backward(g):
        gx = np.zeros_like(x.data)
        np.put_along_axis(gx, idx, np.expand_dims(g, axis), axis)
        return (gx,)

    return _make(data, (x,), backward)


def sum_all(x: Tensor) -> Tensor:
    data = np.asarray(x.data.sum())
    return _make(data, (x,), lambda g: (np.broadcast_to(g, x.data.shape).copy(),))


def mean_all(x: Tensor) -> Tensor:
    return scale(sum_all(x), 1.0 / x.data.size)


def nll_from_logits(logits: Tensor, target: int) -> Tensor:
    """Negative log softmax probability of the target index (stable)."""
    z = logits.data
    m = z.max()
    lse = m + np.log(np.exp(z - m).sum())
    data = np.asarray(lse - z[target])

    def backward(g):
        p = np.exp(z - lse)
        p[target] -= 1.0
        return (g * p,)

    return _make(data, (logits,), backward)


def _depthwise_conv(x: Tensor, depth_kernel: Tensor) -> Tensor:
    """Per-channel 1d convolution over the length axis (-2), zero-padded to same length."""
    w = depth_kernel.data.shape[0]
    n = x.data.shape[-2]
    half = w // 2
    pad = [(0, 0)] * x.data.ndim
    pad[-2] = (half, half)
    xp = np.pad(x.data, pad)
    out = np.zeros_like(x.data)
    for t in range(w):
        out += xp[..., t:t + n, :] * depth_kernel.data[t]

    def backward(g):
        gp = np.pad(g, pad)
        dx = np.zeros_like(x.data)
        dk = np.zeros_like(depth_kernel.data)
        for t in range(w):
            dx += gp[..., (w - 1 - t):(w - 1 - t) + n, :] * depth_kernel.data[t]
            dk[t] = (g * xp[..., t:t + n, :]).reshape(-1, x.data.shape[-1]).sum(axis=0)
        return dx, dk

    return _make(out, (x, depth_kernel), backward)


def depthwise_separable_conv1d(
    x: Tensor,
    depth_kernel: Tensor,
    point_kernel: Tensor,
    bias: Optional[Tensor] = None,
) -> Tensor:
    """Depthwise pass (width x d) then 1x1 pointwise mix (d x d_out), same-length."""
    if depth_kernel.data.shape[0] % 2 == 0:
        raise ShapeMismatch(f"kernel width must be odd, got {depth_kernel.data.shape[0]}")
    if depth_kernel.data.shape[1] != x.data.shape[-1]:
        raise ShapeMismatch(
            f"depth kernel channels {depth_kernel.data.shape[1]} != input channels {x.data.shape[-1]}"
        )
    out = matmul(_depthwise_conv(x, depth_kernel), point_kernel)
    return add(out, bias) if bias is not None else out


def xavier_uniform(shape: tuple[int, ...], rng: np.random.Generator, gain: float = 1.0) -> np.ndarray:
    fan_in, fan_out = shape[0], shape[-1]
    bound = gain * np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(DEFAULT_DTYPE)


class AdamState:
    """Adam with bias correction; zeroes gradients after each step."""

    def __init__(self, params: dict[str, Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.step_count = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def step(self) -> None:
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.step_count
        bc2 = 1.0 - b2 ** self.step_count
        for name, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.grad = None


class EmaState:
    """Exponential moving average of parameter values."""

    def __init__(self, params: dict[str, Parameter], decay: float):
        if not 0.0 <= decay <= 1.0:
            raise ValueError(f"EMA decay must lie in [0, 1], got {decay}")
        self.decay = decay
        self.shadow = {name: p.data.copy() for name, p in params.items()}

    def update(self, params: dict[str, Parameter]) -> None:
        d = self.decay
        for name, p in params.items():
            s = self.shadow[name]
            s *= d
            s += (1.0 - d) * p.data

    @contextmanager
    def swapped_in(self, params: dict[str, Parameter]):
        """Temporarily evaluate with shadow values."""
        saved = {name: p.data for name, p in params.items()}
        for name, p in params.items():
            p.data = self.shadow[name]
        try:
            yield
        finally:
            for name, p in params.items():
                p.data = saved[name]


def grad_check(f: Callable[[], Tensor], params: Iterable[Tensor], h: float = 1e-5) -> float:
    """Compare analytic gradients of the scalar f() against central differences.

    Returns the max relative error with denominator max(|analytic|, |numeric|, 1e-8).
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    loss = f()
    loss.backward()
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]
    max_rel = 0.0
    with no_grad():
        for p, a in zip(params, analytic):
            flat = p.data.reshape(-1)
            aflat = a.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = f().item()
                flat[i] = orig - h
                down = f().item()
                flat[i] = orig
                numeric = (up - down) / (2.0 * h)
                rel = abs(aflat[i] - numeric) / max(abs(aflat[i]), abs(numeric), 1e-8)
                max_rel = max(max_rel, rel)
    for p in params:
        p.zero_grad()
    return max_rel


def save_checkpoint(params: dict[str, Parameter], prefix) -> None:
    """Little-endian float64 blob plus a manifest of names/shapes/byte offsets."""
    prefix = str(prefix)
    entries = []
    offset = 0
    with open(prefix + ".bin", "wb") as f:
        for name in sorted(params):
            arr = np.ascontiguousarray(params[name].data, dtype="<f8")
            raw = arr.tobytes()
            entries.append({
                "name": name,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            })
            f.write(raw)
            offset += len(raw)
    manifest = {"format": "param-checkpoint", "version": 1, "dtype": "<f8", "arrays": entries}
    with open(prefix + ".manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, separators=(",", ":"))


def load_checkpoint(params: dict[str, Parameter], prefix) -> None:
    prefix = str(prefix)
    with open(prefix + ".manifest.json", "r", encoding="utf-8") as f:
        manifest = json.load(f)
    with open(prefix + ".bin", "rb") as f:
        blob = f.read()
    by_name = {e["name"]: e for e in manifest["arrays"]}
    for name, p in params.items():
        if name not in by_name:
            raise ValueError(f"checkpoint missing parameter {name!r}")
        entry = by_name[name]
        if tuple(entry["shape"]) != p.data.shape:
            raise ValueError(
                f"checkpoint shape {tuple(entry['shape'])} for {name!r} does not match model shape {p.data.shape}"
            )
        arr = np.frombuffer(blob, dtype="<f8", count=p.data.size, offset=entry["offset"])
        p.data = arr.reshape(p.data.shape).astype(DEFAULT_DTYPE).copy()
