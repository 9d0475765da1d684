"""Small trainable transformer encoder for classification.

Pipeline: token embedding + learned positional embedding, a stack of
encoder layers (multi-head scaled dot-product attention, then a
position-wise feed-forward block with the ReLU applied to its final output),
per-dimension max pooling over non-PAD positions, and a linear classifier.

Two wiring modes:
  * ``use_residual_norm=True`` (default) adds residual connections and layer
    normalization after the attention and feed-forward blocks; deeper stacks
    do not train well without them.
  * ``use_residual_norm=False`` chains the blocks directly, which is the
    form the gradient tests exercise.

PAD handling: PAD positions are masked out of the attention keys (score
-inf) and out of the pooling max, so trailing padding never influences the
logits. A fully-PAD example pools to a zero vector, making its logits equal
to the classifier bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, ShapeMismatchError
from ..numerics import Rng, seeded_init

EMBED_INIT_RANGE = 0.1
LN_EPS = 1e-5


@dataclass(frozen=True)
class TransformerConfig:
    vocab_size: int
    num_classes: int
    max_len: int
    embed_dim: int = 64
    num_heads: int = 4
    num_layers: int = 2
    ffn_dim: int = 256
    use_residual_norm: bool = True

    def __post_init__(self):
        if self.vocab_size < 2 or self.num_classes < 2:
            raise ConfigurationError(
                f"vocab_size and num_classes must be >= 2, got "
                f"{self.vocab_size} and {self.num_classes}"
            )
        if self.max_len < 1 or self.num_layers < 0 or self.ffn_dim < 1:
            raise ConfigurationError("max_len/ffn_dim must be positive, num_layers >= 0")
        if self.num_heads < 1 or self.embed_dim % self.num_heads != 0:
            raise ConfigurationError(
                f"embed_dim {self.embed_dim} must be divisible by num_heads {self.num_heads}"
            )

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.num_heads

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "num_classes": self.num_classes,
            "max_len": self.max_len,
            "embed_dim": self.embed_dim,
            "num_heads": self.num_heads,
            "num_layers": self.num_layers,
            "ffn_dim": self.ffn_dim,
            "use_residual_norm": self.use_residual_norm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransformerConfig":
        return cls(
            vocab_size=int(d["vocab_size"]),
            num_classes=int(d["num_classes"]),
            max_len=int(d["max_len"]),
            embed_dim=int(d["embed_dim"]),
            num_heads=int(d["num_heads"]),
            num_layers=int(d["num_layers"]),
            ffn_dim=int(d["ffn_dim"]),
            use_residual_norm=bool(d["use_residual_norm"]),
        )


def _glorot(shape: tuple[int, int], rng: Rng) -> np.ndarray:
    limit = float(np.sqrt(6.0 / (shape[0] + shape[1])))
    return seeded_init(shape, -limit, limit, rng)


def init_transformer_params(cfg: TransformerConfig, rng: Rng) -> dict[str, np.ndarray]:
    """Fixed draw order: embed, pos, then per layer wq/wk/wv/wo and the two
    feed-forward weights, then the classifier. Biases start at zero, layer
    norm gains at one."""
    d = cfg.embed_dim
    params: dict[str, np.ndarray] = {}
    params["embed"] = seeded_init((cfg.vocab_size, d), -EMBED_INIT_RANGE, EMBED_INIT_RANGE, rng)
    params["pos"] = seeded_init((cfg.max_len, d), -EMBED_INIT_RANGE, EMBED_INIT_RANGE, rng)
    for i in range(cfg.num_layers):
        p = f"layer{i}."
        params[p + "wq"] = _glorot((d, d), rng)
        params[p + "wk"] = _glorot((d, d), rng)
        params[p + "wv"] = _glorot((d, d), rng)
        params[p + "wo"] = _glorot((d, d), rng)
        params[p + "ffn_w1"] = _glorot((cfg.ffn_dim, d), rng)
        params[p + "ffn_b1"] = np.zeros(cfg.ffn_dim)
        params[p + "ffn_w2"] = _glorot((d, cfg.ffn_dim), rng)
        params[p + "ffn_b2"] = np.zeros(d)
        if cfg.use_residual_norm:
            params[p + "ln1_g"] = np.ones(d)
            params[p + "ln1_b"] = np.zeros(d)
            params[p + "ln2_g"] = np.ones(d)
            params[p + "ln2_b"] = np.zeros(d)
    params["cls_w"] = _glorot((cfg.num_classes, d), rng)
    params["cls_b"] = np.zeros(cfg.num_classes)
    return params


def _split_heads(t: np.ndarray, nh: int) -> np.ndarray:
    b, length, d = t.shape
    return t.reshape(b, length, nh, d // nh).transpose(0, 2, 1, 3)


def _merge_heads(t4: np.ndarray) -> np.ndarray:
    b, nh, length, dk = t4.shape
    return np.ascontiguousarray(t4.transpose(0, 2, 1, 3)).reshape(b, length, nh * dk)


def masked_softmax(scores: np.ndarray, key_allowed: np.ndarray | None) -> np.ndarray:
    """Row softmax over the last axis with disallowed keys forced to -inf.

    ``key_allowed`` broadcasts against the score shape; every row must keep
    at least one allowed key.
    """
    if key_allowed is not None:
        scores = np.where(key_allowed, scores, -np.inf)
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _attn_forward(x, wq, wk, wv, wo, nh, key_allowed):
    b, length, d = x.shape
    dk = d // nh
    scale = 1.0 / np.sqrt(dk)
    q4 = _split_heads(x @ wq, nh)
    k4 = _split_heads(x @ wk, nh)
    v4 = _split_heads(x @ wv, nh)
    scores = (q4 @ k4.transpose(0, 1, 3, 2)) * scale
    mask = key_allowed[:, None, None, :] if key_allowed is not None else None
    attn = masked_softmax(scores, mask)
    zc = _merge_heads(attn @ v4)
    out = zc @ wo
    return out, (x, q4, k4, v4, attn, zc)


def _attn_backward(cache, g_out, wq, wk, wv, wo, nh):
    x, q4, k4, v4, attn, zc = cache
    b, length, d = x.shape
    dk = d // nh
    scale = 1.0 / np.sqrt(dk)
    x2 = x.reshape(-1, d)
    g2 = g_out.reshape(-1, d)
    g_wo = zc.reshape(-1, d).T @ g2
    g_z4 = _split_heads(g_out @ wo.T, nh)
    g_attn = g_z4 @ v4.transpose(0, 1, 3, 2)
    g_v4 = attn.transpose(0, 1, 3, 2) @ g_z4
    # softmax backward; masked keys have attn == 0 so they get zero gradient
    g_scores = attn * (g_attn - (g_attn * attn).sum(axis=-1, keepdims=True))
    g_scores *= scale
    g_q4 = g_scores @ k4
    g_k4 = g_scores.transpose(0, 1, 3, 2) @ q4
    g_q = _merge_heads(g_q4).reshape(-1, d)
    g_k = _merge_heads(g_k4).reshape(-1, d)
    g_v = _merge_heads(g_v4).reshape(-1, d)
    grads = {
        "wq": x2.T @ g_q,
        "wk": x2.T @ g_k,
        "wv": x2.T @ g_v,
        "wo": g_wo,
    }
    g_x = (g_q @ wq.T + g_k @ wk.T + g_v @ wv.T).reshape(b, length, d)
    return g_x, grads


def _ffn_forward(x, w1, b1, w2, b2):
    u = x @ w1.T + b1
    v = u @ w2.T + b2
    return np.maximum(v, 0.0), (x, u, v > 0.0)


def _ffn_backward(cache, g_out, w1, w2):
    x, u, relu_mask = cache
    d_in = x.shape[-1]
    g_v = (g_out * relu_mask).reshape(-1, w2.shape[0])
    grads = {
        "ffn_w2": g_v.T @ u.reshape(-1, w2.shape[1]),
        "ffn_b2": g_v.sum(axis=0),
    }
    g_u = (g_v @ w2).reshape(u.shape)
    g_u2 = g_u.reshape(-1, w1.shape[0])
    grads["ffn_w1"] = g_u2.T @ x.reshape(-1, d_in)
    grads["ffn_b1"] = g_u2.sum(axis=0)
    g_x = (g_u2 @ w1).reshape(x.shape)
    return g_x, grads


def _ln_forward(x, gain, bias):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return xhat * gain + bias, (xhat, inv)


def _ln_backward(cache, g_out, gain):
    xhat, inv = cache
    g_gain = (g_out * xhat).sum(axis=(0, 1))
    g_bias = g_out.sum(axis=(0, 1))
    g_xhat = g_out * gain
    g_x = inv * (
        g_xhat
        - g_xhat.mean(axis=-1, keepdims=True)
        - xhat * (g_xhat * xhat).mean(axis=-1, keepdims=True)
    )
    return g_x, g_gain, g_bias


def scaled_dot_attention(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    key_mask: np.ndarray | None = None,
    return_weights: bool = False,
):
    """softmax(q k^T / sqrt(d_k)) v for single matrices.

    ``key_mask`` (bool, per key row) excludes keys from attention; it must
    keep at least one key.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ShapeMismatchError(
            f"attention needs 2-D q, k, v; got {q.shape}, {k.shape}, {v.shape}"
        )
    if q.shape[1] != k.shape[1]:
        raise ShapeMismatchError(f"q and k widths differ: {q.shape} vs {k.shape}")
    if k.shape[0] != v.shape[0]:
        raise ShapeMismatchError(f"k and v row counts differ: {k.shape} vs {v.shape}")
    if key_mask is not None and not np.any(key_mask):
        raise ConfigurationError("key_mask excludes every key")
    scores = (q @ k.T) / np.sqrt(q.shape[1])
    weights = masked_softmax(scores, None if key_mask is None else np.asarray(key_mask, bool))
    out = weights @ v
    return (out, weights) if return_weights else out


def multi_head_attention(
    h_seq: np.ndarray, params: dict[str, np.ndarray], layer: int, heads: int
) -> np.ndarray:
    """One full multi-head attention block over a single (seq, d) input.

    Head i reads contiguous column block i of the stacked wq/wk/wv
    projections; outputs are concatenated and passed through wo.
    """
    h_seq = np.asarray(h_seq, dtype=np.float64)
    if h_seq.ndim != 2:
        raise ShapeMismatchError(f"expected (seq, d) input, got {h_seq.shape}")
    d = h_seq.shape[1]
    if heads < 1 or d % heads != 0:
        raise ConfigurationError(f"width {d} not divisible into {heads} heads")
    p = f"layer{layer}."
    out, _ = _attn_forward(
        h_seq[None, :, :], params[p + "wq"], params[p + "wk"], params[p + "wv"],
        params[p + "wo"], heads, key_allowed=None,
    )
    return out[0]


def ffn(z: np.ndarray, params: dict[str, np.ndarray], layer: int) -> np.ndarray:
    """Position-wise feed-forward block: relu(w2 (w1 z + b1) + b2)."""
    z = np.asarray(z, dtype=np.float64)
    p = f"layer{layer}."
    w1, w2 = params[p + "ffn_w1"], params[p + "ffn_w2"]
    if z.ndim != 2 or z.shape[1] != w1.shape[1]:
        raise ShapeMismatchError(
            f"ffn input {z.shape} does not match weight width {w1.shape[1]}"
        )
    out, _ = _ffn_forward(z, w1, params[p + "ffn_b1"], w2, params[p + "ffn_b2"])
    return out


@dataclass
class TransformerCache:
    ids: np.ndarray
    lengths: np.ndarray
    layer_caches: list
    pooled_input: np.ndarray   # hidden states the pooling max ran over
    pool_argmax: np.ndarray
    has_tokens: np.ndarray
    pooled: np.ndarray
    version: int = -1


def transformer_forward(
    params: dict[str, np.ndarray],
    cfg: TransformerConfig,
    ids: np.ndarray,
    lengths: np.ndarray,
) -> tuple[np.ndarray, TransformerCache]:
    b, length = ids.shape
    if length > cfg.max_len:
        raise ConfigurationError(f"sequence length {length} exceeds max_len {cfg.max_len}")
    if ids.max(initial=0) >= cfg.vocab_size:
        raise ConfigurationError(
            f"token id {int(ids.max())} out of range for vocab size {cfg.vocab_size}"
        )
    x = params["embed"][ids] + params["pos"][:length]
    pos_valid = np.arange(length)[None, :] < lengths[:, None]
    has_tokens = lengths > 0
    # a fully-PAD row would leave softmax with no keys; let it attend anywhere,
    # its output is discarded by the pooling mask below
    key_allowed = np.where(has_tokens[:, None], pos_valid, True)

    layer_caches = []
    for i in range(cfg.num_layers):
        p = f"layer{i}."
        a_out, a_cache = _attn_forward(
            x, params[p + "wq"], params[p + "wk"], params[p + "wv"], params[p + "wo"],
            cfg.num_heads, key_allowed,
        )
        if cfg.use_residual_norm:
            x1, ln1_cache = _ln_forward(x + a_out, params[p + "ln1_g"], params[p + "ln1_b"])
        else:
            x1, ln1_cache = a_out, None
        f_out, f_cache = _ffn_forward(
            x1, params[p + "ffn_w1"], params[p + "ffn_b1"],
            params[p + "ffn_w2"], params[p + "ffn_b2"],
        )
        if cfg.use_residual_norm:
            x2, ln2_cache = _ln_forward(x1 + f_out, params[p + "ln2_g"], params[p + "ln2_b"])
        else:
            x2, ln2_cache = f_out, None
        layer_caches.append((a_cache, ln1_cache, f_cache, ln2_cache))
        x = x2

    masked = np.where(pos_valid[:, :, None], x, -np.inf)
    pool_argmax = masked.argmax(axis=1)
    pooled = np.where(has_tokens[:, None], masked.max(axis=1), 0.0)
    logits = pooled @ params["cls_w"].T + params["cls_b"]
    cache = TransformerCache(
        ids=ids, lengths=lengths, layer_caches=layer_caches, pooled_input=x,
        pool_argmax=pool_argmax, has_tokens=has_tokens, pooled=pooled,
    )
    return logits, cache


def transformer_backward(
    params: dict[str, np.ndarray],
    cfg: TransformerConfig,
    cache: TransformerCache,
    grad_logits: np.ndarray,
) -> dict[str, np.ndarray]:
    b, length = cache.ids.shape
    grads: dict[str, np.ndarray] = {
        "cls_w": grad_logits.T @ cache.pooled,
        "cls_b": grad_logits.sum(axis=0),
    }
    g_pooled = (grad_logits @ params["cls_w"]) * cache.has_tokens[:, None]
    g_x = np.zeros_like(cache.pooled_input)
    np.put_along_axis(g_x, cache.pool_argmax[:, None, :], g_pooled[:, None, :], axis=1)

    for i in reversed(range(cfg.num_layers)):
        p = f"layer{i}."
        a_cache, ln1_cache, f_cache, ln2_cache = cache.layer_caches[i]
        if cfg.use_residual_norm:
            g_sum2, g_gain2, g_bias2 = _ln_backward(ln2_cache, g_x, params[p + "ln2_g"])
            grads[p + "ln2_g"], grads[p + "ln2_b"] = g_gain2, g_bias2
            g_x1 = g_sum2.copy()
            g_f = g_sum2
        else:
            g_x1 = np.zeros_like(g_x)
            g_f = g_x
        g_f_in, f_grads = _ffn_backward(
            f_cache, g_f, params[p + "ffn_w1"], params[p + "ffn_w2"]
        )
        for name, val in f_grads.items():
            grads[p + name] = val
        g_x1 += g_f_in
        if cfg.use_residual_norm:
            g_sum1, g_gain1, g_bias1 = _ln_backward(ln1_cache, g_x1, params[p + "ln1_g"])
            grads[p + "ln1_g"], grads[p + "ln1_b"] = g_gain1, g_bias1
            g_prev = g_sum1.copy()
            g_a = g_sum1
        else:
            g_prev = np.zeros_like(g_x1)
            g_a = g_x1
        g_a_in, a_grads = _attn_backward(
            a_cache, g_a, params[p + "wq"], params[p + "wk"], params[p + "wv"],
            params[p + "wo"], cfg.num_heads,
        )
        for name, val in a_grads.items():
            grads[p + name] = val
        g_x = g_prev + g_a_in

    grad_pos = np.zeros_like(params["pos"])
    grad_pos[:length] = g_x.sum(axis=0)
    grads["pos"] = grad_pos
    grad_embed = np.zeros_like(params["embed"])
    np.add.at(grad_embed, cache.ids, g_x)
    grads["embed"] = grad_embed
    return grads
