"""Convolutional text classifier.

Word embeddings feed banks of width-h convolution filters (ReLU), each
feature map is max-pooled over time, pooled features are concatenated and
linearly classified. Softmax is applied by the loss, not here.

Padding rule: a convolution window is valid only if it touches at least one
non-PAD token. Windows made entirely of padding are excluded from the max,
so logits do not depend on how much trailing padding an example carries
(once there is at least window_size - 1 slack). An example with no valid
windows for some width contributes an all-zero feature block there; an
all-PAD example therefore gets logits equal to the classifier bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from ..numerics import Rng, seeded_init

EMBED_INIT_RANGE = 0.1


@dataclass(frozen=True)
class TextCnnConfig:
    vocab_size: int
    num_classes: int
    embed_dim: int = 128
    window_sizes: tuple[int, ...] = (3, 4, 5)
    filters_per_window: int = 100

    def __post_init__(self):
        if self.vocab_size < 2 or self.num_classes < 2:
            raise ConfigurationError(
                f"vocab_size and num_classes must be >= 2, got "
                f"{self.vocab_size} and {self.num_classes}"
            )
        if not self.window_sizes or min(self.window_sizes) < 1:
            raise ConfigurationError(f"bad window sizes {self.window_sizes}")
        if len(set(self.window_sizes)) != len(self.window_sizes):
            raise ConfigurationError(f"duplicate window sizes {self.window_sizes}")

    @property
    def feature_dim(self) -> int:
        return self.filters_per_window * len(self.window_sizes)

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "num_classes": self.num_classes,
            "embed_dim": self.embed_dim,
            "window_sizes": list(self.window_sizes),
            "filters_per_window": self.filters_per_window,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TextCnnConfig":
        return cls(
            vocab_size=int(d["vocab_size"]),
            num_classes=int(d["num_classes"]),
            embed_dim=int(d["embed_dim"]),
            window_sizes=tuple(int(h) for h in d["window_sizes"]),
            filters_per_window=int(d["filters_per_window"]),
        )


def _glorot(shape: tuple[int, int], rng: Rng) -> np.ndarray:
    limit = float(np.sqrt(6.0 / (shape[0] + shape[1])))
    return seeded_init(shape, -limit, limit, rng)


def init_textcnn_params(cfg: TextCnnConfig, rng: Rng) -> dict[str, np.ndarray]:
    """Parameter tensors in a fixed draw order: embed, conv weights by
    ascending window size, classifier weight. Biases start at zero."""
    params: dict[str, np.ndarray] = {}
    params["embed"] = seeded_init(
        (cfg.vocab_size, cfg.embed_dim), -EMBED_INIT_RANGE, EMBED_INIT_RANGE, rng
    )
    for h in sorted(cfg.window_sizes):
        params[f"conv_w{h}"] = _glorot((cfg.filters_per_window, h * cfg.embed_dim), rng)
        params[f"conv_b{h}"] = np.zeros(cfg.filters_per_window)
    params["cls_w"] = _glorot((cfg.num_classes, cfg.feature_dim), rng)
    params["cls_b"] = np.zeros(cfg.num_classes)
    return params


@dataclass
class TextCnnCache:
    ids: np.ndarray
    lengths: np.ndarray
    x: np.ndarray                                  # (B, L, d) embedded input
    per_window: dict[int, tuple]                   # h -> (windows, relu_mask, argmax, n_pos)
    has_valid: dict[int, np.ndarray] = field(default_factory=dict)
    features: np.ndarray | None = None
    version: int = -1


def _window_matrix(x: np.ndarray, h: int) -> np.ndarray:
    """im2col: (B, L, d) -> (B*(L-h+1), h*d), window rows contiguous."""
    b, length, d = x.shape
    n_pos = length - h + 1
    view = np.lib.stride_tricks.sliding_window_view(x, h, axis=1)  # (B, P, d, h)
    return np.ascontiguousarray(view.transpose(0, 1, 3, 2)).reshape(b * n_pos, h * d)


def textcnn_forward(
    params: dict[str, np.ndarray],
    cfg: TextCnnConfig,
    ids: np.ndarray,
    lengths: np.ndarray,
) -> tuple[np.ndarray, TextCnnCache]:
    if ids.max(initial=0) >= cfg.vocab_size:
        raise ConfigurationError(
            f"token id {int(ids.max())} out of range for vocab size {cfg.vocab_size}"
        )
    b, length = ids.shape
    x = params["embed"][ids]
    cache = TextCnnCache(ids=ids, lengths=lengths, x=x, per_window={})
    blocks = []
    for h in sorted(cfg.window_sizes):
        n_pos = length - h + 1
        n_filters = cfg.filters_per_window
        if n_pos < 1:
            cache.per_window[h] = (None, None, None, 0)
            cache.has_valid[h] = np.zeros(b, dtype=bool)
            blocks.append(np.zeros((b, n_filters)))
            continue
        windows = _window_matrix(x, h)
        z = (windows @ params[f"conv_w{h}"].T + params[f"conv_b{h}"]).reshape(b, n_pos, n_filters)
        c = np.maximum(z, 0.0)
        # window starting at p touches a real token iff p < length of the example
        valid = np.arange(n_pos)[None, :] < lengths[:, None]
        has_valid = valid.any(axis=1)
        masked = np.where(valid[:, :, None], c, -np.inf)
        argmax = masked.argmax(axis=1)
        pooled = np.where(has_valid[:, None], masked.max(axis=1), 0.0)
        cache.per_window[h] = (windows, z > 0.0, argmax, n_pos)
        cache.has_valid[h] = has_valid
        blocks.append(pooled)
    features = np.concatenate(blocks, axis=1)
    cache.features = features
    logits = features @ params["cls_w"].T + params["cls_b"]
    return logits, cache


def textcnn_backward(
    params: dict[str, np.ndarray],
    cfg: TextCnnConfig,
    cache: TextCnnCache,
    grad_logits: np.ndarray,
) -> dict[str, np.ndarray]:
    b, length = cache.ids.shape
    n_filters = cfg.filters_per_window
    grads: dict[str, np.ndarray] = {
        "cls_w": grad_logits.T @ cache.features,
        "cls_b": grad_logits.sum(axis=0),
    }
    grad_features = grad_logits @ params["cls_w"]
    grad_x = np.zeros_like(cache.x)
    offset = 0
    for h in sorted(cfg.window_sizes):
        windows, relu_mask, argmax, n_pos = cache.per_window[h]
        grad_pool = grad_features[:, offset : offset + n_filters]
        offset += n_filters
        if n_pos < 1:
            grads[f"conv_w{h}"] = np.zeros_like(params[f"conv_w{h}"])
            grads[f"conv_b{h}"] = np.zeros_like(params[f"conv_b{h}"])
            continue
        # gradient flows only through the arg-max window of each feature map,
        # and not at all for examples with no valid window
        grad_pool = grad_pool * cache.has_valid[h][:, None]
        grad_c = np.zeros((b, n_pos, n_filters))
        np.put_along_axis(grad_c, argmax[:, None, :], grad_pool[:, None, :], axis=1)
        grad_z = (grad_c * relu_mask).reshape(b * n_pos, n_filters)
        grads[f"conv_w{h}"] = grad_z.T @ windows
        grads[f"conv_b{h}"] = grad_z.sum(axis=0)
        grad_windows = (grad_z @ params[f"conv_w{h}"]).reshape(b, n_pos, h, cfg.embed_dim)
        for j in range(h):
            grad_x[:, j : j + n_pos, :] += grad_windows[:, :, j, :]
    grad_embed = np.zeros_like(params["embed"])
    np.add.at(grad_embed, cache.ids, grad_x)
    grads["embed"] = grad_embed
    return grads
