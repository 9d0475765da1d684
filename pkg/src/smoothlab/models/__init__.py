"""Model zoo: TextCNN and the small transformer encoder behind one interface.

A ``Model`` owns its parameter tensors and a version counter. Forward passes
stamp their cache with the current version; a backward pass against a cache
from an older parameter state is rejected, since its intermediates no longer
describe the parameters being differentiated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..errors import CacheMismatchError, ConfigurationError
from ..numerics import Rng
from .textcnn import (
    TextCnnConfig,
    init_textcnn_params,
    textcnn_backward,
    textcnn_forward,
)
from .transformer import (
    TransformerConfig,
    ffn,
    init_transformer_params,
    multi_head_attention,
    scaled_dot_attention,
    transformer_backward,
    transformer_forward,
)

__all__ = [
    "Model",
    "TextCnnConfig",
    "TransformerConfig",
    "build_model",
    "scaled_dot_attention",
    "multi_head_attention",
    "ffn",
    "init_textcnn_params",
    "init_transformer_params",
    "textcnn_forward",
    "textcnn_backward",
    "transformer_forward",
    "transformer_backward",
]

ModelConfig = Union[TextCnnConfig, TransformerConfig]

ARCH_TEXTCNN = "textcnn"
ARCH_TRANSFORMER = "transformer"


@dataclass
class Model:
    kind: str
    config: ModelConfig
    params: dict[str, np.ndarray]
    version: int = 0
    seed: int = field(default=0)

    def forward(self, ids: np.ndarray, lengths: np.ndarray):
        if self.kind == ARCH_TEXTCNN:
            logits, cache = textcnn_forward(self.params, self.config, ids, lengths)
        else:
            logits, cache = transformer_forward(self.params, self.config, ids, lengths)
        cache.version = self.version
        return logits, cache

    def backward(self, cache, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
        if cache.version != self.version:
            raise CacheMismatchError(
                f"forward cache is stale: built at parameter version {cache.version}, "
                f"model is now at {self.version}"
            )
        if self.kind == ARCH_TEXTCNN:
            return textcnn_backward(self.params, self.config, cache, grad_logits)
        return transformer_backward(self.params, self.config, cache, grad_logits)

    def features(self, ids: np.ndarray, lengths: np.ndarray) -> np.ndarray:
        """Penultimate representation: the pooled vector right before the classifier."""
        _, cache = self.forward(ids, lengths)
        return cache.features if self.kind == ARCH_TEXTCNN else cache.pooled

    def logits(self, ids: np.ndarray, lengths: np.ndarray) -> np.ndarray:
        return self.forward(ids, lengths)[0]

    def mark_updated(self) -> None:
        self.version += 1


def build_model(kind: str, config: ModelConfig, seed: int) -> Model:
    rng = Rng(seed)
    if kind == ARCH_TEXTCNN:
        if not isinstance(config, TextCnnConfig):
            raise ConfigurationError(f"{kind} model needs a TextCnnConfig")
        params = init_textcnn_params(config, rng)
    elif kind == ARCH_TRANSFORMER:
        if not isinstance(config, TransformerConfig):
            raise ConfigurationError(f"{kind} model needs a TransformerConfig")
        params = init_transformer_params(config, rng)
    else:
        raise ConfigurationError(
            f"unknown architecture {kind!r}; expected {ARCH_TEXTCNN} or {ARCH_TRANSFORMER}"
        )
    return Model(kind=kind, config=config, params=params, seed=seed)
