"""smoothlab: label-smoothing experiments for text sentiment classification.

Trains TextCNN and a small transformer encoder from scratch with either a
cross-entropy (hard label) or KL-divergence (smoothed label) objective, and
runs smoothing-level sweeps that emit accuracy tables and curves.
"""

from .labels import (
    LabelDistribution,
    SmoothingLevel,
    SmoothingSpec,
    argmax_label,
    level_to_lambda,
    one_hot,
    smooth,
)
from .losses import (
    LossKind,
    LossValue,
    cross_entropy,
    entropy,
    kl_divergence,
    loss_and_grad_from_logits,
    multi_label_cross_entropy,
)
from .models import Model, TextCnnConfig, TransformerConfig, build_model
from .numerics import Rng, finite_diff_grad, matmul, seeded_init, softmax
from .textpipe import (
    Dataset,
    Example,
    Vocabulary,
    build_vocab,
    encode,
    iter_batches,
    load_dataset,
    split_dataset,
    tokenize,
)
from .trainer import (
    MetricsRecord,
    RunResult,
    TrainConfig,
    evaluate,
    sgd_step,
    train_epoch,
    train_run,
)

__version__ = "0.1.0"

__all__ = [
    "LabelDistribution", "SmoothingLevel", "SmoothingSpec", "argmax_label",
    "level_to_lambda", "one_hot", "smooth",
    "LossKind", "LossValue", "cross_entropy", "entropy", "kl_divergence",
    "loss_and_grad_from_logits", "multi_label_cross_entropy",
    "Model", "TextCnnConfig", "TransformerConfig", "build_model",
    "Rng", "finite_diff_grad", "matmul", "seeded_init", "softmax",
    "Dataset", "Example", "Vocabulary", "build_vocab", "encode",
    "iter_batches", "load_dataset", "split_dataset", "tokenize",
    "MetricsRecord", "RunResult", "TrainConfig", "evaluate", "sgd_step",
    "train_epoch", "train_run",
    "__version__",
]
