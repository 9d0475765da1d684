"""Plain mini-batch SGD over either architecture with either loss regime.

One run: split the dataset, initialize a model from the seed, then for each
epoch shuffle batches, smooth the batch labels, take the fused loss
gradient, backpropagate, and step parameters by theta -= lr * grad (mean
gradient over the batch). Per-epoch metrics are recorded and can be appended
to a CSV stream.

Everything is deterministic given (dataset, config): parameter init comes
from the seed, batch order from (seed, epoch), and the split from the split
seed (defaulting to the training seed).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    DivergenceError,
    InvalidInputError,
    ShapeMismatchError,
)
from .labels import SmoothingLevel, SmoothingSpec, batch_smooth
from .losses import LossKind, batch_loss_and_grad
from .models import (
    ARCH_TEXTCNN,
    ARCH_TRANSFORMER,
    Model,
    TextCnnConfig,
    TransformerConfig,
    build_model,
)
from .textpipe import Dataset, iter_batches, split_dataset

METRICS_HEADER = "epoch,algorithm,split,loss,accuracy,seconds"

DEFAULT_LR = {ARCH_TEXTCNN: 0.1, ARCH_TRANSFORMER: 0.01}
DEFAULT_EMBED_DIM = {ARCH_TEXTCNN: 128, ARCH_TRANSFORMER: 64}


@dataclass(frozen=True)
class ModelSettings:
    """Architecture knobs that do not depend on the dataset."""

    embed_dim: int | None = None  # falls back to the per-architecture default
    window_sizes: tuple[int, ...] = (3, 4, 5)
    filters_per_window: int = 100
    num_heads: int = 4
    num_layers: int = 2
    ffn_dim: int = 256
    use_residual_norm: bool = True


@dataclass(frozen=True)
class TrainConfig:
    arch: str
    smoothing: SmoothingSpec
    learning_rate: float | None = None  # per-architecture default when None
    batch_size: int = 32
    epochs: int = 20
    seed: int = 0
    shuffle: bool = True
    val_fraction: float = 0.2
    split_seed: int | None = None  # defaults to ``seed``
    model: ModelSettings = field(default_factory=ModelSettings)
    loss_kind: LossKind | None = None  # derived from the smoothing level

    def __post_init__(self):
        if self.arch not in (ARCH_TEXTCNN, ARCH_TRANSFORMER):
            raise ConfigurationError(f"unknown architecture {self.arch!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        expected = (
            LossKind.CROSS_ENTROPY
            if self.smoothing.level is SmoothingLevel.BASELINE
            else LossKind.KL
        )
        if self.loss_kind is None:
            object.__setattr__(self, "loss_kind", expected)
        elif self.loss_kind is not expected:
            raise ConfigurationError(
                f"{self.smoothing.level.value} must train with {expected.value}, "
                f"got {self.loss_kind.value}"
            )
        if self.lr <= 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.lr}")

    @property
    def lr(self) -> float:
        return DEFAULT_LR[self.arch] if self.learning_rate is None else self.learning_rate

    @property
    def algorithm(self) -> str:
        return self.smoothing.level.value

    def effective_split_seed(self) -> int:
        return self.seed if self.split_seed is None else self.split_seed


@dataclass(frozen=True)
class MetricsRecord:
    epoch: int  # 1-based
    train_loss: float
    train_accuracy: float
    val_accuracy: float
    seconds: float


@dataclass
class RunResult:
    metrics: list[MetricsRecord]
    best_val_accuracy: float
    best_epoch: int  # first epoch attaining the best accuracy
    model: Model


def resolve_model_config(cfg: TrainConfig, vocab_size: int, k: int, max_len: int):
    dim = cfg.model.embed_dim or DEFAULT_EMBED_DIM[cfg.arch]
    if cfg.arch == ARCH_TEXTCNN:
        return TextCnnConfig(
            vocab_size=vocab_size,
            num_classes=k,
            embed_dim=dim,
            window_sizes=tuple(sorted(cfg.model.window_sizes)),
            filters_per_window=cfg.model.filters_per_window,
        )
    return TransformerConfig(
        vocab_size=vocab_size,
        num_classes=k,
        max_len=max_len,
        embed_dim=dim,
        num_heads=cfg.model.num_heads,
        num_layers=cfg.model.num_layers,
        ffn_dim=cfg.model.ffn_dim,
        use_residual_norm=cfg.model.use_residual_norm,
    )


def sgd_step(
    params: dict[str, np.ndarray], grads: dict[str, np.ndarray], eta: float
) -> dict[str, np.ndarray]:
    """In-place update: every tensor moves by -eta times its gradient."""
    if eta <= 0:
        raise ConfigurationError(f"eta must be positive, got {eta}")
    for name, p in params.items():
        g = grads.get(name)
        if g is None or g.shape != p.shape:
            raise ShapeMismatchError(
                f"gradient for {name!r} has shape "
                f"{None if g is None else g.shape}, parameter is {p.shape}"
            )
        p -= eta * g
    return params


def train_epoch(model: Model, data: Dataset, cfg: TrainConfig, epoch: int) -> float:
    """One shuffled pass of batch updates; returns the example-weighted mean loss.

    ``epoch`` is the 0-based index that keys the shuffle order.
    """
    if len(data) == 0:
        raise ConfigurationError("cannot train on an empty dataset")
    lam = cfg.smoothing.lam
    total_loss = 0.0
    n_seen = 0
    for batch_idx, batch in enumerate(
        iter_batches(data, cfg.batch_size, cfg.shuffle, cfg.seed, epoch)
    ):
        targets = batch_smooth(batch.labels, data.k, lam)
        try:
            logits, cache = model.forward(batch.ids, batch.lengths)
            losses, grad_logits = batch_loss_and_grad(targets, logits, cfg.loss_kind)
            batch_total = float(losses.sum())
        except InvalidInputError as exc:  # exploded parameters -> non-finite logits
            raise DivergenceError(
                f"non-finite loss in batch {batch_idx} of epoch {epoch + 1} "
                f"(lr={cfg.lr}): {exc}"
            ) from exc
        if not np.isfinite(batch_total):
            raise DivergenceError(
                f"non-finite loss in batch {batch_idx} of epoch {epoch + 1} "
                f"(lr={cfg.lr}); aborting run"
            )
        total_loss += batch_total
        n_seen += len(losses)
        grads = model.backward(cache, grad_logits / len(losses))
        sgd_step(model.params, grads, cfg.lr)
        model.mark_updated()
    return total_loss / n_seen


def evaluate(model: Model, data: Dataset, batch_size: int = 256) -> float:
    """Fraction of examples whose predicted class matches the hard label.

    Predictions are the argmax of the softmax over logits (ties to the
    lowest index); no parameters are updated.
    """
    if len(data) == 0:
        raise ConfigurationError("cannot evaluate on an empty dataset")
    correct = 0
    for batch in iter_batches(data, batch_size, shuffle=False, seed=0):
        logits = model.logits(batch.ids, batch.lengths)
        shifted = logits - logits.max(axis=1, keepdims=True)
        probs = np.exp(shifted)
        probs /= probs.sum(axis=1, keepdims=True)
        correct += int(np.sum(probs.argmax(axis=1) == batch.labels))
    return correct / len(data)


def train_run(dataset: Dataset, cfg: TrainConfig) -> RunResult:
    """Split, initialize from the seed, train for cfg.epochs, record metrics."""
    if cfg.smoothing.k != dataset.k:
        raise ConfigurationError(
            f"smoothing spec is for k={cfg.smoothing.k} but dataset has k={dataset.k}"
        )
    train_data, val_data = split_dataset(
        dataset, cfg.val_fraction, cfg.effective_split_seed()
    )
    model_cfg = resolve_model_config(
        cfg, dataset.vocab.size, dataset.k, dataset.max_len
    )
    model = build_model(cfg.arch, model_cfg, cfg.seed)
    records: list[MetricsRecord] = []
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        mean_loss = train_epoch(model, train_data, cfg, epoch - 1)
        train_acc = evaluate(model, train_data)
        val_acc = evaluate(model, val_data)
        records.append(
            MetricsRecord(epoch, mean_loss, train_acc, val_acc, time.perf_counter() - t0)
        )
    best = max(r.val_accuracy for r in records)
    best_epoch = next(r.epoch for r in records if r.val_accuracy == best)
    return RunResult(records, best, best_epoch, model)


def write_metrics_csv(
    records: list[MetricsRecord],
    algorithm: str,
    path: str | Path,
    *,
    record_seconds: bool = True,
) -> None:
    """Append-style metrics stream: one train row and one val row per epoch.

    The val row's loss field is left empty (training loss is the only loss
    tracked). With ``record_seconds=False`` the wall-time column is written
    as 0.000000 so that output directories are byte-reproducible.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [METRICS_HEADER]
    for r in records:
        secs = f"{r.seconds:.6f}" if record_seconds else "0.000000"
        lines.append(f"{r.epoch},{algorithm},train,{r.train_loss!r},{r.train_accuracy!r},{secs}")
        lines.append(f"{r.epoch},{algorithm},val,,{r.val_accuracy!r},{secs}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def make_train_config(
    arch: str,
    level: SmoothingLevel,
    k: int,
    *,
    lam: float | None = None,
    **kwargs,
) -> TrainConfig:
    spec = SmoothingSpec(level, k) if lam is None else SmoothingSpec(level, k, lam)
    return TrainConfig(arch=arch, smoothing=spec, **kwargs)


def with_settings(cfg: TrainConfig, **kwargs) -> TrainConfig:
    return replace(cfg, **kwargs)
