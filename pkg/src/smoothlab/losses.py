"""Entropy, cross-entropy, KL divergence, and the fused logits-to-loss gradient.

Everything is in nats. The fused path computes log-probabilities directly
from logits (log-softmax), so its loss is finite for any finite logits and
its gradient is exactly ``softmax(logits) - target`` for both loss kinds:
cross-entropy and KL differ only by the target's entropy, a constant with
zero gradient.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InfiniteLossError, InvalidInputError
from .labels import LabelDistribution
from .numerics import log_softmax

# Floor applied inside log() to predicted probabilities that underflowed to
# a subnormal/tiny value. Structural zeros (exactly 0.0) still raise.
_Q_FLOOR = 1e-12


class LossKind(enum.Enum):
    CROSS_ENTROPY = "cross_entropy"
    KL = "kl"
    MULTI_LABEL_CE = "multi_label_ce"


@dataclass(frozen=True)
class LossValue:
    value: float
    kind: LossKind


def _probs(p) -> np.ndarray:
    if isinstance(p, LabelDistribution):
        return p.probs
    return LabelDistribution(np.asarray(p, dtype=np.float64)).probs


def _log_clamped(q: np.ndarray, support: np.ndarray) -> np.ndarray:
    """log(q) with tiny values floored at 1e-12; exact zeros on the support raise."""
    if np.any((q == 0.0) & support):
        raise InfiniteLossError(
            "prediction assigns exactly zero probability to a supported class"
        )
    return np.log(np.maximum(q, _Q_FLOOR))


def entropy(p) -> float:
    """Shannon entropy -sum p*ln(p), with the 0*log(0) = 0 convention."""
    p = _probs(p)
    nz = p > 0.0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def cross_entropy(p, q) -> float:
    """-sum p*ln(q). Requires q > 0 wherever p > 0 (tiny q is floored at 1e-12)."""
    p, q = _probs(p), _probs(q)
    if p.size != q.size:
        raise InvalidInputError(f"distribution sizes differ: {p.size} vs {q.size}")
    support = p > 0.0
    logq = _log_clamped(q, support)
    return float(-np.sum(p[support] * logq[support]))


def kl_divergence(p, q) -> float:
    """sum p*ln(p/q); equals cross_entropy(p, q) - entropy(p)."""
    p, q = _probs(p), _probs(q)
    if p.size != q.size:
        raise InvalidInputError(f"distribution sizes differ: {p.size} vs {q.size}")
    support = p > 0.0
    logq = _log_clamped(q, support)
    ps = p[support]
    return float(np.sum(ps * (np.log(ps) - logq[support])))


def multi_label_cross_entropy(labelset, q) -> float:
    """Mean negative log-likelihood over a set of true classes: -(1/|Y|) sum ln q_y."""
    q = _probs(q)
    indices = sorted(set(int(i) for i in labelset))
    if not indices:
        raise InvalidInputError("label set must be non-empty")
    if indices[0] < 0 or indices[-1] >= q.size:
        raise InvalidInputError(f"label set {indices} out of range for k={q.size}")
    chosen = q[indices]
    if np.any(chosen == 0.0):
        raise InfiniteLossError(
            "prediction assigns exactly zero probability to a supported class"
        )
    return float(-np.mean(np.log(np.maximum(chosen, _Q_FLOOR))))


def batch_loss_and_grad(
    targets: np.ndarray, logits: np.ndarray, kind: LossKind
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row loss and gradient for a (B, k) batch of targets and logits.

    Returns ``(losses, grads)`` with shapes (B,) and (B, k). The gradient of
    each row's loss with respect to its logits is softmax(logits) - target
    for both kinds.
    """
    targets = np.asarray(targets, dtype=np.float64)
    logits = np.asarray(logits, dtype=np.float64)
    if targets.shape != logits.shape or targets.ndim != 2:
        raise InvalidInputError(
            f"targets and logits must both be (B, k); got {targets.shape} and {logits.shape}"
        )
    if not np.all(np.isfinite(logits)):
        raise InvalidInputError("logits contain NaN or Inf")
    if kind not in (LossKind.CROSS_ENTROPY, LossKind.KL):
        raise InvalidInputError(f"unsupported loss kind for logits training: {kind}")
    logq = log_softmax(logits)
    ce = -np.sum(targets * logq, axis=1)
    if kind is LossKind.KL:
        nz = targets > 0.0
        ent = -np.sum(np.where(nz, targets * np.log(np.where(nz, targets, 1.0)), 0.0), axis=1)
        losses = ce - ent
    else:
        losses = ce
    grads = np.exp(logq) - targets
    return losses, grads


def loss_and_grad_from_logits(
    target, logits: np.ndarray, kind: LossKind
) -> tuple[LossValue, np.ndarray]:
    """Fused loss and logits-gradient for a single example."""
    t = _probs(target)
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.size != t.size:
        raise InvalidInputError(
            f"logits shape {logits.shape} does not match target of size {t.size}"
        )
    losses, grads = batch_loss_and_grad(t[None, :], logits[None, :], kind)
    return LossValue(float(losses[0]), kind), grads[0]
