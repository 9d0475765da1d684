"""Label distributions and the smoothing transform.

A hard label is a one-hot probability vector over k classes. Smoothing with
intensity lambda mixes it toward uniform: each entry becomes
``(1 - k*lambda) * d + lambda``, which keeps the vector on the simplex and,
for lambda < 1/k, keeps the original argmax dominant.

The named levels (LS1..LS5 plus Baseline) map to fixed lambda values for
two-class and three-class problems; other class counts need an explicit
lambda.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidInputError

_SUM_TOL = 1e-9


class SmoothingLevel(enum.Enum):
    BASELINE = "Baseline"
    LS1 = "LS1"
    LS2 = "LS2"
    LS3 = "LS3"
    LS4 = "LS4"
    LS5 = "LS5"

    @classmethod
    def parse(cls, name: str) -> "SmoothingLevel":
        for level in cls:
            if level.value.lower() == name.strip().lower():
                return level
        raise ConfigurationError(
            f"unknown smoothing level {name!r}; expected one of "
            f"{[lv.value for lv in cls]}"
        )


# lambda per (level, class count). Baseline and LS1 are unsmoothed; they
# differ only in the training loss (cross-entropy vs KL).
_LEVEL_LAMBDA: dict[tuple[SmoothingLevel, int], float] = {
    (SmoothingLevel.LS2, 3): 0.01,
    (SmoothingLevel.LS3, 3): 0.025,
    (SmoothingLevel.LS4, 3): 0.05,
    (SmoothingLevel.LS5, 3): 0.1,
    (SmoothingLevel.LS2, 2): 0.01,
    (SmoothingLevel.LS3, 2): 0.05,
    (SmoothingLevel.LS4, 2): 0.1,
    (SmoothingLevel.LS5, 2): 0.15,
}


@dataclass(frozen=True)
class LabelDistribution:
    """Probability vector over k >= 2 classes."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", arr)
        if arr.ndim != 1 or arr.size < 2:
            raise InvalidInputError(
                f"label distribution needs a 1-D vector of length >= 2, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidInputError("label distribution entries must be finite and >= 0")
        if abs(float(arr.sum()) - 1.0) > _SUM_TOL:
            raise InvalidInputError(
                f"label distribution must sum to 1 (got {float(arr.sum())!r})"
            )

    @property
    def k(self) -> int:
        return self.probs.size


def one_hot(index: int, k: int) -> LabelDistribution:
    """Hard label: probability 1 at ``index``, 0 elsewhere."""
    if not 0 <= index < k:
        raise InvalidInputError(f"class index {index} out of range for k={k}")
    probs = np.zeros(k, dtype=np.float64)
    probs[index] = 1.0
    return LabelDistribution(probs)


def smooth(d: LabelDistribution, lam: float) -> LabelDistribution:
    """Mix ``d`` toward uniform: entry_j -> (1 - k*lam) * d_j + lam.

    Computed as ``d_j + lam*(1 - k*d_j)``, which is algebraically identical
    but lands exactly on the decimal values of the named levels (0.98, 0.95,
    0.85, ...) in binary floating point.
    """
    k = d.k
    if not 0.0 <= lam < 1.0 / k:
        raise ConfigurationError(
            f"smoothing lambda must lie in [0, 1/k) = [0, {1.0 / k}); got {lam} "
            "(larger values would demote the target class)"
        )
    if lam == 0.0:
        return d
    probs = d.probs + lam * (1.0 - k * d.probs)
    return LabelDistribution(probs)


def level_to_lambda(level: SmoothingLevel, k: int) -> float:
    """Resolve a named level to its lambda for a k-class problem."""
    if level in (SmoothingLevel.BASELINE, SmoothingLevel.LS1):
        return 0.0
    try:
        return _LEVEL_LAMBDA[(level, k)]
    except KeyError:
        raise ConfigurationError(
            f"{level.value} has no predefined lambda for k={k} classes "
            "(only k=2 and k=3 are tabulated); pass an explicit lambda instead"
        ) from None


def argmax_label(d: LabelDistribution) -> int:
    """Index of the largest entry; ties resolve to the lowest index."""
    return int(np.argmax(d.probs))


@dataclass(frozen=True)
class SmoothingSpec:
    """A smoothing level resolved against a concrete class count.

    ``lam`` defaults from the level/k table; an explicit value overrides it
    (that is the only way to smooth when k is not 2 or 3).
    """

    level: SmoothingLevel
    k: int
    lam: float = field(default=-1.0)

    def __post_init__(self):
        if self.k < 2:
            raise ConfigurationError(f"need at least 2 classes, got k={self.k}")
        lam = self.lam
        if lam < 0:
            lam = level_to_lambda(self.level, self.k)
            object.__setattr__(self, "lam", lam)
        if self.level in (SmoothingLevel.BASELINE, SmoothingLevel.LS1) and lam != 0.0:
            raise ConfigurationError(f"{self.level.value} requires lambda = 0, got {lam}")
        if not 0.0 <= lam < 1.0 / self.k:
            raise ConfigurationError(
                f"lambda {lam} outside [0, 1/k) for k={self.k}"
            )
        if not (1.0 - self.k * lam) > lam:
            raise ConfigurationError(
                f"lambda {lam} too large for k={self.k}: the one-hot weight "
                f"{1.0 - self.k * lam} must stay above the uniform floor {lam}"
            )

    def apply(self, label: int) -> LabelDistribution:
        return smooth(one_hot(label, self.k), self.lam)


def batch_smooth(labels: np.ndarray, k: int, lam: float) -> np.ndarray:
    """Smoothed one-hot targets for a whole batch, rows matching ``smooth``.

    Returns a (len(labels), k) float64 matrix; row i equals
    ``smooth(one_hot(labels[i], k), lam).probs``.
    """
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise InvalidInputError(f"labels out of range for k={k}")
    hot = np.zeros((labels.size, k), dtype=np.float64)
    hot[np.arange(labels.size), labels] = 1.0
    if lam == 0.0:
        return hot
    return hot + lam * (1.0 - k * hot)
