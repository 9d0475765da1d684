"""Dense float64 primitives: matrices, stable softmax, seeded init, and a
finite-difference gradient oracle.

All tensors are plain 2-D C-contiguous ``numpy.float64`` arrays (row-major).
Everything here is a pure function over immutable inputs; nothing mutates
its arguments.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ConfigurationError, InvalidInputError, ShapeMismatchError

# A "Tensor2" is a 2-D float64 ndarray in row-major order.
Tensor2 = np.ndarray


def tensor2(data, *, check_finite: bool = True) -> Tensor2:
    """Coerce ``data`` to a 2-D float64 C-contiguous array and validate it."""
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"expected a 2-D array, got shape {arr.shape}")
    if check_finite and not np.all(np.isfinite(arr)):
        raise InvalidInputError("tensor contains NaN or Inf entries")
    return arr


class Rng:
    """Deterministic random stream, fixed to the PCG64 generator.

    The same seed yields the same stream on every platform. ``n_drawn``
    counts how many uniform variates have been consumed, which lets tests
    assert exactly how many draws an initializer used.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ConfigurationError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))
        self.n_drawn = 0

    def uniform(self, low: float, high: float, n: int) -> np.ndarray:
        """Draw ``n`` i.i.d. uniforms in [low, high) as ``low + (high-low)*u``."""
        if not low < high:
            raise ConfigurationError(f"uniform range requires low < high, got [{low}, {high})")
        u = self._gen.random(n)
        self.n_drawn += n
        return low + (high - low) * u

    @staticmethod
    def derived(*keys: int) -> np.random.Generator:
        """Independent generator keyed by a tuple of non-negative ints.

        Used for shuffles so they never perturb the init stream: the order of
        ``(seed, epoch)`` shuffles is decoupled from parameter draws.
        """
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in keys])))


def matmul(a: Tensor2, b: Tensor2) -> Tensor2:
    """Matrix product with an explicit shape check."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeMismatchError(f"matmul needs 2-D operands, got {np.shape(a)} and {np.shape(b)}")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(
            f"matmul shape mismatch: {a.shape} x {b.shape} (inner dimensions differ)"
        )
    return a @ b


def softmax(v: np.ndarray) -> np.ndarray:
    """Probability vector exp(v)/sum(exp(v)), computed with max-subtraction.

    Accepts a 1-D vector; subtracting the max entry first keeps exp() from
    overflowing for large scores.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeMismatchError(f"softmax expects a vector, got shape {v.shape}")
    if np.isnan(v).any():
        raise InvalidInputError("softmax input contains NaN")
    shifted = v - np.max(v)
    e = np.exp(shifted)
    return e / e.sum()


def log_softmax(v: np.ndarray) -> np.ndarray:
    """log(softmax(v)) without forming the (possibly underflowing) quotient."""
    v = np.asarray(v, dtype=np.float64)
    shifted = v - np.max(v, axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def seeded_init(shape: tuple[int, int], low: float, high: float, rng: Rng) -> Tensor2:
    """Tensor with i.i.d. uniform entries in [low, high).

    Consumes exactly rows*cols draws from ``rng``, filled in row-major order.
    """
    if low >= high:
        raise ConfigurationError(f"seeded_init requires low < high, got [{low}, {high})")
    rows, cols = int(shape[0]), int(shape[1])
    return rng.uniform(low, high, rows * cols).reshape(rows, cols)


def finite_diff_grad(
    f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate at a time.

    This is the independent oracle every analytic gradient in the package is
    checked against; it never shares code with the backward passes.
    """
    if eps <= 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat_x = x.reshape(-1)
    flat_g = grad.reshape(-1)
    for i in range(flat_x.size):
        orig = flat_x[i]
        flat_x[i] = orig + eps
        f_plus = float(f(x))
        flat_x[i] = orig - eps
        f_minus = float(f(x))
        flat_x[i] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise InvalidInputError(
                f"finite_diff_grad: non-finite function value near coordinate {i}"
            )
        flat_g[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def relative_grad_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Scale-free disagreement between two gradients: ||a-n|| / max(||a||, ||n||, tiny)."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    denom = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
    return float(np.linalg.norm(a - n) / denom)
