"""Two-component PCA by deterministic power iteration.

Features are mean-centered, the top two eigenvectors of the covariance
matrix are found by power iteration with deflation (fixed all-ones start
vector, up to 1000 iterations or residual 1e-10), and each component's sign
is fixed by making its largest-magnitude loading positive. No randomness,
so projections are reproducible byte-for-byte.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DegenerateDataError

MAX_ITERS = 1000
RESIDUAL_TOL = 1e-10


def _power_iteration(cov: np.ndarray) -> tuple[float, np.ndarray]:
    """Dominant (eigenvalue, eigenvector) of a symmetric PSD matrix."""
    v = np.ones(cov.shape[0])
    v /= np.linalg.norm(v)
    eigval = 0.0
    for _ in range(MAX_ITERS):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # start vector is in the null space; covariance contributes nothing here
            return 0.0, v
        v = w / norm
        eigval = float(v @ cov @ v)
        if np.linalg.norm(cov @ v - eigval * v) <= RESIDUAL_TOL:
            break
    return eigval, v


def _fix_sign(v: np.ndarray) -> np.ndarray:
    lead = int(np.argmax(np.abs(v)))
    return -v if v[lead] < 0 else v


def top2_components(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Top-2 principal directions (unit vectors) of the centered features."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3 or x.shape[1] < 2:
        raise ConfigurationError(
            f"need at least 3 rows and 2 feature dimensions, got {x.shape}"
        )
    centered = x - x.mean(axis=0)
    if np.allclose(centered, 0.0):
        raise DegenerateDataError("all feature rows are identical; nothing to project")
    cov = (centered.T @ centered) / (x.shape[0] - 1)
    ev1, v1 = _power_iteration(cov)
    deflated = cov - ev1 * np.outer(v1, v1)
    _, v2 = _power_iteration(deflated)
    # re-orthogonalize against v1 to stop round-off drift
    v2 = v2 - (v2 @ v1) * v1
    norm2 = np.linalg.norm(v2)
    if norm2 > 0:
        v2 = v2 / norm2
    return _fix_sign(v1), _fix_sign(v2)


def pca_project(features: np.ndarray) -> np.ndarray:
    """Mean-centered projection of each feature row onto the top-2 components."""
    x = np.asarray(features, dtype=np.float64)
    v1, v2 = top2_components(x)
    centered = x - x.mean(axis=0)
    return np.stack([centered @ v1, centered @ v2], axis=1)
