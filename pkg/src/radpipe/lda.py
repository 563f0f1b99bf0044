"""Fisher linear discriminant direction between two embedding classes."""

from __future__ import annotations

import numpy as np

from .errors import ComputeError

RIDGE_FRACTION = 1e-6


def lda_direction(features: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fisher direction and the scalar projections of every sample onto it.

    Solves (S_w + eps I) w = mu1 - mu0 with a small ridge eps proportional
    to the mean within-class variance (trace(S_w) / d), so the solve stays
    well posed when the scatter is rank deficient. w is unit length with
    its sign fixed so class-1 projections have the higher mean.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValueError("labels must be one per feature row")
    if not np.all(np.isfinite(X)):
        raise ComputeError("features contain non-finite values")
    if not np.all(np.isin(y, (0, 1))):
        raise ValueError("labels must be 0/1")

    X0 = X[y == 0]
    X1 = X[y == 1]
    if len(X0) == 0 or len(X1) == 0:
        raise ComputeError("LDA needs samples from both classes")

    mu0 = X0.mean(axis=0)
    mu1 = X1.mean(axis=0)
    d0 = X0 - mu0
    d1 = X1 - mu1
    scatter = d0.T @ d0 + d1.T @ d1

    dim = X.shape[1]
    trace = float(np.trace(scatter))
    eps = RIDGE_FRACTION * (trace / dim) if trace > 0.0 else RIDGE_FRACTION
    w = np.linalg.solve(scatter + eps * np.eye(dim), mu1 - mu0)

    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ComputeError("class means coincide; no discriminant direction")
    w = w / norm
    if float((mu1 - mu0) @ w) < 0.0:
        w = -w
    return w, X @ w


def project(features: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Scalar projections of rows onto the discriminant direction."""
    X = np.asarray(features, dtype=np.float64)
    w = np.asarray(direction, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != w.shape[0]:
        raise ValueError("features and direction disagree on dimension")
    return X @ w
