"""Linear probes over frozen embeddings.

A probe is a single linear layer fitted by full-batch gradient descent, one
gradient step per epoch. The learning rate starts at 1e-4 and follows a
plateau schedule driven by the validation loss: it halves after every three
consecutive epochs without a validation-loss decrease, and training stops
after ten such epochs. The returned model is the best-validation snapshot,
which may be the untouched initialization.

Classification probes minimise a class-weighted binary cross entropy with
the positive class weighted by n_negative / n_positive. Regression probes
minimise a Huber loss (delta 1.0) on standardised targets; the shift and
scale come from the training-target mean and standard deviation, are fixed
before the first epoch, and are never trained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ComputeError

DEFAULT_LEARNING_RATE = 1e-4
DEFAULT_MAX_EPOCHS = 10_000
HALVE_PATIENCE = 3
STOP_PATIENCE = 10
HUBER_DELTA = 1.0


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = DEFAULT_LEARNING_RATE
    max_epochs: int = DEFAULT_MAX_EPOCHS
    halve_patience: int = HALVE_PATIENCE
    stop_patience: int = STOP_PATIENCE
    factor: float = 0.5

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be non-negative")
        if self.halve_patience < 1 or self.stop_patience < 1:
            raise ValueError("patience values must be at least 1")
        if not 0 < self.factor < 1:
            raise ValueError("factor must be in (0, 1)")


class PlateauSchedule:
    """Validation-driven step size control.

    ``observe(loss)`` is called once per epoch and returns True while
    training should continue. A strict decrease below the best loss seen so
    far resets the stale counter; otherwise the counter grows, the rate is
    multiplied by ``factor`` each time the counter reaches a multiple of
    ``halve_patience``, and ``observe`` returns False once the counter
    reaches ``stop_patience``.
    """

    def __init__(
        self,
        initial_lr: float,
        halve_patience: int = HALVE_PATIENCE,
        stop_patience: int = STOP_PATIENCE,
        factor: float = 0.5,
    ) -> None:
        if initial_lr <= 0:
            raise ValueError("initial_lr must be positive")
        self.lr = float(initial_lr)
        self.halve_patience = int(halve_patience)
        self.stop_patience = int(stop_patience)
        self.factor = float(factor)
        self.best = math.inf
        self.stale = 0

    def observe(self, loss: float) -> bool:
        if not math.isfinite(loss):
            raise ComputeError(f"non-finite validation loss {loss!r}")
        if loss < self.best:
            self.best = loss
            self.stale = 0
            return True
        self.stale += 1
        if self.stale >= self.stop_patience:
            return False
        if self.stale % self.halve_patience == 0:
            self.lr *= self.factor
        return True


@dataclass(frozen=True)
class ProbeModel:
    weights: np.ndarray
    bias: float
    kind: str  # "classification" or "regression"
    target_shift: float = 0.0
    target_scale: float = 1.0

    def decision_values(self, features: np.ndarray) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        return X @ self.weights + self.bias

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        if self.kind != "classification":
            raise ValueError("probabilities are only defined for classification probes")
        return _sigmoid(self.decision_values(features))

    def predict_labels(self, features: np.ndarray) -> np.ndarray:
        return (self.decision_values(features) >= 0.0).astype(np.int64)

    def predict_values(self, features: np.ndarray) -> np.ndarray:
        if self.kind != "regression":
            raise ValueError("value prediction is only defined for regression probes")
        return self.decision_values(features) * self.target_scale + self.target_shift


@dataclass(frozen=True)
class TrainResult:
    model: ProbeModel
    val_loss_history: tuple[float, ...]  # index 0 is the initial model
    lr_history: tuple[float, ...]  # rate used for each epoch's step
    best_epoch: int
    best_loss: float
    epochs_run: int


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def bce_loss_and_grad(
    weights: np.ndarray,
    bias: float,
    features: np.ndarray,
    labels: np.ndarray,
    pos_weight: float,
) -> tuple[float, np.ndarray, float]:
    """Weighted binary cross entropy and its gradient.

    Uses logaddexp-based log probabilities so extreme scores stay finite.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n = X.shape[0]
    s = X @ weights + bias
    log_p = -np.logaddexp(0.0, -s)
    log_q = -np.logaddexp(0.0, s)
    loss = -np.mean(pos_weight * y * log_p + (1.0 - y) * log_q)
    p = _sigmoid(s)
    ds = (pos_weight * y * (p - 1.0) + (1.0 - y) * p) / n
    grad_w = X.T @ ds
    grad_b = float(np.sum(ds))
    return float(loss), grad_w, grad_b


def huber_loss_and_grad(
    weights: np.ndarray,
    bias: float,
    features: np.ndarray,
    targets: np.ndarray,
    delta: float = HUBER_DELTA,
) -> tuple[float, np.ndarray, float]:
    """Mean Huber loss on raw residuals and its gradient."""
    X = np.asarray(features, dtype=np.float64)
    z = np.asarray(targets, dtype=np.float64)
    n = X.shape[0]
    r = X @ weights + bias - z
    a = np.abs(r)
    quad = a <= delta
    per = np.where(quad, 0.5 * r * r, delta * (a - 0.5 * delta))
    dr = np.clip(r, -delta, delta) / n
    grad_w = X.T @ dr
    grad_b = float(np.sum(dr))
    return float(np.mean(per)), grad_w, grad_b


def _as_xy(features: np.ndarray, targets: Sequence[float], what: str) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{what} features must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValueError(f"{what} targets must be one value per feature row")
    if X.shape[0] == 0:
        raise ValueError(f"{what} set is empty")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ComputeError(f"{what} data contains non-finite values")
    return X, y


def train_probe(
    features: np.ndarray,
    targets: Sequence[float],
    kind: str,
    config: TrainConfig | None = None,
    valid_features: np.ndarray | None = None,
    valid_targets: Sequence[float] | None = None,
) -> TrainResult:
    """Fit a linear probe by full-batch gradient descent.

    When no validation set is given the training set plays that role. The
    classifier's positive-class weight and the regressor's target shift and
    scale are always derived from the training set, and the validation loss
    is the same objective evaluated on the validation set.
    """
    if kind not in ("classification", "regression"):
        raise ValueError(f"unknown probe kind {kind!r}")
    if (valid_features is None) != (valid_targets is None):
        raise ValueError("validation features and targets must be given together")
    cfg = config or TrainConfig()
    X, y = _as_xy(features, targets, "training")
    if valid_features is None:
        Xv, yv = X, y
    else:
        Xv, yv = _as_xy(valid_features, valid_targets, "validation")
        if Xv.shape[1] != X.shape[1]:
            raise ValueError("validation features disagree with training dimension")

    shift, scale = 0.0, 1.0
    loss_grad: Callable[[np.ndarray, float], tuple[float, np.ndarray, float]]
    val_loss: Callable[[np.ndarray, float], float]
    if kind == "classification":
        for name, labels in (("training", y), ("validation", yv)):
            if not np.all(np.isin(labels, (0.0, 1.0))):
                raise ValueError(f"{name} labels must be 0/1")
        n_pos = int(np.sum(y == 1.0))
        n_neg = int(np.sum(y == 0.0))
        if n_pos == 0 or n_neg == 0:
            raise ComputeError("classification training needs both classes")
        pos_weight = n_neg / n_pos

        def loss_grad(w: np.ndarray, b: float) -> tuple[float, np.ndarray, float]:
            return bce_loss_and_grad(w, b, X, y, pos_weight)

        def val_loss(w: np.ndarray, b: float) -> float:
            return bce_loss_and_grad(w, b, Xv, yv, pos_weight)[0]
    else:
        shift = float(np.mean(y))
        scale = float(np.std(y))
        if scale == 0.0:
            scale = 1.0
        z = (y - shift) / scale
        zv = (yv - shift) / scale

        def loss_grad(w: np.ndarray, b: float) -> tuple[float, np.ndarray, float]:
            return huber_loss_and_grad(w, b, X, z, HUBER_DELTA)

        def val_loss(w: np.ndarray, b: float) -> float:
            return huber_loss_and_grad(w, b, Xv, zv, HUBER_DELTA)[0]

    w = np.zeros(X.shape[1], dtype=np.float64)
    b = 0.0
    schedule = PlateauSchedule(cfg.learning_rate, cfg.halve_patience, cfg.stop_patience, cfg.factor)

    v0 = val_loss(w, b)
    schedule.observe(v0)
    best_w, best_b = w.copy(), b
    best_loss, best_epoch = v0, 0
    val_losses = [v0]
    rates: list[float] = []
    epochs_run = 0

    for epoch in range(1, cfg.max_epochs + 1):
        _, grad_w, grad_b = loss_grad(w, b)
        rates.append(schedule.lr)
        w = w - schedule.lr * grad_w
        b = b - schedule.lr * grad_b
        epochs_run = epoch
        v = val_loss(w, b)
        val_losses.append(v)
        if v < best_loss:
            best_loss, best_epoch = v, epoch
            best_w, best_b = w.copy(), b
        if not schedule.observe(v):
            break

    model = ProbeModel(
        weights=best_w,
        bias=best_b,
        kind=kind,
        target_shift=shift,
        target_scale=scale,
    )
    return TrainResult(
        model=model,
        val_loss_history=tuple(val_losses),
        lr_history=tuple(rates),
        best_epoch=best_epoch,
        best_loss=best_loss,
        epochs_run=epochs_run,
    )
