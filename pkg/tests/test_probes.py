"""Linear probes: plateau schedule, gradients and end-to-end fitting."""

import numpy as np
import pytest

from radpipe.errors import ComputeError
from radpipe.metrics import auroc, mean_absolute_deviation
from radpipe.probes import (
    PlateauSchedule,
    ProbeModel,
    TrainConfig,
    bce_loss_and_grad,
    huber_loss_and_grad,
    train_probe,
)


# -- schedule ---------------------------------------------------------------

def test_schedule_halves_after_three_stale_epochs():
    sched = PlateauSchedule(1.0)
    assert sched.observe(1.0)  # establishes the best
    assert sched.observe(1.0) and sched.lr == 1.0
    assert sched.observe(1.0) and sched.lr == 1.0
    assert sched.observe(1.0) and sched.lr == 0.5  # third stale epoch
    assert sched.observe(0.5) and sched.lr == 0.5  # improvement resets staleness
    for _ in range(3):
        assert sched.observe(0.5)  # three fresh stale epochs
    assert sched.lr == 0.25


def test_schedule_scripted_trace_halves_at_3_6_9_and_stops_at_10():
    sched = PlateauSchedule(8.0)
    sched.observe(1.0)
    rates = []
    alive = []
    for _ in range(10):
        alive.append(sched.observe(2.0))
        rates.append(sched.lr)
    # Halvings land on the 3rd, 6th and 9th consecutive stale epochs.
    assert rates == [8.0, 8.0, 4.0, 4.0, 4.0, 2.0, 2.0, 2.0, 1.0, 1.0]
    assert alive == [True] * 9 + [False]


def test_schedule_strict_decrease_required():
    sched = PlateauSchedule(1.0, halve_patience=3, stop_patience=4)
    sched.observe(1.0)
    assert sched.observe(0.999999)  # improvement
    for result in (True, True, True, False):
        assert sched.observe(0.999999) is result  # equal loss is stale


def test_schedule_rejects_non_finite_loss():
    sched = PlateauSchedule(1.0)
    with pytest.raises(ComputeError):
        sched.observe(float("nan"))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(factor=1.0)
    with pytest.raises(ValueError):
        TrainConfig(max_epochs=-1)


# -- analytic gradients vs central differences ---------------------------------

def central_difference_grads(fn, w, b, h=1e-4):
    grad_w = np.zeros_like(w)
    for i in range(len(w)):
        wp, wm = w.copy(), w.copy()
        wp[i] += h
        wm[i] -= h
        grad_w[i] = (fn(wp, b) - fn(wm, b)) / (2 * h)
    grad_b = (fn(w, b + h) - fn(w, b - h)) / (2 * h)
    return grad_w, grad_b


@pytest.mark.parametrize("pos_weight", [1.0, 3.5])
def test_bce_gradient_matches_finite_differences(pos_weight):
    rng = np.random.default_rng(8)
    X = rng.normal(size=(30, 5))
    y = rng.integers(0, 2, size=30).astype(float)
    w = rng.normal(size=5) * 0.5
    b = 0.3

    loss, grad_w, grad_b = bce_loss_and_grad(w, b, X, y, pos_weight)
    num_w, num_b = central_difference_grads(
        lambda wv, bv: bce_loss_and_grad(wv, bv, X, y, pos_weight)[0], w, b
    )
    assert np.all(np.abs(grad_w - num_w) <= 1e-4 * np.maximum(1.0, np.abs(num_w)))
    assert abs(grad_b - num_b) <= 1e-4 * max(1.0, abs(num_b))
    assert loss > 0


def test_huber_gradient_matches_finite_differences():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(40, 4))
    z = rng.normal(size=40) * 3.0  # both quadratic and linear branches
    w = rng.normal(size=4)
    b = -0.7
    _, grad_w, grad_b = huber_loss_and_grad(w, b, X, z)
    num_w, num_b = central_difference_grads(
        lambda wv, bv: huber_loss_and_grad(wv, bv, X, z)[0], w, b
    )
    assert np.all(np.abs(grad_w - num_w) <= 1e-4 * np.maximum(1.0, np.abs(num_w)))
    assert abs(grad_b - num_b) <= 1e-4 * max(1.0, abs(num_b))


def test_bce_is_stable_at_extreme_scores():
    X = np.array([[1000.0], [-1000.0]])
    y = np.array([1.0, 0.0])
    loss, grad_w, grad_b = bce_loss_and_grad(np.array([1.0]), 0.0, X, y, 1.0)
    assert np.isfinite(loss) and np.isfinite(grad_w).all() and np.isfinite(grad_b)


# -- training ----------------------------------------------------------------

def separable_data(n=200, d=8, margin=1.0, seed=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (X[:, 0] > 0).astype(float)
    X[:, 0] += np.where(y == 1, margin, -margin)
    return X * 40.0, y  # large feature scale compensates the 1e-4 rate


def test_classification_probe_separates():
    X, y = separable_data()
    result = train_probe(X, y, "classification")
    scores = result.model.decision_values(X)
    assert auroc(scores, y.astype(int)) >= 0.99


def test_classification_uses_both_class_validation():
    X, y = separable_data(n=80)
    with pytest.raises(ComputeError):
        train_probe(X, np.zeros(80), "classification")
    with pytest.raises(ValueError):
        train_probe(X, y * 2, "classification")


def test_regression_probe_recovers_linear_map():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(150, 5)) * 50.0
    w_true = np.array([0.4, -0.2, 0.1, 0.05, -0.3])
    targets = X @ w_true + 2.0
    result = train_probe(X, targets, "regression")
    preds = result.model.predict_values(X)
    assert mean_absolute_deviation(preds, targets) <= 1e-2 * float(np.std(targets))


def test_regression_standardization_comes_from_training_set():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(60, 3))
    targets = rng.normal(size=60) * 7.0 + 100.0
    result = train_probe(X, targets, "regression", config=TrainConfig(max_epochs=0))
    assert result.model.target_shift == pytest.approx(float(np.mean(targets)))
    assert result.model.target_scale == pytest.approx(float(np.std(targets)))
    # The zero-epoch model predicts the training mean everywhere.
    np.testing.assert_allclose(result.model.predict_values(X), np.mean(targets))


def test_constant_targets_use_unit_scale():
    X = np.ones((5, 2))
    result = train_probe(X, np.full(5, 3.0), "regression", config=TrainConfig(max_epochs=0))
    assert result.model.target_scale == 1.0
    assert result.model.target_shift == 3.0


def test_best_model_snapshot_not_last():
    # A huge rate diverges fast; best-validation snapshot must win over final.
    X, y = separable_data(n=60, d=4)
    cfg = TrainConfig(learning_rate=50.0, max_epochs=200)
    result = train_probe(X, y, "classification", config=cfg)
    assert result.best_loss == min(result.val_loss_history)
    assert result.val_loss_history[result.best_epoch] == result.best_loss


def test_validation_set_drives_early_stop():
    rng = np.random.default_rng(14)
    X = rng.normal(size=(50, 3)) * 30.0
    y = (X[:, 0] > 0).astype(float)
    Xv = rng.normal(size=(30, 3)) * 30.0
    yv = rng.integers(0, 2, size=30).astype(float)  # unlearnable validation
    result = train_probe(X, y, "classification", valid_features=Xv, valid_targets=yv)
    assert result.epochs_run < TrainConfig().max_epochs


def test_lr_history_records_rate_per_step():
    X, y = separable_data(n=40, d=3)
    result = train_probe(X, y, "classification", config=TrainConfig(max_epochs=25))
    assert len(result.lr_history) == result.epochs_run
    assert len(result.val_loss_history) == result.epochs_run + 1
    assert result.lr_history[0] == TrainConfig().learning_rate


def test_train_probe_input_validation():
    X = np.zeros((4, 2))
    with pytest.raises(ValueError, match="kind"):
        train_probe(X, np.zeros(4), "ranking")
    with pytest.raises(ValueError, match="together"):
        train_probe(X, [0, 1, 0, 1], "classification", valid_features=X)
    with pytest.raises(ValueError, match="2-D"):
        train_probe(np.zeros(4), np.zeros(4), "regression")
    with pytest.raises(ComputeError, match="non-finite"):
        train_probe(np.full((2, 2), np.nan), [0.0, 1.0], "regression")


def test_probe_model_guards_kind_specific_calls():
    model = ProbeModel(weights=np.array([1.0]), bias=0.0, kind="classification")
    with pytest.raises(ValueError):
        model.predict_values(np.ones((2, 1)))
    reg = ProbeModel(weights=np.array([1.0]), bias=0.0, kind="regression")
    with pytest.raises(ValueError):
        reg.predict_proba(np.ones((2, 1)))
    probs = model.predict_proba(np.array([[10.0], [-10.0]]))
    assert probs[0] > 0.99 and probs[1] < 0.01
