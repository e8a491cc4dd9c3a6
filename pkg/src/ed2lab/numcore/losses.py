"""Regression losses as fused graph nodes."""

import numpy as np

from .tensor import Tensor, _as_tensor


def _check(pred: Tensor, target: Tensor):
    if pred.shape != target.shape:
        raise ValueError(f"pred shape {pred.shape} != target shape {target.shape}")


def _coef(err: np.ndarray, weights) -> np.ndarray:
    if weights is None:
        return np.full(err.shape, 1.0 / err.size)
    weights = np.broadcast_to(np.asarray(weights, dtype=np.float64), err.shape)
    return weights


def mse_loss(pred, target, weights=None) -> Tensor:
    """Mean squared error, or sum(weights * e^2) when `weights` is given."""
    pred, target = _as_tensor(pred), _as_tensor(target)
    _check(pred, target)
    err = pred.values - target.values
    coef = _coef(err, weights)
    grad = 2.0 * coef * err
    return Tensor._node(np.asarray(np.sum(coef * err * err)), (pred, target), lambda g: (g * grad, -g * grad))


def huber_loss(pred, target, delta: float = 1.0, weights=None) -> Tensor:
    """Mean of 0.5*e^2 inside |e| <= delta and delta*(|e| - delta/2) outside."""
    if delta <= 0:
        raise ValueError("huber delta must be positive")
    pred, target = _as_tensor(pred), _as_tensor(target)
    _check(pred, target)
    err = pred.values - target.values
    coef = _coef(err, weights)
    quad = np.abs(err) <= delta
    per = np.where(quad, 0.5 * err * err, delta * (np.abs(err) - 0.5 * delta))
    grad = coef * np.where(quad, err, delta * np.sign(err))
    return Tensor._node(np.asarray(np.sum(coef * per)), (pred, target), lambda g: (g * grad, -g * grad))
