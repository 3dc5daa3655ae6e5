"""Reference loss kernels with analytic gradients.

Shapes are class-major (C, H, W). Ground truths are one-hot. Every gradient
here is checked against central finite differences in the test suite and by
the ``losscheck`` command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Probability clamp applied before logarithms.
PROB_EPS = 1e-7


@dataclass(frozen=True)
class ClassWeights:
    """Per-class positive loss weights."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(w <= 0 for w in self.weights):
            raise ValueError("class weights must be positive")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)


def inverse_boundary_weights(freqs) -> ClassWeights:
    """w_c = 1 / ln(1.02 + p_c): rarer classes get larger weights."""
    freqs = np.asarray(freqs, dtype=np.float64)
    if np.any(freqs < 0) or np.any(freqs > 1):
        raise ValueError("class frequencies must lie in [0, 1]")
    return ClassWeights(tuple(1.0 / np.log(1.02 + freqs)))


def _check_shapes(pred: np.ndarray, gt: np.ndarray) -> None:
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    if pred.ndim != 3:
        raise ValueError(f"expected (C, H, W) arrays, got shape {pred.shape}")


def soft_iou_loss(pred: np.ndarray, gt: np.ndarray) -> tuple[float, np.ndarray]:
    """Differentiable IoU surrogate: minus the mean per-class soft IoU ratio.

    Per class, ratio = sum(gt * pred) / sum(gt + pred - gt * pred) aggregated
    over pixels, so class sizes never weight against each other. A class
    absent from both gt and prediction counts as perfect agreement (ratio 1)
    with zero gradient. Returns (loss, d loss / d pred).
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    _check_shapes(pred, gt)
    c = pred.shape[0]
    inter = (gt * pred).sum(axis=(1, 2))
    union = (gt + pred - gt * pred).sum(axis=(1, 2))
    ratio = np.ones(c)
    live = union > 0
    ratio[live] = inter[live] / union[live]
    loss = -ratio.sum() / c

    grad = np.zeros_like(pred)
    for ci in np.nonzero(live)[0]:
        g = gt[ci]
        # d inter / d pred = gt, d union / d pred = 1 - gt
        dratio = (g * union[ci] - inter[ci] * (1.0 - g)) / (union[ci] ** 2)
        grad[ci] = -dratio / c
    return float(loss), grad


def balanced_ce_loss(
    pred: np.ndarray, gt: np.ndarray, weights: ClassWeights
) -> tuple[float, np.ndarray]:
    """Class-weighted cross entropy, per-pixel mean, normalized by sum(w_c).

    Predictions are clamped to [1e-7, 1 - 1e-7] before the log; the gradient
    is zero where the clamp is active. Returns (loss, d loss / d pred).
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    _check_shapes(pred, gt)
    w = weights.as_array()
    if w.shape[0] != pred.shape[0]:
        raise ValueError(f"expected {pred.shape[0]} class weights, got {w.shape[0]}")
    n_pixels = pred.shape[1] * pred.shape[2]
    clamped = np.clip(pred, PROB_EPS, 1.0 - PROB_EPS)
    scale = 1.0 / (w.sum() * n_pixels)
    loss = -scale * (gt * np.log(clamped) * w[:, None, None]).sum()

    grad = np.where(
        (pred > PROB_EPS) & (pred < 1.0 - PROB_EPS),
        -scale * gt * w[:, None, None] / clamped,
        0.0,
    )
    return float(loss), grad


def total_loss(seg_losses, conn_losses) -> float:
    """Sum of paired per-stage segmentation and connectivity losses."""
    seg = list(seg_losses)
    conn = list(conn_losses)
    if len(seg) != len(conn):
        raise ValueError(f"stage counts differ: {len(seg)} vs {len(conn)}")
    return float(sum(seg) + sum(conn))


def finite_diff_gradient(f, x: np.ndarray, eps: float = 1e-4) -> np.ndarray:
    """Central-difference gradient estimate of a scalar field at x."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + eps
        fp = f(x)
        xf[i] = orig - eps
        fm = f(x)
        xf[i] = orig
        flat[i] = (fp - fm) / (2.0 * eps)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Max |a - n| / max(|a|, |n|, floor) over all coordinates."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))
