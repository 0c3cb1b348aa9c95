"""Dice and BCE losses with analytic gradients, plus the two-stage weighting.

Both losses return the gradient with respect to every predicted pixel so
finite-difference checks can pin the analytic forms. Sums accumulate in
float64; the BCE prediction is clamped away from {0,1} before the logs and
its gradient is defined as zero inside the clamped zones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DICE_GUARD = 1e-8
BCE_CLAMP = 1e-7


def _pred_array(pred) -> np.ndarray:
    a = getattr(pred, "values", pred)
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"prediction must be H×W, got shape {a.shape}")
    return a


def _gt_array(gt, shape) -> np.ndarray:
    a = getattr(gt, "values", gt)
    a = np.asarray(a, dtype=np.float64)
    if a.shape != shape:
        raise ValueError(f"shapes disagree: pred {shape} vs gt {a.shape}")
    return a


def dice_loss(pred, gt) -> tuple[float, np.ndarray]:
    """1 − 2Σ(y·ŷ) / (Σy² + Σŷ² + guard), with its gradient in ŷ.

    The +1e-8 denominator guard makes the empty-vs-empty case well defined
    (it evaluates to loss 1.0, a recorded quirk of guarding the 0/0).
    """
    y_hat = _pred_array(pred)
    y = _gt_array(gt, y_hat.shape)
    num = 2.0 * (y * y_hat).sum()
    den = (y * y).sum() + (y_hat * y_hat).sum() + DICE_GUARD
    loss = 1.0 - num / den
    grad = (2.0 * num * y_hat - 2.0 * y * den) / (den * den)
    return float(loss), grad


def bce_loss(pred, gt) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy with prediction clamped to [1e-7, 1−1e-7].

    The gradient is taken with respect to the pre-clamp prediction, so it
    is exactly zero wherever the clamp is active.
    """
    y_hat = _pred_array(pred)
    y = _gt_array(gt, y_hat.shape)
    clamped = np.clip(y_hat, BCE_CLAMP, 1.0 - BCE_CLAMP)
    n = y_hat.size
    loss = -(y * np.log(clamped) + (1.0 - y) * np.log1p(-clamped)).sum() / n
    grad = -(y / clamped - (1.0 - y) / (1.0 - clamped)) / n
    grad[(y_hat < BCE_CLAMP) | (y_hat > 1.0 - BCE_CLAMP)] = 0.0
    return float(loss), grad


@dataclass(frozen=True)
class LossValue:
    """Stage-weighted loss breakdown.

    dice and bce are already weighted sums over the two stages; total is
    their sum. Gradients are per stage (each scaled by its stage weight)
    since the two predictions are distinct arrays.
    """

    total: float
    dice: float
    bce: float
    grad_initial: np.ndarray
    grad_refined: np.ndarray


def total_loss(
    initial_pred,
    refined_pred,
    gt,
    w_init: float = 0.3,
    w_refine: float = 0.7,
) -> LossValue:
    """Weighted two-stage loss: w_init·(dice+bce)(initial) + w_refine·(dice+bce)(refined)."""
    if w_init < 0.0 or w_refine < 0.0:
        raise ValueError("stage weights must be >= 0")
    d_i, gd_i = dice_loss(initial_pred, gt)
    b_i, gb_i = bce_loss(initial_pred, gt)
    d_r, gd_r = dice_loss(refined_pred, gt)
    b_r, gb_r = bce_loss(refined_pred, gt)
    dice = w_init * d_i + w_refine * d_r
    bce = w_init * b_i + w_refine * b_r
    return LossValue(
        total=dice + bce,
        dice=dice,
        bce=bce,
        grad_initial=w_init * (gd_i + gb_i),
        grad_refined=w_refine * (gd_r + gb_r),
    )
