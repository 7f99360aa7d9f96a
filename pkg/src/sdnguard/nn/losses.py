"""Loss functions."""

from __future__ import annotations

import numpy as np

from ..errors import DataValidationError


def mse_loss(pred, target):
    """Mean squared error over every element, with its gradient.

    loss = mean((pred - target)^2); grad = 2 (pred - target) / element count.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DataValidationError(
            f"mse_loss: shape mismatch {pred.shape} vs {target.shape}"
        )
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = 2.0 * diff / diff.size
    return loss, grad
