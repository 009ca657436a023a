"""Regression error metrics."""
from __future__ import annotations

import numpy as np

from .tensor import DimensionError

__all__ = ["mse", "mae"]


def _paired(y, y_hat, opname):
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.shape != y_hat.shape:
        raise DimensionError(f"{opname}: lengths differ, {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise DimensionError(f"{opname}: empty inputs")
    return y, y_hat


def mse(y, y_hat) -> float:
    """Mean squared error (1/n) * sum (y - y_hat)^2."""
    y, y_hat = _paired(y, y_hat, "mse")
    return float(np.mean((y - y_hat) ** 2))


def mae(y, y_hat) -> float:
    """Mean absolute error (1/n) * sum |y - y_hat|."""
    y, y_hat = _paired(y, y_hat, "mae")
    return float(np.mean(np.abs(y - y_hat)))
