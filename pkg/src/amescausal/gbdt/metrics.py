"""Regression scoring."""

from __future__ import annotations

import numpy as np

from ..errors import DataError


def r2_score(pred: np.ndarray, actual: np.ndarray) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot."""
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape or pred.ndim != 1:
        raise DataError("pred and actual must be 1-D vectors of equal length")
    if pred.size < 2:
        raise DataError("need at least 2 observations")
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0.0:
        raise DataError("actual values are constant; R^2 is undefined")
    ss_res = float(np.sum((actual - pred) ** 2))
    return 1.0 - ss_res / ss_tot


def rmse(pred: np.ndarray, actual: np.ndarray) -> float:
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(actual, dtype=np.float64)
    return float(np.sqrt(np.mean(diff * diff)))
