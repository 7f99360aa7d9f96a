"""Small input-validation helpers used by the estimator-style classes."""

from __future__ import annotations

import numpy as np

from .errors import DataValidationError


def check_array(x, name="X", ndim=None, dtype=np.float64, allow_empty=False):
    """Coerce ``x`` to a contiguous ndarray and run basic sanity checks."""
    arr = np.ascontiguousarray(x, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise DataValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise DataValidationError(f"{name} is empty")
    return arr


def check_finite(arr, name="X"):
    if not np.all(np.isfinite(arr)):
        bad = int(np.sum(~np.isfinite(arr)))
        raise DataValidationError(f"{name} contains {bad} non-finite value(s)")
    return arr


def check_feature_matrix(X, n_features, name="X"):
    """Validate a 2-D feature matrix with a fixed column count."""
    arr = check_array(X, name=name, ndim=2)
    if arr.shape[1] != n_features:
        raise DataValidationError(
            f"{name} must have {n_features} columns, got {arr.shape[1]}"
        )
    return check_finite(arr, name=name)


def check_consistent_length(*arrays):
    lengths = {len(a) for a in arrays if a is not None}
    if len(lengths) > 1:
        raise DataValidationError(f"inconsistent lengths: {sorted(lengths)}")
