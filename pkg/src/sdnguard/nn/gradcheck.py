"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np


def numerical_gradient(f, arr, eps=1e-5, coords=None):
    """Central-difference gradient of scalar ``f`` with respect to ``arr``.

    ``f`` is called with no arguments and must read ``arr`` by reference;
    entries are perturbed in place and restored.  ``coords`` restricts the
    check to a subset of flat indices (all entries when None).
    """
    flat = arr.reshape(-1)
    coords = list(range(flat.size)) if coords is None else list(coords)
    grad = np.zeros(len(coords))
    for out_i, i in enumerate(coords):
        orig = flat[i]
        flat[i] = orig + eps
        f_plus = f()
        flat[i] = orig - eps
        f_minus = f()
        flat[i] = orig
        grad[out_i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def max_relative_error(analytic, numeric, floor=1e-6):
    """Largest per-coordinate relative error between two gradient vectors."""
    analytic = np.asarray(analytic, dtype=np.float64).reshape(-1)
    numeric = np.asarray(numeric, dtype=np.float64).reshape(-1)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_array_gradient(f, arr, analytic, eps=1e-5, coords=None):
    """Convenience wrapper returning the max relative error for one array."""
    if coords is not None:
        coords = list(coords)
        numeric = numerical_gradient(f, arr, eps=eps, coords=coords)
        chosen = np.asarray(analytic).reshape(-1)[coords]
        return max_relative_error(chosen, numeric)
    numeric = numerical_gradient(f, arr, eps=eps)
    return max_relative_error(analytic, numeric)
