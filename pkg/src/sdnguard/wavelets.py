"""Undecimated (à-trous) multilevel wavelet decomposition.

A length-k sequence is filtered with an orthonormal Daubechies pair whose
taps are dilated by 2**(i-1) at level i; no downsampling is performed, so
an n-level decomposition yields n detail branches plus one approximation
branch, all of length k.  Boundaries are handled by circular (periodic)
extension, which keeps the transform exactly shift-equivariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, sqrt

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ConfigurationError, DataValidationError
from .validation import check_array, check_finite

_TOL = 1e-12


def daubechies_lowpass(order: int) -> np.ndarray:
    """Orthonormal Daubechies scaling filter with ``order`` vanishing moments.

    Built by spectral factorization: the roots of the Bernstein polynomial
    P(y) = sum_k C(order-1+k, k) y^k are mapped to z-plane roots via
    y = (2 - z - 1/z) / 4, the root inside the unit circle is kept for each
    pair, and the minimum-phase product with the (1+z)^order factor is
    normalized so the taps sum to sqrt(2).
    """
    if order < 1:
        raise ConfigurationError(f"wavelet order must be >= 1, got {order}")
    if order == 1:
        return np.array([1.0, 1.0]) / sqrt(2.0)
    p = np.array([comb(order - 1 + k, k) for k in range(order)], dtype=np.float64)
    yroots = np.roots(p[::-1])
    zroots = []
    for y in yroots:
        b = 2.0 - 4.0 * y
        disc = np.sqrt(complex(b * b - 4.0))
        for z in ((b + disc) / 2.0, (b - disc) / 2.0):
            if abs(z) < 1.0:
                zroots.append(z)
                break
    h = np.real(np.poly([-1.0] * order + zroots))
    h *= sqrt(2.0) / h.sum()
    if abs(h[0]) < abs(h[-1]):
        h = h[::-1].copy()
    return h


def highpass_from_lowpass(h: np.ndarray) -> np.ndarray:
    """Quadrature-mirror highpass: g[k] = (-1)^k * h[L-1-k]."""
    signs = np.where(np.arange(len(h)) % 2 == 0, 1.0, -1.0)
    return signs * h[::-1]


@dataclass(frozen=True)
class WaveletFilters:
    """An orthonormal analysis filter pair."""

    name: str
    lowpass: np.ndarray
    highpass: np.ndarray

    def __post_init__(self):
        h, g = self.lowpass, self.highpass
        if len(h) != len(g):
            raise ConfigurationError("lowpass/highpass tap counts differ")
        if abs(h.sum() - sqrt(2.0)) > _TOL:
            raise ConfigurationError(f"{self.name}: lowpass taps must sum to sqrt(2)")
        if abs(g.sum()) > _TOL:
            raise ConfigurationError(f"{self.name}: highpass taps must sum to 0")
        if abs(np.dot(h, h) - 1.0) > _TOL:
            raise ConfigurationError(f"{self.name}: lowpass taps must have unit energy")

    def __len__(self):
        return len(self.lowpass)


def filter_bank(name: str = "DB4") -> WaveletFilters:
    """Return the analysis filter pair for a Daubechies wavelet name.

    ``DB4`` (eight taps) is the default; ``DB1``..``DB10`` are accepted.
    """
    token = name.strip().lower()
    if not token.startswith("db"):
        raise ConfigurationError(f"unknown wavelet {name!r}")
    try:
        order = int(token[2:])
    except ValueError:
        raise ConfigurationError(f"unknown wavelet {name!r}") from None
    if not 1 <= order <= 10:
        raise ConfigurationError(f"unsupported wavelet order in {name!r} (want 1..10)")
    h = daubechies_lowpass(order)
    return WaveletFilters(name=f"DB{order}", lowpass=h, highpass=highpass_from_lowpass(h))


@dataclass
class BranchSet:
    """The n+1 equal-length subsequences produced by an n-level decomposition.

    ``branches`` is ordered detail-first: n detail branches (finest level
    first) followed by the level-n approximation.
    """

    level: int
    branches: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.branches) != self.level + 1:
            raise DataValidationError(
                f"expected {self.level + 1} branches for level {self.level}, "
                f"got {len(self.branches)}"
            )
        lengths = {len(b) for b in self.branches}
        if len(lengths) > 1:
            raise DataValidationError(f"branches have mixed lengths: {sorted(lengths)}")

    @property
    def length(self) -> int:
        return len(self.branches[0])

    @property
    def count(self) -> int:
        return len(self.branches)

    def as_matrix(self) -> np.ndarray:
        return np.stack(self.branches)


def _circular_filter(a: np.ndarray, taps: np.ndarray, dilation: int) -> np.ndarray:
    # y[t] = sum_j taps[j] * a[(t - j*dilation) mod k], vectorized over rows
    out = np.zeros_like(a)
    for j, t in enumerate(taps):
        out += t * np.roll(a, j * dilation, axis=-1)
    return out


def decompose(x, level: int, filters: WaveletFilters | None = None) -> BranchSet:
    """Decompose a 1-D sequence into ``level`` detail branches plus one
    approximation branch, every branch the same length as the input.

    Level 0 returns the input itself as the only branch.
    """
    seq = check_array(x, name="x", ndim=1)
    check_finite(seq, name="x")
    if level < 0:
        raise ConfigurationError(f"level must be >= 0, got {level}")
    if level == 0:
        return BranchSet(level=0, branches=[seq.copy()])
    if filters is None:
        filters = filter_bank("DB4")
    approx = seq
    details = []
    for i in range(1, level + 1):
        dilation = 2 ** (i - 1)
        details.append(_circular_filter(approx, filters.highpass, dilation))
        approx = _circular_filter(approx, filters.lowpass, dilation)
    return BranchSet(level=level, branches=details + [approx])


def decompose_matrix(X, level: int, filters: WaveletFilters | None = None) -> np.ndarray:
    """Row-wise decomposition of a (n_samples, k) matrix.

    Returns an array of shape (n_samples, level + 1, k) with the same branch
    ordering as :func:`decompose`.
    """
    mat = check_array(X, name="X", ndim=2)
    check_finite(mat, name="X")
    if level < 0:
        raise ConfigurationError(f"level must be >= 0, got {level}")
    if level == 0:
        return mat[:, None, :].copy()
    if filters is None:
        filters = filter_bank("DB4")
    approx = mat
    branches = []
    for i in range(1, level + 1):
        dilation = 2 ** (i - 1)
        branches.append(_circular_filter(approx, filters.highpass, dilation))
        approx = _circular_filter(approx, filters.lowpass, dilation)
    branches.append(approx)
    return np.stack(branches, axis=1)


def write_branch_csv(X, level, path, wavelet="DB4", header_comment=None):
    """Debug dump: one row per sample, branches concatenated in order with
    ``b<i>_x<j>`` column names."""
    import csv

    cube = decompose_matrix(X, level, filter_bank(wavelet))
    n, m, k = cube.shape
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow([f"b{i}_x{j}" for i in range(m) for j in range(k)])
        for row in cube.reshape(n, m * k):
            writer.writerow([repr(float(v)) for v in row])
    return path


class WaveletBranches(BaseEstimator, TransformerMixin):
    """Stateless transformer exposing the decomposition to pipelines.

    ``transform`` maps (n_samples, k) to (n_samples, (level+1) * k) with the
    branches concatenated in order, so the output stays 2-D for downstream
    estimators.
    """

    def __init__(self, level=3, wavelet="DB4"):
        self.level = level
        self.wavelet = wavelet

    def fit(self, X, y=None):
        filter_bank(self.wavelet)  # fail fast on bad names
        return self

    def transform(self, X):
        cube = decompose_matrix(X, self.level, filter_bank(self.wavelet))
        n = cube.shape[0]
        return cube.reshape(n, -1)
