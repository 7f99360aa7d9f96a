"""Dataset ingestion, cleaning, min-max scaling, and split utilities.

The min-max scaler maps each column to [0, 1] using extremes captured from
training rows only; test rows reuse those stats and are clipped.  The
stratified split draws round(fraction * count) training rows per class and
k-fold partitioning produces folds whose sizes differ by at most one.
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import ConfigurationError, DataValidationError
from .flows import FEATURE_NAMES
from .validation import check_array

_MISSING_TOKENS = {"", "nan", "na", "inf", "-inf", "infinity", "-infinity"}


def _canon(name: str) -> str:
    return re.sub(r"\s+", " ", name.strip()).lower()


# Common shorthand spellings seen in CIC-style exports, mapped onto the
# canonical 48 names.  Matching is case-insensitive and whitespace-trimmed.
_ALIASES = {
    "flow duration": "flow duration",
    "tot fwd pkts": "total fwd packet",
    "total fwd packets": "total fwd packet",
    "tot bwd pkts": "total bwd packets",
    "total backward packets": "total bwd packets",
    "totlen fwd pkts": "total length of fwd packet",
    "total length of fwd packets": "total length of fwd packet",
    "totlen bwd pkts": "total length of bwd packet",
    "total length of bwd packets": "total length of bwd packet",
    "fwd pkt len min": "fwd packet length min",
    "fwd pkt len max": "fwd packet length max",
    "fwd pkt len mean": "fwd packet length mean",
    "fwd pkt len std": "fwd packet length std",
    "bwd pkt len min": "bwd packet length min",
    "bwd pkt len max": "bwd packet length max",
    "bwd pkt len mean": "bwd packet length mean",
    "bwd pkt len std": "bwd packet length std",
    "flow byts/s": "flow bytes/s",
    "flow pkts/s": "flow packets/s",
    "fwd iat tot": "fwd iat total",
    "bwd iat tot": "bwd iat total",
    "fwd header len": "fwd header length",
    "bwd header len": "bwd header length",
    "fwd pkts/s": "fwd packets/s",
    "bwd pkts/s": "bwd packets/s",
    "pkt len min": "packet length min",
    "pkt len max": "packet length max",
    "pkt len mean": "packet length mean",
    "pkt len std": "packet length std",
    "pkt len var": "packet length variance",
    "pkt size avg": "average packet size",
    "min packet length": "packet length min",
    "max packet length": "packet length max",
}


def _resolve_column(name: str) -> str:
    canon = _canon(name)
    return _ALIASES.get(canon, canon)


@dataclass
class Dataset:
    """A rectangular numeric table with optional labels and provenance.

    Missing values are NaN in ``X``.
    """

    X: np.ndarray
    feature_names: list
    labels: np.ndarray | None = None
    provenance: list | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise DataValidationError(f"dataset matrix must be 2-D, got {self.X.shape}")
        if len(self.feature_names) != self.X.shape[1]:
            raise DataValidationError("feature name count does not match column count")
        if self.labels is not None and len(self.labels) != len(self.X):
            raise DataValidationError("label count does not match row count")

    def __len__(self):
        return len(self.X)

    @property
    def n_features(self):
        return self.X.shape[1]

    def class_counts(self):
        if self.labels is None:
            return {}
        values, counts = np.unique(self.labels, return_counts=True)
        return dict(zip(values.tolist(), counts.tolist()))

    def missing_counts(self):
        return dict(
            zip(self.feature_names, np.isnan(self.X).sum(axis=0).astype(int).tolist())
        )

    def take(self, indices):
        return Dataset(
            X=self.X[indices],
            feature_names=list(self.feature_names),
            labels=None if self.labels is None else self.labels[indices],
            provenance=None
            if self.provenance is None
            else [self.provenance[i] for i in indices],
        )


def _parse_cell(token: str) -> float:
    token = token.strip()
    if token.lower() in _MISSING_TOKENS:
        return np.nan
    try:
        return float(token)
    except ValueError:
        return np.nan


def load_feature_csv(path, feature_names=FEATURE_NAMES, label_column="label",
                     exclude_classes=()):
    """Read a feature CSV, matching columns by name (case-insensitive,
    whitespace-trimmed, common shorthand accepted).  Extra columns are
    ignored; a missing feature column is an error.
    """
    wanted = {_canon(n): i for i, n in enumerate(feature_names)}
    with open(path, newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        reader = csv.reader(rows)
        header = next(reader, None)
        if header is None:
            raise DataValidationError(f"{path}: empty file")
        col_map = {}
        label_idx = None
        prov_idx = None
        for idx, raw in enumerate(header):
            resolved = _resolve_column(raw)
            if resolved in wanted:
                col_map.setdefault(wanted[resolved], idx)
            elif resolved == _canon(label_column):
                label_idx = idx
            elif resolved == "provenance":
                prov_idx = idx
        missing = [feature_names[i] for i in range(len(feature_names)) if i not in col_map]
        if missing:
            raise DataValidationError(
                f"{path}: missing feature columns: {', '.join(missing[:5])}"
                + ("..." if len(missing) > 5 else "")
            )
        data = []
        labels = []
        provenance = []
        for row in reader:
            if not row or len(row) < len(header):
                continue
            data.append([_parse_cell(row[col_map[i]]) for i in range(len(feature_names))])
            labels.append(row[label_idx].strip() if label_idx is not None else "")
            provenance.append(row[prov_idx].strip() if prov_idx is not None else "")
    X = np.array(data, dtype=np.float64).reshape(len(data), len(feature_names))
    label_arr = np.array(labels, dtype=object) if label_idx is not None else None
    prov_list = provenance if prov_idx is not None else None
    ds = Dataset(X=X, feature_names=list(feature_names), labels=label_arr,
                 provenance=prov_list)
    if exclude_classes and ds.labels is not None:
        keep = ~np.isin(ds.labels, list(exclude_classes))
        ds = ds.take(np.flatnonzero(keep))
    return ds


@dataclass
class CleanReport:
    dropped_columns: list = field(default_factory=list)
    imputed: dict = field(default_factory=dict)
    column_means: dict = field(default_factory=dict)


def clean(ds: Dataset, importance=None, defect_threshold=0.8):
    """Drop badly defective unimportant columns, mean-impute the rest.

    ``importance`` maps column name -> bool; unlisted columns default to
    important.  A column that is both above the defect threshold and
    important is a hard error since a mean over so few values is
    meaningless.
    """
    importance = importance or {}
    n = len(ds)
    if n == 0:
        raise DataValidationError("cannot clean an empty dataset")
    keep = []
    report = CleanReport()
    for j, name in enumerate(ds.feature_names):
        col = ds.X[:, j]
        defect_rate = float(np.isnan(col).mean())
        important = importance.get(name, True)
        if defect_rate > defect_threshold:
            if important:
                raise DataValidationError(
                    f"column {name!r} is {defect_rate:.0%} defective but marked "
                    "important; refusing to mean-impute it"
                )
            report.dropped_columns.append(name)
            continue
        keep.append(j)
    X = ds.X[:, keep].copy()
    names = [ds.feature_names[j] for j in keep]
    for j, name in enumerate(names):
        col = X[:, j]
        mask = np.isnan(col)
        if mask.any():
            mean = float(col[~mask].mean())
            col[mask] = mean
            report.imputed[name] = int(mask.sum())
            report.column_means[name] = mean
    cleaned = Dataset(X=X, feature_names=names, labels=ds.labels,
                      provenance=ds.provenance)
    return cleaned, report


@dataclass
class NormalizationStats:
    """Per-column extremes captured before scaling."""

    feature_names: list
    x_min: np.ndarray
    x_max: np.ndarray

    def __post_init__(self):
        if np.any(self.x_min > self.x_max):
            raise DataValidationError("normalization stats with min > max")

    def apply(self, X, clip=True):
        span = self.x_max - self.x_min
        safe = np.where(span == 0, 1.0, span)
        out = (X - self.x_min) / safe
        out[:, span == 0] = 0.0
        if clip:
            out = np.clip(out, 0.0, 1.0)
        return out


class MinMaxNormalizer(BaseEstimator, TransformerMixin):
    """Column-wise [0, 1] scaler; constant columns map to 0."""

    def __init__(self, clip=True):
        self.clip = clip

    def fit(self, X, y=None):
        X = check_array(X, ndim=2)
        if np.isnan(X).any():
            raise DataValidationError("fit requires a cleaned (no-missing) matrix")
        self.x_min_ = X.min(axis=0)
        self.x_max_ = X.max(axis=0)
        return self

    def transform(self, X):
        if not hasattr(self, "x_min_"):
            raise NotFittedError("MinMaxNormalizer is not fitted")
        X = check_array(X, ndim=2)
        stats = NormalizationStats(
            feature_names=[], x_min=self.x_min_, x_max=self.x_max_
        )
        return stats.apply(X, clip=self.clip)


def normalize(ds: Dataset):
    """Scale a cleaned dataset to [0, 1], returning the new dataset and the
    captured per-column extremes for reuse on held-out rows."""
    scaler = MinMaxNormalizer().fit(ds.X)
    stats = NormalizationStats(
        feature_names=list(ds.feature_names),
        x_min=scaler.x_min_.copy(),
        x_max=scaler.x_max_.copy(),
    )
    out = Dataset(
        X=scaler.transform(ds.X),
        feature_names=list(ds.feature_names),
        labels=ds.labels,
        provenance=ds.provenance,
    )
    return out, stats


def apply_normalization(ds: Dataset, stats: NormalizationStats):
    return Dataset(
        X=stats.apply(ds.X),
        feature_names=list(ds.feature_names),
        labels=ds.labels,
        provenance=ds.provenance,
    )


def split(ds: Dataset, train_fraction=0.7, seed=0):
    """Stratified train/test split: round(fraction * count) per class."""
    if ds.labels is None:
        raise DataValidationError("split requires labeled data")
    rng = np.random.default_rng(seed)
    train_idx = []
    test_idx = []
    for cls in sorted(set(ds.labels.tolist())):
        idx = np.flatnonzero(ds.labels == cls)
        if len(idx) < 2:
            warnings.warn(
                f"class {cls!r} has {len(idx)} sample(s); keeping it whole in train",
                stacklevel=2,
            )
            train_idx.extend(idx.tolist())
            continue
        perm = rng.permutation(idx)
        n_train = int(np.floor(train_fraction * len(idx) + 0.5))
        train_idx.extend(perm[:n_train].tolist())
        test_idx.extend(perm[n_train:].tolist())
    return ds.take(np.array(sorted(train_idx), dtype=int)), ds.take(
        np.array(sorted(test_idx), dtype=int)
    )


def kfold(data, k=10, seed=0):
    """Disjoint shuffled folds of row indices; sizes differ by <= 1.

    ``data`` is a Dataset (or anything with a length) or a plain row count.
    """
    n_rows = data if isinstance(data, int) else len(data)
    if k < 2:
        raise ConfigurationError(f"k must be >= 2, got {k}")
    if n_rows == 0:
        raise ConfigurationError("cannot fold an empty dataset")
    if k > n_rows:
        raise ConfigurationError(f"k={k} exceeds row count {n_rows}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_rows)
    base = n_rows // k
    extra = n_rows % k
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(np.sort(perm[start : start + size]))
        start += size
    return folds


def labels_to_onehot(labels, class_order):
    """Map string labels onto one-hot rows following ``class_order``."""
    index = {cls: i for i, cls in enumerate(class_order)}
    out = np.zeros((len(labels), len(class_order)))
    for row, lab in enumerate(labels):
        if lab not in index:
            raise DataValidationError(f"unknown class label {lab!r}")
        out[row, index[lab]] = 1.0
    return out


def write_stats_sidecar(stats: NormalizationStats, path, header_comment=None):
    with open(path, "w") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("column,x_min,x_max\n")
        for name, lo, hi in zip(stats.feature_names, stats.x_min, stats.x_max):
            fh.write(f"{name},{float(lo)!r},{float(hi)!r}\n")
    return path


def read_stats_sidecar(path):
    names = []
    lows = []
    highs = []
    with open(path) as fh:
        header = fh.readline()
        if header.startswith("#"):
            header = fh.readline()
        if not header.startswith("column,"):
            raise DataValidationError(f"{path}: not a normalization sidecar")
        for line in fh:
            name, lo, hi = line.rstrip("\n").rsplit(",", 2)
            names.append(name)
            lows.append(float(lo))
            highs.append(float(hi))
    return NormalizationStats(
        feature_names=names, x_min=np.array(lows), x_max=np.array(highs)
    )
