"""Confusion matrices, binary collapse, and the derived detection metrics.

Binary collapse treats every non-normal class as the positive (abnormal)
side.  Two conventions are reported: the default counts an abnormal sample
predicted as any abnormal class as a true positive; the strict variant
additionally requires the exact class to match.  Ratios with a zero
denominator surface as None and are rendered as ``undefined`` in reports,
never as a silent zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError
from .validation import check_consistent_length

UNDEFINED = "undefined"


@dataclass
class ConfusionMatrix:
    classes: list
    counts: np.ndarray  # counts[true][predicted]

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        c = len(self.classes)
        if self.counts.shape != (c, c):
            raise DataValidationError(
                f"counts must be {c}x{c}, got {self.counts.shape}"
            )
        if np.any(self.counts < 0):
            raise DataValidationError("confusion counts must be non-negative")

    @property
    def total(self):
        return int(self.counts.sum())

    def index_of(self, cls):
        try:
            return self.classes.index(cls)
        except ValueError:
            raise DataValidationError(f"class {cls!r} not in matrix") from None

    def permuted(self, new_order):
        idx = [self.index_of(c) for c in new_order]
        return ConfusionMatrix(
            classes=list(new_order), counts=self.counts[np.ix_(idx, idx)]
        )


def confusion(labels, predictions, class_order) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a matrix following class_order."""
    check_consistent_length(labels, predictions)
    index = {cls: i for i, cls in enumerate(class_order)}
    counts = np.zeros((len(class_order), len(class_order)), dtype=np.int64)
    for true, pred in zip(labels, predictions):
        if true not in index:
            raise DataValidationError(f"unknown true class {true!r}")
        if pred not in index:
            raise DataValidationError(f"unknown predicted class {pred!r}")
        counts[index[true], index[pred]] += 1
    return ConfusionMatrix(classes=list(class_order), counts=counts)


def _ratio(num, den):
    return num / den if den > 0 else None


@dataclass
class BinaryMetrics:
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    fpr: float | None
    tp: int
    tn: int
    fp: int
    fn: int

    def as_dict(self):
        def fmt(v):
            return UNDEFINED if v is None else v

        return {
            "accuracy": fmt(self.accuracy),
            "precision": fmt(self.precision),
            "recall": fmt(self.recall),
            "f1": fmt(self.f1),
            "fpr": fmt(self.fpr),
            "tp": self.tp,
            "tn": self.tn,
            "fp": self.fp,
            "fn": self.fn,
        }


def binary_metrics(cm: ConfusionMatrix, normal_class, convention="collapse") -> BinaryMetrics:
    """Collapse to abnormal-vs-normal and compute the five detection ratios.

    convention="collapse": abnormal predicted as any abnormal class is a TP.
    convention="strict": abnormal must be predicted as its exact class.
    """
    n = cm.index_of(normal_class)
    counts = cm.counts
    abn = [i for i in range(len(cm.classes)) if i != n]
    tn = int(counts[n, n])
    fp = int(counts[n, abn].sum())
    fn = int(counts[np.ix_(abn, [n])].sum())
    if convention == "collapse":
        tp = int(counts[np.ix_(abn, abn)].sum())
    elif convention == "strict":
        tp = int(sum(counts[i, i] for i in abn))
        fn = int(sum(counts[i].sum() - counts[i, i] for i in abn))
    else:
        raise DataValidationError(f"unknown binary convention {convention!r}")
    total = tp + tn + fp + fn
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return BinaryMetrics(
        accuracy=_ratio(tp + tn, total),
        precision=precision,
        recall=recall,
        f1=f1,
        fpr=_ratio(fp, fp + tn),
        tp=tp,
        tn=tn,
        fp=fp,
        fn=fn,
    )


def multiclass_accuracy(cm: ConfusionMatrix):
    return _ratio(int(np.trace(cm.counts)), cm.total)


def per_class_recall(cm: ConfusionMatrix):
    """Diagonal over row sums; an empty row yields None."""
    out = {}
    for i, cls in enumerate(cm.classes):
        row = int(cm.counts[i].sum())
        out[cls] = _ratio(int(cm.counts[i, i]), row)
    return out


def write_confusion_csv(cm: ConfusionMatrix, path, header_comment=None):
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + list(cm.classes))
        for i, cls in enumerate(cm.classes):
            writer.writerow([cls] + cm.counts[i].tolist())
    return path


def write_metrics_csv(rows, path, header_comment=None):
    """rows: iterable of (model, dataset, BinaryMetrics)."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["model", "dataset", "acc", "prec", "rec", "f1", "fpr"])
        for model, dataset, bm in rows:
            d = bm.as_dict()
            writer.writerow(
                [model, dataset, d["accuracy"], d["precision"], d["recall"], d["f1"], d["fpr"]]
            )
    return path


def write_loss_curve_csv(losses, path, val_accuracy=None, header_comment=None):
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_loss", "val_accuracy"])
        for epoch, loss in enumerate(losses, start=1):
            acc = "" if val_accuracy is None else val_accuracy[epoch - 1]
            writer.writerow([epoch, repr(float(loss)), acc])
    return path
