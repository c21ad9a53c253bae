"""Three-class confusion matrix and accuracy / precision / recall / F1.

Multi-class precision, recall and F1 are macro averages: the unweighted
mean over classes whose value is defined.  A per-class value with a zero
denominator is reported as ``None`` and left out of the mean.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

CLASS_NAMES = ("AD", "MCI", "HC")


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows: true class, columns: predicted class

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"confusion matrix must be square, got {c.shape}")
        if np.any(c < 0):
            raise ValueError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def to_list(self) -> list[list[int]]:
        return self.counts.tolist()


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: tuple[Optional[float], ...]
    recall: tuple[Optional[float], ...]
    f1: tuple[Optional[float], ...]
    macro_precision: Optional[float]
    macro_recall: Optional[float]
    macro_f1: Optional[float]

    CSV_FIELDS = ("accuracy", "macro_recall", "macro_precision", "macro_f1")

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in self.CSV_FIELDS}


def confusion(predictions: Sequence[int], labels: Sequence[int], num_classes: int = 3) -> ConfusionMatrix:
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(labels, dtype=np.int64)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ValueError(f"predictions {pred.shape} and labels {true.shape} must be equal-length vectors")
    if pred.size == 0:
        raise ValueError("need at least one sample")
    for name, arr in (("prediction", pred), ("label", true)):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise ValueError(f"{name} out of range [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (true, pred), 1)
    return ConfusionMatrix(counts)


def _ratio(num, den) -> Optional[float]:
    return float(num) / float(den) if den > 0 else None


def _mean(values) -> Optional[float]:
    defined = [v for v in values if v is not None]
    return float(np.mean(defined)) if defined else None


def report(cm: ConfusionMatrix) -> MetricsReport:
    c = cm.counts
    total = c.sum()
    if total < 1:
        raise ValueError("cannot report on an empty confusion matrix")
    diag = np.diag(c)
    precision = tuple(_ratio(diag[k], c[:, k].sum()) for k in range(cm.num_classes))
    recall = tuple(_ratio(diag[k], c[k, :].sum()) for k in range(cm.num_classes))
    f1 = []
    for p, r in zip(precision, recall):
        if p is None or r is None:
            f1.append(None)
        else:
            f1.append(2.0 * p * r / (p + r) if p + r > 0 else 0.0)
    return MetricsReport(float(diag.sum() / total), precision, recall, tuple(f1),
                         _mean(precision), _mean(recall), _mean(f1))


def render_confusion(cm: ConfusionMatrix, names: Sequence[str] = CLASS_NAMES) -> str:
    """Text grid, true classes down the side and predictions across the top."""
    width = max(5, max(len(n) for n in names), len(str(cm.counts.max())))
    head = "true\\pred".ljust(10) + "".join(n.rjust(width + 1) for n in names)
    lines = [head]
    for name, row in zip(names, cm.counts):
        lines.append(name.ljust(10) + "".join(str(v).rjust(width + 1) for v in row))
    return "\n".join(lines) + "\n"


def confusion_csv(cm: ConfusionMatrix, names: Sequence[str] = CLASS_NAMES) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["true\\pred", *names])
    for name, row in zip(names, cm.counts):
        w.writerow([name, *row.tolist()])
    return buf.getvalue()


def parse_confusion_csv(text: str) -> ConfusionMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    return ConfusionMatrix(np.array([[int(v) for v in r[1:]] for r in rows[1:]]))


def report_csv_row(rep: MetricsReport, label: str) -> list:
    return [label, *(repr(v) if v is not None else "" for v in (rep.accuracy, rep.macro_recall,
                                                                 rep.macro_precision, rep.macro_f1))]
