"""Confusion-matrix accumulator and the metrics derived from it."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .palette import NUM_CLASSES


class ConfusionMatrix:
    """counts[g][p] = number of pixels with ground truth g predicted p."""

    def __init__(self, num_classes: int = NUM_CLASSES):
        self.num_classes = num_classes
        self.counts = np.zeros((num_classes, num_classes), dtype=np.int64)

    def update(self, predictions, targets):
        """Accumulate one batch of (B, H, W) or flat prediction/target grids."""
        preds = np.asarray(predictions).ravel()
        gts = np.asarray(targets).ravel()
        if preds.shape != gts.shape:
            raise ValueError(f"prediction shape {preds.shape} does not match "
                             f"target shape {gts.shape}")
        n = self.num_classes
        for name, arr in (("predictions", preds), ("targets", gts)):
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise ValueError(f"{name} contain class ids outside [0, {n})")
        joint = np.bincount(gts * n + preds, minlength=n * n)
        self.counts += joint.reshape(n, n)
        return self

    def merge(self, other: "ConfusionMatrix"):
        """Elementwise addition, for combining parallel evaluation shards."""
        if other.num_classes != self.num_classes:
            raise ValueError("cannot merge confusion matrices of different sizes")
        self.counts += other.counts
        return self

    def reset(self):
        self.counts[:] = 0
        return self


def update_confusion(cm: ConfusionMatrix, predictions, targets) -> ConfusionMatrix:
    return cm.update(predictions, targets)


def pixel_accuracy(cm: ConfusionMatrix) -> float:
    total = cm.counts.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    return float(np.trace(cm.counts) / total)


def iou_per_class(cm: ConfusionMatrix) -> np.ndarray:
    """TP / (TP + FP + FN) per class; NaN where the class never occurs.

    TP_c = counts[c][c], FP_c = column sum - TP, FN_c = row sum - TP.
    """
    tp = np.diag(cm.counts).astype(np.float64)
    denom = cm.counts.sum(axis=1) + cm.counts.sum(axis=0) - np.diag(cm.counts)
    out = np.full(cm.num_classes, np.nan)
    defined = denom > 0
    out[defined] = tp[defined] / denom[defined]
    return out


def mean_iou(cm: ConfusionMatrix) -> float:
    """Arithmetic mean of IoU over classes present in prediction or target.

    Classes absent from both sides are excluded rather than counted as 0.
    """
    ious = iou_per_class(cm)
    defined = ~np.isnan(ious)
    if not defined.any():
        raise ValueError("no class is present in either predictions or targets")
    return float(ious[defined].mean())


@dataclass
class MetricReport:
    """One evaluation pass: loss plus confusion-derived metrics."""

    loss: float
    pixel_accuracy: float
    mean_iou: float
    iou_per_class: Optional[np.ndarray] = field(default=None, compare=False)

    @classmethod
    def from_confusion(cls, cm: ConfusionMatrix, loss: float) -> "MetricReport":
        return cls(loss=float(loss),
                   pixel_accuracy=pixel_accuracy(cm),
                   mean_iou=mean_iou(cm),
                   iou_per_class=iou_per_class(cm))
