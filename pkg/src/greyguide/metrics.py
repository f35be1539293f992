"""Precision/recall/F1 from a confusion matrix, macro and weighted."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Metrics:
    num_classes: int
    precision: list[float]
    recall: list[float]
    f1: list[float]
    support: list[int]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    confusion: list[list[int]]  # rows = true class, cols = predicted class
    zero_support_classes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "per_class": [
                {"class": c + 1, "precision": self.precision[c], "recall": self.recall[c],
                 "f1": self.f1[c], "support": self.support[c]}
                for c in range(self.num_classes)
            ],
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall,
                      "f1": self.macro_f1},
            "weighted": {"precision": self.weighted_precision, "recall": self.weighted_recall,
                         "f1": self.weighted_f1},
            "confusion": self.confusion,
            "zero_support_classes": self.zero_support_classes,
        }


def compute_metrics(predictions, labels, num_classes: int) -> Metrics:
    """Per-class and aggregate P/R/F1 for 1-based class labels.

    Zero-support classes contribute 0 to the macro averages and are listed in
    zero_support_classes. F1 is 0 whenever P + R is 0.
    """
    predictions = list(predictions)
    labels = list(labels)
    if len(predictions) != len(labels):
        raise ValueError(f"{len(predictions)} predictions vs {len(labels)} labels")
    k = num_classes
    for name, seq in (("label", labels), ("prediction", predictions)):
        for value in seq:
            if not 1 <= value <= k:
                raise ValueError(f"{name} {value} outside 1..{k}")
    confusion = np.zeros((k, k), dtype=np.int64)
    for pred, true in zip(predictions, labels):
        confusion[true - 1, pred - 1] += 1
    support = confusion.sum(axis=1)
    predicted = confusion.sum(axis=0)
    tp = np.diagonal(confusion)
    precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 0.0)
    recall = np.where(support > 0, tp / np.maximum(support, 1), 0.0)
    pr = precision + recall
    f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)
    total = max(1, int(support.sum()))
    weights = support / total
    return Metrics(
        num_classes=k,
        precision=precision.tolist(),
        recall=recall.tolist(),
        f1=f1.tolist(),
        support=support.tolist(),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float((precision * weights).sum()),
        weighted_recall=float((recall * weights).sum()),
        weighted_f1=float((f1 * weights).sum()),
        confusion=confusion.tolist(),
        zero_support_classes=[c + 1 for c in range(k) if support[c] == 0],
    )
