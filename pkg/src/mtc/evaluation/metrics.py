"""Confusion matrices and accuracy / precision / recall / F1.

Metrics are computed from integer confusion counts through exact
rational arithmetic before the final float conversion, so the usual
identities (micro-recall = accuracy, F1 as the harmonic mean) hold
bit-for-bit against any independent tally of the same counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence

import numpy as np

from ..errors import LengthMismatch, UnknownLabel


@dataclass
class ConfusionMatrix:
    classes: List[str]
    counts: np.ndarray  # (C, C) int64; rows = true class, cols = predicted

    @classmethod
    def from_labels(
        cls, y_true: Sequence[str], y_pred: Sequence[str], classes: Sequence[str]
    ) -> "ConfusionMatrix":
        if len(y_true) != len(y_pred):
            raise LengthMismatch(f"{len(y_true)} true vs {len(y_pred)} predicted")
        index = {c: i for i, c in enumerate(classes)}
        counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
        for t, p in zip(y_true, y_pred):
            if t not in index:
                raise UnknownLabel(f"true label {t!r} not in class list")
            if p not in index:
                raise UnknownLabel(f"predicted label {p!r} not in class list")
            counts[index[t], index[p]] += 1
        return cls(list(classes), counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def to_lists(self) -> List[List[int]]:
        return self.counts.tolist()


@dataclass
class MetricsReport:
    accuracy: float
    per_class: Dict[str, Dict[str, float]]  # cls -> {precision, recall, f1}
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: ConfusionMatrix
    fold: int = -1
    seed: int = 0
    fingerprint: str = ""

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class": self.per_class,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "classes": self.confusion.classes,
            "confusion": self.confusion.to_lists(),
            "fold": self.fold,
            "seed": self.seed,
            "fingerprint": self.fingerprint,
        }


def _safe_div(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


def metrics_from_confusion(cm: ConfusionMatrix, fold: int = -1, seed: int = 0,
                           fingerprint: str = "") -> MetricsReport:
    counts = cm.counts
    total = cm.total
    accuracy = _safe_div(int(np.trace(counts)), total)
    per_class: Dict[str, Dict[str, float]] = {}
    precs: List[Fraction] = []
    recs: List[Fraction] = []
    f1s: List[Fraction] = []
    for i, name in enumerate(cm.classes):
        tp = int(counts[i, i])
        fp = int(counts[:, i].sum()) - tp
        fn = int(counts[i, :].sum()) - tp
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        if precision + recall == 0:
            f1 = Fraction(0)
        else:
            f1 = 2 * precision * recall / (precision + recall)
        per_class[name] = {
            "precision": float(precision),
            "recall": float(recall),
            "f1": float(f1),
        }
        precs.append(precision)
        recs.append(recall)
        f1s.append(f1)
    c = len(cm.classes)
    return MetricsReport(
        accuracy=float(accuracy),
        per_class=per_class,
        macro_precision=float(sum(precs) / c),
        macro_recall=float(sum(recs) / c),
        macro_f1=float(sum(f1s) / c),
        confusion=cm,
        fold=fold,
        seed=seed,
        fingerprint=fingerprint,
    )


def compute_metrics(
    y_true: Sequence[str],
    y_pred: Sequence[str],
    classes: Sequence[str],
    fold: int = -1,
    seed: int = 0,
    fingerprint: str = "",
) -> MetricsReport:
    cm = ConfusionMatrix.from_labels(y_true, y_pred, classes)
    return metrics_from_confusion(cm, fold=fold, seed=seed, fingerprint=fingerprint)
