"""Stratified k-fold assignment with a seeded per-class shuffle."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Sequence

from ..errors import ClassTooSmall


@dataclass
class FoldAssignment:
    k: int
    folds: List[List[int]]  # index lists into the evaluated sample order

    def train_test(self, fold: int):
        test = self.folds[fold]
        train = [i for f, idxs in enumerate(self.folds) if f != fold for i in idxs]
        return train, test


def stratified_kfold(labels: Sequence[str], k: int = 5, seed: int = 0) -> FoldAssignment:
    """Round-robin fold assignment after a seeded shuffle within each class.

    Per-class fold counts differ by at most one; folds partition the input.
    """
    by_class: Dict[str, List[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    for cls, members in by_class.items():
        if len(members) < k:
            raise ClassTooSmall(f"class {cls!r} has {len(members)} < k={k} members")
    rng = random.Random(seed)
    folds: List[List[int]] = [[] for _ in range(k)]
    for cls in sorted(by_class):
        members = list(by_class[cls])
        rng.shuffle(members)
        for j, idx in enumerate(members):
            folds[j % k].append(idx)
    for f in folds:
        f.sort()
    return FoldAssignment(k=k, folds=folds)
