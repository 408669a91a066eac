"""K-nearest-neighbour classifier (Euclidean, brute force)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DimensionMismatch, EmptyTrainingSet


@dataclass
class KnnModel:
    X: np.ndarray  # (n, d) float64
    y: np.ndarray  # (n,) int64
    k: int
    n_classes: int


def fit_knn(
    X: np.ndarray, y: Sequence[int], k: int = 3, n_classes: int | None = None
) -> KnnModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise EmptyTrainingSet("no training samples")
    if not 1 <= k <= len(X):
        raise ValueError(f"k={k} out of range for {len(X)} training points")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    return KnnModel(X=X, y=y, k=k, n_classes=n_classes)


def knn_predict_batch(model: KnnModel, X: np.ndarray) -> np.ndarray:
    """Label frequencies among the k nearest training points per query.

    Equal distances are resolved in favour of the lower training index.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.X.shape[1]:
        raise DimensionMismatch(
            f"query dim {X.shape[1]} != training dim {model.X.shape[1]}"
        )
    out = np.empty((len(X), model.n_classes), dtype=np.float64)
    for i, x in enumerate(X):
        d2 = np.sum((model.X - x) ** 2, axis=1)
        order = np.argsort(d2, kind="stable")[: model.k]
        counts = np.bincount(model.y[order], minlength=model.n_classes)
        out[i] = counts / model.k
    return out


def knn_predict(model: KnnModel, x: np.ndarray) -> np.ndarray:
    return knn_predict_batch(model, np.asarray(x).reshape(1, -1))[0]
