"""CART-style decision tree with Gini impurity and explicit tie-breaks.

Splits use the rule "go left iff x[feature] <= threshold". Candidate
thresholds are midpoints of consecutive distinct sorted feature values;
among equal-gain splits the lowest feature index, then lowest threshold,
wins. An impure node is split even when the best candidate has zero
immediate gain (e.g. XOR-shaped data), as long as the split actually
separates samples; this keeps training accuracy at 100% on consistent data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DimensionMismatch, EmptyTrainingSet


@dataclass(frozen=True)
class Leaf:
    probs: Tuple[float, ...]


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


def _gini(counts: np.ndarray, n: int) -> float:
    return 1.0 - float(np.sum((counts / n) ** 2))


def _best_exact_split(X, y, n_classes, features):
    """Best (gain, feature, threshold) over midpoint candidates, or None."""
    n = len(y)
    parent = np.bincount(y, minlength=n_classes)
    g_parent = _gini(parent, n)
    best = None  # (gain, feature, threshold)
    for f in features:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        ys = y[order]
        cut = np.nonzero(xs[:-1] < xs[1:])[0]
        if len(cut) == 0:
            continue
        onehot = np.zeros((n, n_classes), dtype=np.float64)
        onehot[np.arange(n), ys] = 1.0
        cum = np.cumsum(onehot, axis=0)
        left_counts = cum[cut]
        left_n = (cut + 1).astype(np.float64)
        right_counts = parent - left_counts
        right_n = n - left_n
        g_left = 1.0 - np.sum((left_counts / left_n[:, None]) ** 2, axis=1)
        g_right = 1.0 - np.sum((right_counts / right_n[:, None]) ** 2, axis=1)
        gains = g_parent - (left_n * g_left + right_n * g_right) / n
        i = int(np.argmax(gains))  # first occurrence wins -> lowest threshold
        gain = float(gains[i])
        if best is None or gain > best[0]:
            thr = float((xs[cut[i]] + xs[cut[i] + 1]) / 2)
            best = (gain, int(f), thr)
    return best


def _best_random_split(X, y, n_classes, features, rng):
    """ExtraTrees variant: one uniform random threshold per feature."""
    n = len(y)
    parent = np.bincount(y, minlength=n_classes)
    g_parent = _gini(parent, n)
    best = None
    for f in features:
        col = X[:, f]
        lo, hi = float(col.min()), float(col.max())
        if lo == hi:
            continue
        thr = float(rng.uniform(lo, hi))
        mask = col <= thr
        n_left = int(mask.sum())
        if n_left == 0 or n_left == n:
            continue
        left = np.bincount(y[mask], minlength=n_classes)
        right = parent - left
        gain = g_parent - (
            n_left * _gini(left, n_left) + (n - n_left) * _gini(right, n - n_left)
        ) / n
        if best is None or gain > best[0]:
            best = (float(gain), int(f), thr)
    return best


def _leaf(y: np.ndarray, n_classes: int) -> Leaf:
    counts = np.bincount(y, minlength=n_classes)
    return Leaf(tuple((counts / len(y)).tolist()))


def _grow(X, y, n_classes, depth, max_depth, min_samples_split, feature_subsample, rng, random_thresholds):
    n, d = X.shape
    counts = np.bincount(y, minlength=n_classes)
    if (
        np.count_nonzero(counts) <= 1
        or n < min_samples_split
        or (max_depth is not None and depth >= max_depth)
    ):
        return _leaf(y, n_classes)
    if feature_subsample is not None and feature_subsample < d:
        features = np.sort(rng.choice(d, size=feature_subsample, replace=False))
    else:
        features = np.arange(d)
    if random_thresholds:
        best = _best_random_split(X, y, n_classes, features, rng)
    else:
        best = _best_exact_split(X, y, n_classes, features)
    if best is None:
        return _leaf(y, n_classes)
    _, f, thr = best
    mask = X[:, f] <= thr
    left = _grow(
        X[mask], y[mask], n_classes, depth + 1, max_depth, min_samples_split,
        feature_subsample, rng, random_thresholds,
    )
    right = _grow(
        X[~mask], y[~mask], n_classes, depth + 1, max_depth, min_samples_split,
        feature_subsample, rng, random_thresholds,
    )
    return Split(f, thr, left, right)


def fit_tree(
    X: np.ndarray,
    y: Sequence[int],
    n_classes: Optional[int] = None,
    max_depth: Optional[int] = None,
    min_samples_split: int = 2,
    feature_subsample: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    random_thresholds: bool = False,
) -> TreeNode:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise DimensionMismatch("X must be 2-D (samples x features)")
    if len(X) == 0:
        raise EmptyTrainingSet("no training samples")
    if len(X) != len(y):
        raise EmptyTrainingSet("X and y length mismatch")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if rng is None:
        rng = np.random.default_rng(0)
    return _grow(
        X, y, n_classes, 0, max_depth, min_samples_split, feature_subsample, rng,
        random_thresholds,
    )


def predict_tree(model: TreeNode, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    node = model
    while isinstance(node, Split):
        if node.feature >= len(x):
            raise DimensionMismatch(
                f"query has {len(x)} features, tree uses index {node.feature}"
            )
        node = node.left if x[node.feature] <= node.threshold else node.right
    return np.asarray(node.probs, dtype=np.float64)


def predict_tree_batch(model: TreeNode, X: np.ndarray) -> np.ndarray:
    """Probability rows for every sample; iterative mask descent."""
    X = np.asarray(X, dtype=np.float64)
    if isinstance(model, Leaf):
        return np.tile(np.asarray(model.probs), (len(X), 1))
    n_classes = _tree_width(model)
    out = np.empty((len(X), n_classes), dtype=np.float64)
    stack = [(model, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        if len(idx) == 0:
            continue
        if isinstance(node, Leaf):
            out[idx] = np.asarray(node.probs)
            continue
        if node.feature >= X.shape[1]:
            raise DimensionMismatch(
                f"query has {X.shape[1]} features, tree uses index {node.feature}"
            )
        mask = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return out


def _tree_width(node: TreeNode) -> int:
    while isinstance(node, Split):
        node = node.left
    return len(node.probs)


def hard_label(probs: np.ndarray) -> int:
    """Argmax with lowest-class-index tie-break."""
    return int(np.argmax(probs))
