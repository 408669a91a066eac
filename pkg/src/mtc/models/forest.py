"""Random forest and extra-trees ensembles over the CART tree."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..errors import EmptyTrainingSet
from .tree import TreeNode, fit_tree, predict_tree_batch

MODE_RF = "rf"
MODE_EXTRA = "extra"


@dataclass
class ForestModel:
    trees: List[TreeNode]
    n_classes: int
    mode: str = MODE_RF
    feature_subsample: Optional[int] = None
    seed: int = 0

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    # independent, reproducible per-tree stream
    return np.random.default_rng(np.random.SeedSequence([seed, tree_index]))


def fit_forest(
    X: np.ndarray,
    y: Sequence[int],
    n_trees: int = 100,
    feature_subsample: Optional[int] = None,
    bootstrap: bool = True,
    mode: str = MODE_RF,
    seed: int = 0,
    max_depth: Optional[int] = None,
    n_classes: Optional[int] = None,
) -> ForestModel:
    """Fit a seeded ensemble.

    RF mode: per-tree bootstrap sample (when ``bootstrap``) and the best
    exact split among ``feature_subsample`` random features per node.
    Extra mode: no bootstrap, one uniform random threshold per candidate
    feature.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise EmptyTrainingSet("no training samples")
    if mode not in (MODE_RF, MODE_EXTRA):
        raise ValueError(f"unknown forest mode {mode!r}")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    n, d = X.shape
    if feature_subsample is None:
        feature_subsample = math.ceil(math.sqrt(d))
    use_bootstrap = bootstrap and mode == MODE_RF
    trees: List[TreeNode] = []
    for t in range(n_trees):
        rng = _tree_rng(seed, t)
        if use_bootstrap:
            idx = rng.integers(0, n, size=n)
            Xt, yt = X[idx], y[idx]
        else:
            Xt, yt = X, y
        trees.append(
            fit_tree(
                Xt,
                yt,
                n_classes=n_classes,
                max_depth=max_depth,
                feature_subsample=feature_subsample,
                rng=rng,
                random_thresholds=(mode == MODE_EXTRA),
            )
        )
    return ForestModel(
        trees=trees,
        n_classes=n_classes,
        mode=mode,
        feature_subsample=feature_subsample,
        seed=seed,
    )


def predict_forest_batch(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Average of per-tree probability rows."""
    X = np.asarray(X, dtype=np.float64)
    acc = np.zeros((len(X), model.n_classes), dtype=np.float64)
    for tree in model.trees:
        acc += predict_tree_batch(tree, X)
    return acc / model.n_trees


def predict_forest(model: ForestModel, x: np.ndarray) -> np.ndarray:
    return predict_forest_batch(model, np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
