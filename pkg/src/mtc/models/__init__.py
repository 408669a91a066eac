from .tree import Leaf, Split, fit_tree, predict_tree, predict_tree_batch
from .forest import ForestModel, fit_forest, predict_forest, predict_forest_batch
from .knn import KnnModel, fit_knn, knn_predict, knn_predict_batch
from .persist import save_model, load_model

__all__ = [
    "Leaf",
    "Split",
    "fit_tree",
    "predict_tree",
    "predict_tree_batch",
    "ForestModel",
    "fit_forest",
    "predict_forest",
    "predict_forest_batch",
    "KnnModel",
    "fit_knn",
    "knn_predict",
    "knn_predict_batch",
    "save_model",
    "load_model",
]
