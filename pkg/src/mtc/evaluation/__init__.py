from .metrics import ConfusionMatrix, MetricsReport, compute_metrics
from .folds import FoldAssignment, stratified_kfold
from .plugins import ExternalPlugin, NativePlugin, make_native_plugin
from .protocols import (
    run_cross_dataset,
    run_cv,
    run_incremental,
    run_zero_day,
)

__all__ = [
    "ConfusionMatrix",
    "MetricsReport",
    "compute_metrics",
    "FoldAssignment",
    "stratified_kfold",
    "NativePlugin",
    "ExternalPlugin",
    "make_native_plugin",
    "run_cv",
    "run_zero_day",
    "run_incremental",
    "run_cross_dataset",
]
