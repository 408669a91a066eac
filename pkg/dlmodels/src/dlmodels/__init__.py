"""Deep session classifiers served through a file-based plugin protocol.

The package never imports the evaluation harness; the only shared
surface is the tensor/label/model/prediction file formats and the
train/predict command-line contract.
"""

from .errors import DlModelError, IncompatibleModel, ShapeMismatch, SingleClass
from .ftns import read_label_file, read_tensor_file, write_tensor_file
from .archs import ARCHITECTURES, build_model
from .training import TrainConfig, load_model, predict_probs, save_model, train_model

__all__ = [
    "DlModelError",
    "ShapeMismatch",
    "SingleClass",
    "IncompatibleModel",
    "read_tensor_file",
    "read_label_file",
    "write_tensor_file",
    "ARCHITECTURES",
    "build_model",
    "TrainConfig",
    "train_model",
    "predict_probs",
    "save_model",
    "load_model",
]
