"""Seeded training / prediction / model persistence.

Training is plain mini-batch SGD with cross-entropy loss on CPU with a
fixed seed, so identical (data, config, seed) runs produce identical
model files and predictions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import torch
from torch import nn

from .archs import build_model
from .errors import IncompatibleModel, ShapeMismatch, SingleClass


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    lr: float = 0.01
    momentum: float = 0.9
    seed: int = 0
    patience: int = 0  # 0 disables early stopping
    arch_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or self.lr <= 0:
            raise ValueError("epochs, batch_size and lr must be positive")


def _to_tensor(X: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(X, dtype=np.float32))


def train_model(
    arch: str,
    X: np.ndarray,
    labels: Sequence[str],
    config: Optional[TrainConfig] = None,
    aux: Optional[np.ndarray] = None,
):
    """Train and return a self-describing model blob (a plain dict).

    Probability columns of the trained model follow the sorted order of
    the distinct training labels.
    """
    config = config or TrainConfig()
    if len(X) != len(labels):
        raise ShapeMismatch(f"{len(X)} tensors vs {len(labels)} labels")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise SingleClass(f"need at least 2 classes, got {classes}")
    index = {c: i for i, c in enumerate(classes)}
    y = torch.as_tensor([index[l] for l in labels], dtype=torch.long)

    torch.manual_seed(config.seed)
    model = build_model(
        arch, X.shape[1:], len(classes), config.arch_params,
        aux_dims=aux.shape[1:] if aux is not None else None,
    )
    xt = _to_tensor(X)
    at = _to_tensor(aux) if aux is not None else None

    opt = torch.optim.SGD(model.parameters(), lr=config.lr,
                          momentum=config.momentum)
    loss_fn = nn.CrossEntropyLoss()
    order_rng = torch.Generator().manual_seed(config.seed)
    best, stale = float("inf"), 0
    model.train()
    for _ in range(config.epochs):
        perm = torch.randperm(len(xt), generator=order_rng)
        epoch_loss = 0.0
        for start in range(0, len(xt), config.batch_size):
            idx = perm[start : start + config.batch_size]
            opt.zero_grad()
            if at is None:
                logits = model(xt[idx])
            else:
                logits = model(xt[idx], at[idx])
            loss = loss_fn(logits, y[idx])
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach()) * len(idx)
        epoch_loss /= len(xt)
        if config.patience:
            if epoch_loss < best - 1e-6:
                best, stale = epoch_loss, 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    model.eval()
    return {
        "arch": arch.lower(),
        "classes": classes,
        "input_dims": list(X.shape[1:]),
        "aux_dims": list(aux.shape[1:]) if aux is not None else None,
        "arch_params": dict(config.arch_params),
        "state": model.state_dict(),
    }


def _rebuild(blob) -> nn.Module:
    model = build_model(
        blob["arch"], blob["input_dims"], len(blob["classes"]),
        blob["arch_params"], aux_dims=blob["aux_dims"],
    )
    model.load_state_dict(blob["state"])
    model.eval()
    return model


def predict_probs(blob, X: np.ndarray, aux: Optional[np.ndarray] = None) -> np.ndarray:
    """Softmax probability rows, columns in the blob's class order."""
    if list(X.shape[1:]) != list(blob["input_dims"]):
        raise IncompatibleModel(
            f"model expects dims {blob['input_dims']}, got {list(X.shape[1:])}"
        )
    if blob["aux_dims"] is not None:
        if aux is None or list(aux.shape[1:]) != list(blob["aux_dims"]):
            raise IncompatibleModel(
                f"model expects auxiliary dims {blob['aux_dims']}"
            )
    if len(X) == 0:
        return np.zeros((0, len(blob["classes"])), dtype=np.float64)
    model = _rebuild(blob)
    with torch.no_grad():
        if blob["aux_dims"] is None:
            logits = model(_to_tensor(X))
        else:
            logits = model(_to_tensor(X), _to_tensor(aux))
        probs = torch.softmax(logits, dim=1)
    return probs.numpy().astype(np.float64)


def save_model(blob, path: str) -> None:
    torch.save(blob, path)


def load_model(path: str):
    try:
        blob = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise IncompatibleModel(f"cannot load model file {path}: {exc}") from exc
    for key in ("arch", "classes", "input_dims", "aux_dims", "arch_params", "state"):
        if key not in blob:
            raise IncompatibleModel(f"model file {path} lacks field {key!r}")
    return blob
