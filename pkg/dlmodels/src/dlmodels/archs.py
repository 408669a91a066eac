"""The four architecture families.

Every width and kernel is a config knob so the same code serves both the
full-size models and the tiny variants used for numeric gradient checks.
Defaults:

  m1cnn        conv1d(32,k25) -> maxpool(3) -> conv1d(64,k25) -> maxpool(3)
               -> dense(1024) -> softmax, over a flat byte vector
  m2cnn        conv2d(32,5x5) -> pool(2) -> conv2d(64,5x5) -> pool(2)
               -> dense(1024) -> softmax, over a byte image
  deepmal      conv over the [m,n] packet block -> dense(256) -> dense(128)
               -> softmax
  maldist_lite conv branch on the byte image in parallel with a GRU(64)
               branch on the per-packet [length, direction, gap] rows,
               concatenated -> dense(256) -> softmax

Models output logits; softmax happens at prediction time.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import torch
from torch import nn

from .errors import ShapeMismatch

ARCHITECTURES = ("m1cnn", "m2cnn", "deepmal", "maldist_lite")


def _cfg(config: Optional[dict], key: str, default):
    return default if config is None or key not in config else config[key]


class M1Cnn(nn.Module):
    def __init__(self, length: int, n_classes: int, config: Optional[dict] = None):
        super().__init__()
        c1 = _cfg(config, "conv1_filters", 32)
        c2 = _cfg(config, "conv2_filters", 64)
        k = _cfg(config, "kernel", 25)
        pool = _cfg(config, "pool", 3)
        dense = _cfg(config, "dense", 1024)
        if length < (k + pool) * 2:
            raise ShapeMismatch(f"input length {length} too short for kernel {k}")
        self.features = nn.Sequential(
            nn.Conv1d(1, c1, k), nn.ReLU(), nn.MaxPool1d(pool),
            nn.Conv1d(c1, c2, k), nn.ReLU(), nn.MaxPool1d(pool),
            nn.Flatten(),
        )
        with torch.no_grad():
            flat = self.features(torch.zeros(1, 1, length)).shape[1]
        self.head = nn.Sequential(nn.Linear(flat, dense), nn.ReLU(),
                                  nn.Linear(dense, n_classes))

    def forward(self, x):
        return self.head(self.features(x.unsqueeze(1)))


class M2Cnn(nn.Module):
    def __init__(self, shape: Tuple[int, int], n_classes: int,
                 config: Optional[dict] = None):
        super().__init__()
        c1 = _cfg(config, "conv1_filters", 32)
        c2 = _cfg(config, "conv2_filters", 64)
        k = _cfg(config, "kernel", 5)
        dense = _cfg(config, "dense", 1024)
        if min(shape) < 2 * k + 2:
            raise ShapeMismatch(f"image {shape} too small for kernel {k}")
        self.features = nn.Sequential(
            nn.Conv2d(1, c1, k), nn.ReLU(), nn.MaxPool2d(2),
            nn.Conv2d(c1, c2, k), nn.ReLU(), nn.MaxPool2d(2),
            nn.Flatten(),
        )
        with torch.no_grad():
            flat = self.features(torch.zeros(1, 1, *shape)).shape[1]
        self.head = nn.Sequential(nn.Linear(flat, dense), nn.ReLU(),
                                  nn.Linear(dense, n_classes))

    def forward(self, x):
        return self.head(self.features(x.unsqueeze(1)))


class DeepMal(nn.Module):
    def __init__(self, shape: Tuple[int, int], n_classes: int,
                 config: Optional[dict] = None):
        super().__init__()
        m, n = shape
        filters = _cfg(config, "conv_filters", 32)
        k = min(_cfg(config, "kernel", 5), n)
        d1 = _cfg(config, "dense1", 256)
        d2 = _cfg(config, "dense2", 128)
        self.features = nn.Sequential(
            nn.Conv2d(1, filters, (m, k)), nn.ReLU(), nn.Flatten()
        )
        with torch.no_grad():
            flat = self.features(torch.zeros(1, 1, m, n)).shape[1]
        self.head = nn.Sequential(
            nn.Linear(flat, d1), nn.ReLU(),
            nn.Linear(d1, d2), nn.ReLU(),
            nn.Linear(d2, n_classes),
        )

    def forward(self, x):
        return self.head(self.features(x.unsqueeze(1)))


class MalDistLite(nn.Module):
    """Image-CNN branch fused with a GRU over packet-metadata rows."""

    def __init__(self, img_shape: Tuple[int, int], seq_shape: Tuple[int, int],
                 n_classes: int, config: Optional[dict] = None):
        super().__init__()
        c1 = _cfg(config, "conv_filters", 16)
        k = _cfg(config, "kernel", 3)
        hidden = _cfg(config, "gru_hidden", 64)
        dense = _cfg(config, "dense", 256)
        self.cnn = nn.Sequential(
            nn.Conv2d(1, c1, k), nn.ReLU(), nn.MaxPool2d(2), nn.Flatten()
        )
        with torch.no_grad():
            flat = self.cnn(torch.zeros(1, 1, *img_shape)).shape[1]
        self.gru = nn.GRU(seq_shape[1], hidden, batch_first=True)
        self.head = nn.Sequential(
            nn.Linear(flat + hidden, dense), nn.ReLU(), nn.Linear(dense, n_classes)
        )

    def forward(self, x, aux):
        img = self.cnn(x.unsqueeze(1))
        _, h = self.gru(aux)
        return self.head(torch.cat([img, h[-1]], dim=1))


def build_model(
    arch: str,
    input_dims: Sequence[int],
    n_classes: int,
    config: Optional[dict] = None,
    aux_dims: Optional[Sequence[int]] = None,
) -> nn.Module:
    name = arch.lower()
    dims = tuple(int(d) for d in input_dims)
    if name == "m1cnn":
        if len(dims) != 1:
            raise ShapeMismatch(f"m1cnn expects a flat vector, got dims {dims}")
        return M1Cnn(dims[0], n_classes, config)
    if name == "m2cnn":
        if len(dims) != 2:
            raise ShapeMismatch(f"m2cnn expects a 2-D image, got dims {dims}")
        return M2Cnn(dims, n_classes, config)
    if name == "deepmal":
        if len(dims) != 2:
            raise ShapeMismatch(f"deepmal expects an [m,n] block, got dims {dims}")
        return DeepMal(dims, n_classes, config)
    if name == "maldist_lite":
        if len(dims) != 2:
            raise ShapeMismatch(f"maldist_lite expects a 2-D image, got dims {dims}")
        if aux_dims is None or len(aux_dims) != 2:
            raise ShapeMismatch("maldist_lite needs a [P,3] auxiliary tensor set")
        return MalDistLite(dims, tuple(int(d) for d in aux_dims), n_classes, config)
    raise ShapeMismatch(f"unknown architecture {arch!r}")
