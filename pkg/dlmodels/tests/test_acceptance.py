"""Acceptance gates for the deep-model package.

Each test covers one release criterion, enforces its wall-clock budget,
and prints a single PASS line with the measured time.
"""

import contextlib
import json
import subprocess
import sys
import time

import numpy as np
import torch
from torch import nn

from conftest import planted_bytes
from dlmodels import build_model, ftns
from test_archs import TINY
from test_gradients import numeric_gradients


@contextlib.contextmanager
def budget(name, seconds):
    t0 = time.perf_counter()
    yield
    elapsed = time.perf_counter() - t0
    assert elapsed < seconds, f"{name}: {elapsed:.2f}s exceeds the {seconds}s budget"
    print(f"PASS {name} ({elapsed:.2f}s < {seconds}s)")


def test_gradient_check_all_architectures():
    with budget("deep-model gradient check", 60.0):
        for name in sorted(TINY):
            spec = TINY[name]
            torch.manual_seed(1)
            model = build_model(name, spec["dims"], 2, spec["config"],
                                aux_dims=spec["aux"]).double()
            x = torch.rand(5, *spec["dims"], dtype=torch.float64)
            aux = (torch.rand(5, *spec["aux"], dtype=torch.float64)
                   if spec["aux"] is not None else None)
            y = torch.tensor([0, 1, 1, 0, 1])
            model.zero_grad()
            logits = model(x) if aux is None else model(x, aux)
            nn.functional.cross_entropy(logits, y).backward()
            analytic = [p.grad.clone() for p in model.parameters()]
            numeric = numeric_gradients(model, x, aux, y)
            worst = 0.0
            for a, n in zip(analytic, numeric):
                denom = np.maximum(1.0, (a.abs() + n.abs()).numpy())
                worst = max(worst, float((np.abs((a - n).numpy()) / denom).max()))
            assert worst <= 1e-4, (name, worst)


def _run_cli(argv):
    proc = subprocess.run([sys.executable, "-m", "dlmodels.cli"] + argv,
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


def _wire_accuracy(arch, shape, tmp_path, config):
    """Train/test through the file + subprocess contract; held-out accuracy."""
    X, labels = planted_bytes(120, seed=31)
    X = X.reshape((len(X),) + shape)
    order = np.random.default_rng(5).permutation(len(X))
    train_idx, test_idx = order[:160], order[160:]

    train_x = str(tmp_path / f"{arch}-train.ftns")
    train_y = str(tmp_path / f"{arch}-train.labels")
    test_x = str(tmp_path / f"{arch}-test.ftns")
    ftns.write_tensor_file(X[train_idx], train_x)
    ftns.write_label_file(
        [(f"s{i}", labels[i], labels[i]) for i in train_idx], train_y
    )
    ftns.write_tensor_file(X[test_idx], test_x)
    ftns.write_label_file([(f"s{i}", "", "") for i in test_idx],
                          test_x + ".labels")

    cfg = tmp_path / f"{arch}-cfg.json"
    cfg.write_text(json.dumps(config))
    model = str(tmp_path / f"{arch}.pt")
    _run_cli(["train", "--arch", arch, "--train-x", train_x,
              "--train-y", train_y, "--model-out", model,
              "--seed", "1", "--config", str(cfg)])
    pred = str(tmp_path / f"{arch}-pred.csv")
    _run_cli(["predict", "--model-in", model, "--x", test_x, "--out", pred])

    rows = {}
    for line in open(pred).read().splitlines():
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        probs = [float(p) for p in parts[1:]]
        assert abs(sum(probs) - 1.0) < 1e-5  # softmax row identity
        rows[parts[0]] = probs
    classes = ["benign", "malware"]  # sorted train-label order
    hits = sum(
        1 for i in test_idx
        if classes[int(np.argmax(rows[f"s{i}"]))] == labels[i]
    )
    return hits / len(test_idx)


def test_planted_signal_over_plugin_protocol(tmp_path):
    with budget("deep-model planted-signal (plugin protocol)", 600.0):
        acc1 = _wire_accuracy("m1cnn", (784,), tmp_path,
                              {"epochs": 25, "batch_size": 32, "lr": 0.01})
        acc2 = _wire_accuracy("m2cnn", (28, 28), tmp_path,
                              {"epochs": 25, "batch_size": 32, "lr": 0.01})
        assert acc1 >= 0.95, f"m1cnn held-out accuracy {acc1:.3f}"
        assert acc2 >= 0.95, f"m2cnn held-out accuracy {acc2:.3f}"
