"""Model plugins: native classical models and the external wire contract.

External plugins are separate executables driven through files:

    <exe> train --arch <name> --train-x <ftns> --train-y <labels>
          --model-out <path> --seed <u64> [--config <file>]
    <exe> predict --model-in <path> --x <ftns> --out <pred-file>

The label file holds "session_id,label,family" lines; the prediction file
holds "session_id,p_class0,p_class1,..." lines where class columns follow
the sorted order of the distinct labels seen at training time. Exit code 0
means success; anything else is a plugin failure and stderr is surfaced.

The tensor file passed to ``predict`` carries no session ids, so a
companion id file is written next to it at ``<x path> + ".labels"``.
Plugins may use it to emit real session ids; plugins that ignore it can
emit rows in input order (any id column) and the harness matches
positionally.
"""

from __future__ import annotations

import json
import os
import subprocess
import tempfile
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..errors import PluginError
from ..features import FeatureTensor, write_tensor_file
from ..models import (
    fit_forest,
    fit_knn,
    fit_tree,
    knn_predict_batch,
    predict_forest_batch,
    predict_tree_batch,
)

NATIVE_KINDS = ("dt", "rf", "extra", "knn")


@dataclass
class FoldData:
    """One side (train or test) of a plugin invocation."""

    tensors: List[FeatureTensor]
    ids: List[str]
    labels: List[str]
    classes: List[str]
    aux_tensors: Optional[List[FeatureTensor]] = None

    def matrix(self) -> np.ndarray:
        return np.stack([t.flat() for t in self.tensors]).astype(np.float64)

    def label_indices(self) -> np.ndarray:
        index = {c: i for i, c in enumerate(self.classes)}
        return np.asarray([index[l] for l in self.labels], dtype=np.int64)


class NativePlugin:
    """In-process DT / RF / ExtraTrees / KNN."""

    needs_aux = False

    def __init__(self, kind: str, **params):
        if kind not in NATIVE_KINDS:
            raise ValueError(f"unknown native model {kind!r}")
        self.kind = kind
        self.params = params

    @property
    def name(self) -> str:
        return self.kind

    def describe(self) -> dict:
        return {"plugin": "native", "kind": self.kind, "params": dict(sorted(self.params.items()))}

    def train_predict(self, train: FoldData, test: FoldData, seed: int) -> np.ndarray:
        X = train.matrix()
        y = train.label_indices()
        n_classes = len(train.classes)
        Xt = test.matrix()
        if self.kind == "dt":
            model = fit_tree(
                X, y, n_classes=n_classes, max_depth=self.params.get("max_depth")
            )
            probs = predict_tree_batch(model, Xt)
            if probs.shape[1] < n_classes:
                probs = np.pad(probs, ((0, 0), (0, n_classes - probs.shape[1])))
            return probs
        if self.kind in ("rf", "extra"):
            model = fit_forest(
                X,
                y,
                n_trees=self.params.get("n_trees", 100),
                feature_subsample=self.params.get("feature_subsample"),
                bootstrap=self.params.get("bootstrap", True),
                mode=self.kind,
                seed=seed,
                max_depth=self.params.get("max_depth"),
                n_classes=n_classes,
            )
            return predict_forest_batch(model, Xt)
        k = min(self.params.get("k", 3), len(X))
        model = fit_knn(X, y, k=k, n_classes=n_classes)
        return knn_predict_batch(model, Xt)


def make_native_plugin(name: str, **params) -> NativePlugin:
    return NativePlugin(name, **params)


class ExternalPlugin:
    """Subprocess model behind the file-based wire contract."""

    def __init__(self, exe: Sequence[str], arch: str, needs_aux: bool = False,
                 config: Optional[dict] = None):
        self.exe = list(exe)
        self.arch = arch
        self.needs_aux = needs_aux
        self.config = dict(config or {})

    @property
    def name(self) -> str:
        return f"external:{self.arch}"

    def describe(self) -> dict:
        return {
            "plugin": "external",
            "exe": self.exe,
            "arch": self.arch,
            "config": dict(sorted(self.config.items())),
        }

    def _run(self, argv: List[str]) -> None:
        try:
            proc = subprocess.run(argv, capture_output=True, text=True)
        except OSError as exc:
            raise PluginError(f"cannot launch {argv[0]}: {exc}") from exc
        if proc.returncode != 0:
            raise PluginError(
                f"{' '.join(argv)} exited {proc.returncode}: {proc.stderr.strip()}"
            )

    def train_predict(self, train: FoldData, test: FoldData, seed: int) -> np.ndarray:
        with tempfile.TemporaryDirectory(prefix="mtc-plugin-") as tmp:
            train_x = os.path.join(tmp, "train.ftns")
            train_y = os.path.join(tmp, "train.labels")
            test_x = os.path.join(tmp, "test.ftns")
            model = os.path.join(tmp, "model.bin")
            pred = os.path.join(tmp, "pred.csv")
            write_tensor_file(
                train.tensors,
                [(i, l, l) for i, l in zip(train.ids, train.labels)],
                train_x,
                train_y,
            )
            write_tensor_file(
                test.tensors,
                [(i, "", "") for i in test.ids],
                test_x,
                test_x + ".labels",
            )
            config = dict(self.config)
            if self.needs_aux:
                aux_train = os.path.join(tmp, "train-aux.ftns")
                aux_test = os.path.join(tmp, "test-aux.ftns")
                write_tensor_file(train.aux_tensors, [(i, "", "") for i in train.ids],
                                  aux_train, None)
                write_tensor_file(test.aux_tensors, [(i, "", "") for i in test.ids],
                                  aux_test, None)
                config["aux_x"] = aux_train
                config["predict_aux_x"] = aux_test
            argv = self.exe + [
                "train",
                "--arch", self.arch,
                "--train-x", train_x,
                "--train-y", train_y,
                "--model-out", model,
                "--seed", str(seed),
            ]
            if config:
                cfg_path = os.path.join(tmp, "config.json")
                with open(cfg_path, "w", encoding="utf-8") as fh:
                    json.dump(config, fh, sort_keys=True)
                argv += ["--config", cfg_path]
            self._run(argv)
            self._run(
                self.exe
                + ["predict", "--model-in", model, "--x", test_x, "--out", pred]
            )
            rows = _read_predictions(pred)
        n_classes = len(train.classes)
        # prediction columns follow sorted train-label order
        sorted_classes = sorted(set(train.labels))
        out = np.zeros((len(test.ids), n_classes), dtype=np.float64)
        class_pos = {c: train.classes.index(c) for c in sorted_classes}
        by_id = dict(rows)
        if all(sid in by_id for sid in test.ids):
            ordered = [by_id[sid] for sid in test.ids]
        elif len(rows) == len(test.ids):
            ordered = [probs for _, probs in rows]  # positional fallback
        else:
            raise PluginError(
                f"prediction file has {len(rows)} rows for {len(test.ids)} "
                "test samples and ids do not match"
            )
        for row_idx, probs in enumerate(ordered):
            if len(probs) != len(sorted_classes):
                raise PluginError(
                    f"expected {len(sorted_classes)} probabilities, got {len(probs)}"
                )
            for c, p in zip(sorted_classes, probs):
                out[row_idx, class_pos[c]] = p
        return out


def _read_predictions(path: str) -> List[tuple]:
    """(session_id, probabilities) pairs in file order."""
    rows: List[tuple] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(",")
                rows.append((parts[0], [float(p) for p in parts[1:]]))
    except (OSError, ValueError) as exc:
        raise PluginError(f"unreadable prediction file {path}: {exc}") from exc
    return rows
