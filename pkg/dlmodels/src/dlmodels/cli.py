"""train/predict command line implementing the model plugin contract.

    dlmodels train --arch <name> --train-x <ftns> --train-y <labels>
             --model-out <path> --seed <u64> [--config <json file>]
    dlmodels predict --model-in <path> --x <ftns> --out <pred-file>

The prediction file starts with a comment header and then one
"session_id,p_class0,p_class1,..." line per input row, columns in sorted
train-label order. Session ids come from the companion "<x>.labels" file
when present, else row indices are used. Exit code 0 on success; any
failure prints a diagnostic on stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from . import ftns
from .errors import DlModelError
from .training import TrainConfig, load_model, predict_probs, save_model, train_model


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    aux = None
    if "aux_x" in cfg:
        aux = ftns.read_tensor_file(cfg["aux_x"])
    X = ftns.read_tensor_file(args.train_x)
    labels = [label for _, label, _ in ftns.read_label_file(args.train_y)]
    train_cfg = TrainConfig(
        epochs=int(cfg.get("epochs", 30)),
        batch_size=int(cfg.get("batch_size", 32)),
        lr=float(cfg.get("lr", 0.05)),
        momentum=float(cfg.get("momentum", 0.9)),
        seed=args.seed,
        patience=int(cfg.get("patience", 0)),
        arch_params=cfg.get("arch_params", {}),
    )
    blob = train_model(args.arch, X, labels, train_cfg, aux=aux)
    # carry the prediction-side auxiliary path, if the caller supplied one
    blob["predict_aux_x"] = cfg.get("predict_aux_x")
    save_model(blob, args.model_out)
    return 0


def _cmd_predict(args) -> int:
    blob = load_model(args.model_in)
    X = ftns.read_tensor_file(args.x)
    aux = None
    if blob.get("aux_dims") is not None:
        aux_path = blob.get("predict_aux_x")
        if not aux_path:
            raise DlModelError(
                "model needs auxiliary tensors; set predict_aux_x in the "
                "training config"
            )
        aux = ftns.read_tensor_file(aux_path)
    probs = predict_probs(blob, X, aux=aux)
    ids: List[str]
    labels_path = args.x + ".labels"
    if os.path.exists(labels_path):
        ids = [sid for sid, _, _ in ftns.read_label_file(labels_path)]
        if len(ids) != len(X):
            raise DlModelError(
                f"{labels_path} has {len(ids)} ids for {len(X)} tensors"
            )
    else:
        ids = [str(i) for i in range(len(X))]
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("# session_id," + ",".join(f"p_{c}" for c in blob["classes"]) + "\n")
        for sid, row in zip(ids, probs):
            fh.write(sid + "," + ",".join(repr(float(p)) for p in row) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dlmodels", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from tensor + label files")
    p.add_argument("--arch", required=True)
    p.add_argument("--train-x", required=True)
    p.add_argument("--train-y", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)

    p = sub.add_parser("predict", help="write probability rows for a tensor file")
    p.add_argument("--model-in", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--out", required=True)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return _cmd_train(args)
        return _cmd_predict(args)
    except (DlModelError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"dlmodels: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
