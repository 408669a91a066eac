"""Experiment report files: JSON body + separate timestamp, plus a
stable configuration fingerprint embedded in every body."""

from __future__ import annotations

import hashlib
import json
import time
from typing import List, Optional

from .metrics import MetricsReport


def config_fingerprint(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def report_body(
    protocol: str,
    config: dict,
    seed: int,
    mean: Optional[MetricsReport] = None,
    folds: Optional[List[MetricsReport]] = None,
    extra: Optional[dict] = None,
) -> dict:
    body = {
        "protocol": protocol,
        "config": config,
        "fingerprint": config_fingerprint(config),
        "seed": seed,
    }
    if mean is not None:
        body["mean"] = mean.to_dict()
    if folds is not None:
        body["folds"] = [r.to_dict() for r in folds]
    if extra:
        body.update(extra)
    return body


def serialize_body(body: dict) -> str:
    return json.dumps(body, sort_keys=True, indent=2)


def write_report(path: str, body: dict) -> None:
    doc = {"generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
           "body": body}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2))
        fh.write("\n")


def read_report(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def render_report(doc: dict) -> str:
    """Human-readable summary of a stored report."""
    body = doc.get("body", doc)
    lines = [
        f"protocol:    {body.get('protocol')}",
        f"fingerprint: {body.get('fingerprint')}",
        f"seed:        {body.get('seed')}",
    ]
    mean = body.get("mean")
    if mean:
        lines.append(f"accuracy:    {mean['accuracy']:.4f}")
        lines.append(f"macro F1:    {mean['macro_f1']:.4f}")
        lines.append("per class:")
        for cls, m in mean["per_class"].items():
            lines.append(
                f"  {cls:<16} precision {m['precision']:.4f}  "
                f"recall {m['recall']:.4f}  f1 {m['f1']:.4f}"
            )
    for key in ("accuracy", "accuracies", "family", "family_order"):
        if key in body:
            lines.append(f"{key}: {body[key]}")
    return "\n".join(lines)
