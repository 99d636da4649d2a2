"""Versioned model files.

Human-readable JSON with every float rendered as a C99 hex literal, so a
save/load round trip reproduces predictions bit for bit. Files with an
unknown format version are rejected outright.
"""

from __future__ import annotations

import json

import numpy as np

from .calibration import CalibratedModel, CalibrationMap
from .learners import LinearModel, LossKind

FORMAT_VERSION = 1

_KIND_TO_NAME = {
    LossKind.LOGISTIC: "logistic",
    LossKind.SQUARED: "squared",
    LossKind.PAIRWISE_LOGISTIC: "pairwise_logistic",
    LossKind.CRR: "crr",
}
_NAME_TO_KIND = {v: k for k, v in _KIND_TO_NAME.items()}


def _hex(x: float) -> str:
    return float(x).hex()


def _unhex(s: str) -> float:
    return float.fromhex(s)


def save_model(path, model, metadata: dict | None = None) -> None:
    """Write a LinearModel or CalibratedModel with optional training metadata."""
    if isinstance(model, CalibratedModel):
        ranker = model.ranker
        doc = {
            "format_version": FORMAT_VERSION,
            "model_kind": "calibrated",
            "ranker_kind": _KIND_TO_NAME[ranker.loss_kind],
            "dimension": ranker.dimension,
            "weights": [_hex(w) for w in ranker.weights],
            "bias": _hex(ranker.bias),
            "calibration": {
                "breakpoint_scores": [_hex(s) for s in model.map.breakpoint_scores],
                "breakpoint_values": [_hex(v) for v in model.map.breakpoint_values],
            },
        }
    elif isinstance(model, LinearModel):
        doc = {
            "format_version": FORMAT_VERSION,
            "model_kind": _KIND_TO_NAME[model.loss_kind],
            "dimension": model.dimension,
            "weights": [_hex(w) for w in model.weights],
            "bias": _hex(model.bias),
        }
    else:
        raise TypeError("model must be a LinearModel or CalibratedModel")
    doc["metadata"] = dict(metadata or {})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    """Read a model file back; returns (model, metadata)."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not a valid model file: {exc}") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported format_version {version!r}, expected {FORMAT_VERSION}"
        )
    kind_name = doc.get("model_kind")
    weights = np.array([_unhex(w) for w in doc["weights"]])
    bias = _unhex(doc["bias"])
    metadata = doc.get("metadata", {})
    if kind_name == "calibrated":
        ranker = LinearModel(weights, bias, _NAME_TO_KIND[doc["ranker_kind"]])
        cal = doc["calibration"]
        cal_map = CalibrationMap(
            np.array([_unhex(s) for s in cal["breakpoint_scores"]]),
            np.array([_unhex(v) for v in cal["breakpoint_values"]]),
        )
        return CalibratedModel(ranker, cal_map), metadata
    if kind_name not in _NAME_TO_KIND:
        raise ValueError(f"{path}: unknown model_kind {kind_name!r}")
    return LinearModel(weights, bias, _NAME_TO_KIND[kind_name]), metadata
