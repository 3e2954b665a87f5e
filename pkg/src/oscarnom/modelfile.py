"""Model persistence: a JSON file carrying the float32 weight block
(base64, little-endian), bias, decision threshold, training config,
feature layout and a content checksum.

Serialization is canonical (sorted keys, no timestamps), so identical
training runs produce byte-identical files.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import WeightedLogisticRegression
from .errors import CorruptModel, DimensionMismatch
from .features import Variant

MODEL_FORMAT = "oscarnom-logreg"
MODEL_VERSION = 1


@dataclass
class FeatureLayout:
    variant: Variant
    embed_dim: int

    @property
    def fields(self) -> tuple[str, ...]:
        return self.variant.fields

    @property
    def dimension(self) -> int:
        return 2 * self.embed_dim * len(self.fields)

    def to_dict(self) -> dict:
        return {"variant": self.variant.value, "fields": list(self.fields),
                "embed_dim": self.embed_dim, "dimension": self.dimension}


@dataclass
class NominationModel:
    """A trained classifier plus everything needed to apply it."""

    estimator: WeightedLogisticRegression
    layout: FeatureLayout
    threshold: float = 0.5
    training: dict = field(default_factory=dict)

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if rows.shape[1] != self.layout.dimension:
            raise DimensionMismatch(
                f"feature rows have {rows.shape[1]} columns, layout expects "
                f"{self.layout.dimension}")
        return self.estimator.predict_proba(rows)[:, 1]

    def predict_label(self, rows: np.ndarray) -> np.ndarray:
        return (self.predict_proba(rows) >= self.threshold).astype(np.int64)

    def to_payload(self) -> dict:
        est = self.estimator
        weights = est.coef_[0].astype("<f4").tobytes()
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "weights": base64.b64encode(weights).decode("ascii"),
            "bias": float(est.intercept_[0]),
            "threshold": float(self.threshold),
            "config": {
                "C": est.C,
                "max_iter": est.max_iter,
                "tol": est.tol,
                "class_weight": est.class_weight or "none",
                "memory": est.memory,
            },
            "feature_layout": self.layout.to_dict(),
            "training": dict(self.training),
        }


def payload_checksum(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_model(model: NominationModel, path: str | Path) -> str:
    """Write the model JSON; returns its content checksum."""
    payload = model.to_payload()
    checksum = payload_checksum(payload)
    payload["checksum"] = checksum
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return checksum


def load_model(path: str | Path) -> NominationModel:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptModel(f"cannot read model file {path}: {exc}") from exc
    if payload.get("format") != MODEL_FORMAT:
        raise CorruptModel(f"{path}: not a {MODEL_FORMAT} file")
    stored = payload.pop("checksum", None)
    if stored != payload_checksum(payload):
        raise CorruptModel(f"{path}: checksum mismatch")

    cfg = payload["config"]
    cw = cfg["class_weight"]
    est = WeightedLogisticRegression(
        C=cfg["C"], max_iter=cfg["max_iter"], tol=cfg["tol"],
        class_weight=None if cw == "none" else cw, memory=cfg["memory"])

    weights = np.frombuffer(base64.b64decode(payload["weights"]), dtype="<f4")
    layout = FeatureLayout(variant=Variant.parse(payload["feature_layout"]["variant"]),
                           embed_dim=int(payload["feature_layout"]["embed_dim"]))
    if weights.shape[0] != layout.dimension:
        raise CorruptModel(
            f"{path}: weight block has {weights.shape[0]} values, layout "
            f"expects {layout.dimension}")
    est.classes_ = np.array([0, 1])
    est.coef_ = weights.astype(np.float64).reshape(1, -1)
    est.intercept_ = np.array([float(np.float32(payload["bias"]))])
    est.threshold_ = float(payload["threshold"])
    est.n_iter_ = payload["training"].get("n_iter", 0)
    est.converged_ = payload["training"].get("converged", True)

    return NominationModel(estimator=est, layout=layout,
                           threshold=float(payload["threshold"]),
                           training=dict(payload["training"]))
