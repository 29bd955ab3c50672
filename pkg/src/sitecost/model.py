"""Trained-model files: topology, weights, normalization and provenance as JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import FactorSchema, NormalizationParams, ProjectRecord
from .network import Network, NetworkTopology, make_network, predict

FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainedModel:
    model_id: str
    network: Network
    norm: NormalizationParams
    schema: FactorSchema
    seeds: dict = field(default_factory=dict)
    training: dict = field(default_factory=dict)
    threshold_pct: float | None = None  # mean |absolute difference| on validation

    def predict(self, record: ProjectRecord | Sequence) -> float:
        return predict(self.network, record, self.schema, self.norm)

    def to_json(self) -> dict:
        net = self.network
        return {
            "format_version": FORMAT_VERSION,
            "model_id": self.model_id,
            "topology": net.topology.to_json(),
            "transfers": [t.value for t in net.topology.transfers],
            # row-major, shape (out, in)
            "weights": [W.tolist() for W in net.weights],
            "biases": [b.tolist() for b in net.biases],
            "normalization": self.norm.to_json(),
            "schema": self.schema.to_json(),
            "seeds": {"init": net.init_seed, **self.seeds},
            "training": self.training,
            "threshold_pct": self.threshold_pct,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrainedModel":
        if obj.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {obj.get('format_version')!r}")
        seeds = dict(obj.get("seeds", {}))
        init_seed = seeds.pop("init", None)
        topo = NetworkTopology.from_json(obj["topology"])
        net = make_network(topo, [np.array(W, dtype=float) for W in obj["weights"]],
                           [np.array(b, dtype=float) for b in obj["biases"]], init_seed)
        return cls(
            model_id=obj["model_id"],
            network=net,
            norm=NormalizationParams.from_json(obj["normalization"]),
            schema=FactorSchema.from_json(obj["schema"]),
            seeds=seeds,
            training=obj.get("training") or {},
            threshold_pct=obj.get("threshold_pct"),
        )


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json(), indent=1) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    return TrainedModel.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
