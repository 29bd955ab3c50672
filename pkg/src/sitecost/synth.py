"""Synthetic project generator with a known overhead function.

Overhead is linear in the schema-scaled factor values plus a few pairwise
interaction terms, optionally perturbed by gaussian noise and clamped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import FactorSchema, ProjectRecord, default_schema, write_projects

# factor order: firm category, size, duration, type, location, client,
# contract, joint venture, site preparation, extra manpower
DEFAULT_WEIGHTS = (-0.4, -1.2, 1.5, 0.8, 0.9, 0.3, 0.2, 0.2, 1.0, 0.5)
DEFAULT_INTERACTIONS = ((1, 2, -0.6), (3, 8, 0.4))


@dataclass(frozen=True)
class GroundTruthSpec:
    base_pct: float = 8.0
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    interactions: tuple[tuple[int, int, float], ...] = DEFAULT_INTERACTIONS
    noise_sd: float = 0.0
    clamp: tuple[float, float] = (5.0, 15.0)

    def __post_init__(self):
        if not self.clamp[0] < self.clamp[1]:
            raise ValueError(f"clamp needs lo < hi, got {self.clamp}")
        if not (0.0 < self.clamp[0] and self.clamp[1] < 100.0):
            raise ValueError("clamp range must lie inside (0, 100)")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if len(self.weights) != 10:
            raise ValueError(f"need 10 weights, got {len(self.weights)}")
        for i, j, _ in self.interactions:
            if not (0 <= i < 10 and 0 <= j < 10):
                raise ValueError(f"interaction ({i}, {j}) out of range")

    def to_json(self) -> dict:
        return {
            "base_pct": self.base_pct,
            "weights": list(self.weights),
            "interactions": [list(t) for t in self.interactions],
            "noise_sd": self.noise_sd,
            "clamp": list(self.clamp),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GroundTruthSpec":
        d = cls()
        return cls(
            base_pct=float(obj.get("base_pct", d.base_pct)),
            weights=tuple(float(w) for w in obj.get("weights", d.weights)),
            interactions=tuple((int(i), int(j), float(c)) for i, j, c in obj.get("interactions", d.interactions)),
            noise_sd=float(obj.get("noise_sd", d.noise_sd)),
            clamp=tuple(float(c) for c in obj.get("clamp", d.clamp)),
        )


@dataclass(frozen=True)
class SyntheticDataset:
    records: list[ProjectRecord]
    spec: GroundTruthSpec
    seed: int
    schema: FactorSchema = field(default_factory=default_schema, repr=False)

    def write(self, csv_path: str | Path, sidecar_path: str | Path | None = None) -> None:
        csv_path = Path(csv_path)
        write_projects(csv_path, self.records, self.schema)
        sidecar = Path(sidecar_path) if sidecar_path else csv_path.with_name("ground_truth.json")
        payload = {"seed": self.seed, "n": len(self.records), "spec": self.spec.to_json()}
        sidecar.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def schema_scaled(values: Sequence, schema: FactorSchema) -> np.ndarray:
    """Factor values on [0, 1] using the schema's declared domain."""
    out = np.empty(len(schema.factors))
    for j, (spec, v) in enumerate(zip(schema.factors, values)):
        if spec.is_categorical:
            k = len(spec.levels)
            out[j] = spec.levels.index(v) / (k - 1) if k > 1 else 0.0
        else:
            out[j] = (float(v) - spec.min) / (spec.max - spec.min)
    return out


def _overhead(e: np.ndarray, spec: GroundTruthSpec, noise: float) -> float:
    value = spec.base_pct + float(np.dot(spec.weights, e))
    for i, j, c in spec.interactions:
        value += c * e[i] * e[j]
    value += noise
    lo, hi = spec.clamp
    return min(max(value, lo), hi)


def oracle_overhead(record: ProjectRecord, spec: GroundTruthSpec, schema: FactorSchema) -> float:
    """Noiseless ground-truth overhead percentage for a record."""
    return _overhead(schema_scaled(record.values, schema), spec, 0.0)


def generate(
    n: int,
    seed: int,
    spec: GroundTruthSpec = GroundTruthSpec(),
    schema: FactorSchema | None = None,
) -> SyntheticDataset:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    schema = schema or default_schema()
    rng = np.random.default_rng(seed)
    records = []
    for k in range(n):
        values = []
        for f in schema.factors:
            if f.is_categorical:
                values.append(f.levels[int(rng.integers(len(f.levels)))])
            else:
                values.append(min(max(round(float(rng.uniform(f.min, f.max)), 2), f.min), f.max))
        # drawn even when noise_sd is 0 so factor values do not depend on the noise level
        z = float(rng.standard_normal())
        e = schema_scaled(values, schema)
        records.append(ProjectRecord(f"P{k + 1:03d}", tuple(values), _overhead(e, spec, spec.noise_sd * z)))
    return SyntheticDataset(records, spec, seed, schema)
