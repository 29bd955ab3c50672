"""Project factor schema, record ingestion, encoding and splits.

A schema declares the ten factors describing a building project. Projects are
read from CSV, validated against the schema, encoded into one input node per
factor, and partitioned into test / train / validation id sets.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

N_FACTORS = 10
ID_COLUMN = "id"
TARGET_COLUMN = "overhead_pct"
TARGET_LO = 0.1
TARGET_HI = 0.9

FactorValue = Union[str, float]


class SchemaError(ValueError):
    pass


class Diagnostic(NamedTuple):
    line: int
    column: str
    reason: str

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column!r}: {self.reason}"


class RecordError(ValueError):
    """Raised when project rows fail validation; carries every diagnostic."""

    def __init__(self, diagnostics: Sequence[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class EncodingError(ValueError):
    pass


# --------------------------------------------------------------------- schema


@dataclass(frozen=True)
class FactorSpec:
    name: str
    kind: str  # "categorical" | "continuous"
    levels: tuple[str, ...] = ()
    min: float = 0.0
    max: float = 0.0
    unit: str = ""

    @property
    def is_categorical(self) -> bool:
        return self.kind == "categorical"

    def to_json(self) -> dict:
        if self.is_categorical:
            return {"name": self.name, "kind": self.kind, "levels": list(self.levels)}
        return {"name": self.name, "kind": self.kind, "min": self.min, "max": self.max, "unit": self.unit}


@dataclass(frozen=True)
class FactorSchema:
    factors: tuple[FactorSpec, ...]

    def __post_init__(self):
        if len(self.factors) != N_FACTORS:
            raise SchemaError(f"factor count must be {N_FACTORS}, got {len(self.factors)}")
        names = [f.name for f in self.factors]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise SchemaError(f"duplicate factor names: {dupes}")
        for f in self.factors:
            if f.name in (ID_COLUMN, TARGET_COLUMN) or not f.name.strip():
                raise SchemaError(f"invalid factor name {f.name!r}")
            if f.kind == "categorical":
                if not f.levels:
                    raise SchemaError(f"factor {f.name!r}: levels must be non-empty")
                if len(set(f.levels)) != len(f.levels):
                    raise SchemaError(f"factor {f.name!r}: duplicate levels")
            elif f.kind == "continuous":
                if not (math.isfinite(f.min) and math.isfinite(f.max)) or not f.min < f.max:
                    raise SchemaError(f"factor {f.name!r}: min must be < max (got {f.min}, {f.max})")
            else:
                raise SchemaError(f"factor {f.name!r}: unknown kind {f.kind!r}")

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.factors]

    @classmethod
    def from_json(cls, obj: dict) -> "FactorSchema":
        if not isinstance(obj, dict) or not isinstance(obj.get("factors"), list):
            raise SchemaError("schema must be an object with a 'factors' array")
        specs = []
        for i, entry in enumerate(obj["factors"]):
            try:
                kind = entry["kind"]
                if kind == "categorical":
                    spec = FactorSpec(entry["name"], kind, levels=tuple(str(l) for l in entry["levels"]))
                else:
                    spec = FactorSpec(
                        entry["name"], kind,
                        min=float(entry["min"]), max=float(entry["max"]), unit=str(entry.get("unit", "")),
                    )
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"factor entry {i}: malformed ({exc})") from exc
            specs.append(spec)
        return cls(tuple(specs))

    def to_json(self) -> dict:
        return {"factors": [f.to_json() for f in self.factors]}


def load_schema(path: str | Path) -> FactorSchema:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"cannot parse schema {path}: {exc}") from exc
    return FactorSchema.from_json(obj)


def default_schema() -> FactorSchema:
    """The shipped ten-factor schema. Categorical levels are our own choice."""
    text = resources.files("sitecost").joinpath("default_schema.json").read_text(encoding="utf-8")
    return FactorSchema.from_json(json.loads(text))


# -------------------------------------------------------------------- records


@dataclass(frozen=True)
class ProjectRecord:
    id: str
    values: tuple[FactorValue, ...]
    overhead_pct: float


def _check_value(spec: FactorSpec, raw: str) -> tuple[FactorValue | None, str | None]:
    if spec.is_categorical:
        if raw not in spec.levels:
            return None, f"unknown label {raw!r} (expected one of {list(spec.levels)})"
        return raw, None
    try:
        v = float(raw)
    except ValueError:
        return None, f"non-numeric value {raw!r}"
    if not math.isfinite(v) or not spec.min <= v <= spec.max:
        return None, f"value {raw} outside [{spec.min}, {spec.max}] {spec.unit}".rstrip()
    return v, None


def parse_rows(
    rows: Iterable[dict[str, str]],
    schema: FactorSchema,
    require_target: bool = True,
    first_line: int = 2,
) -> tuple[list[ProjectRecord], list[Diagnostic]]:
    """Validate dict rows; returns the valid records and every diagnostic found."""
    records: list[ProjectRecord] = []
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for line, row in enumerate(rows, start=first_line):
        row_diags: list[Diagnostic] = []
        rid = (row.get(ID_COLUMN) or "").strip()
        if not rid:
            rid = str(line - first_line + 1)
            if require_target:
                row_diags.append(Diagnostic(line, ID_COLUMN, "missing id"))
        elif rid in seen:
            row_diags.append(Diagnostic(line, ID_COLUMN, f"duplicate id {rid!r}"))
        values: list[FactorValue] = []
        for spec in schema.factors:
            raw = row.get(spec.name)
            if raw is None:
                row_diags.append(Diagnostic(line, spec.name, "missing value"))
                continue
            value, err = _check_value(spec, raw.strip())
            if err:
                row_diags.append(Diagnostic(line, spec.name, err))
            values.append(value)
        overhead = math.nan
        raw_t = row.get(TARGET_COLUMN)
        if raw_t is not None and raw_t.strip() != "":
            try:
                overhead = float(raw_t)
            except ValueError:
                row_diags.append(Diagnostic(line, TARGET_COLUMN, f"non-numeric overhead {raw_t!r}"))
            else:
                if not 0.0 < overhead < 100.0:
                    row_diags.append(Diagnostic(line, TARGET_COLUMN, "overhead must be in (0,100)"))
        elif require_target:
            row_diags.append(Diagnostic(line, TARGET_COLUMN, "missing overhead"))
        seen.add(rid)
        if row_diags:
            diags.extend(row_diags)
        else:
            records.append(ProjectRecord(rid, tuple(values), overhead))
    return records, diags


def read_projects(
    path: str | Path, schema: FactorSchema, require_target: bool = True
) -> tuple[list[ProjectRecord], list[Diagnostic]]:
    """Read a project CSV without raising on bad rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            return [], []
        expected = [ID_COLUMN, *schema.names, TARGET_COLUMN]
        if require_target and header != expected:
            raise RecordError([Diagnostic(1, "header", f"expected {expected}, got {header}")])
        missing = [n for n in schema.names if n not in header]
        if missing:
            raise RecordError([Diagnostic(1, n, "column missing from header") for n in missing])
        return parse_rows(reader, schema, require_target=require_target)


def load_projects(path: str | Path, schema: FactorSchema) -> list[ProjectRecord]:
    records, diags = read_projects(path, schema)
    if diags:
        raise RecordError(diags)
    return records


def _fmt(v: FactorValue) -> str:
    return v if isinstance(v, str) else repr(float(v))


def write_projects(path: str | Path, records: Sequence[ProjectRecord], schema: FactorSchema) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([ID_COLUMN, *schema.names, TARGET_COLUMN])
        for r in records:
            w.writerow([r.id, *(_fmt(v) for v in r.values), repr(float(r.overhead_pct))])


# ------------------------------------------------------------------- encoding


class Denormalized(NamedTuple):
    pct: float
    extrapolated: bool


@dataclass(frozen=True)
class NormalizationParams:
    feature_bounds: tuple[tuple[float, float], ...]
    target_bounds: tuple[float, float]

    def __post_init__(self):
        for lo, hi in (*self.feature_bounds, self.target_bounds):
            if not lo < hi:
                raise EncodingError(f"normalization bounds need lo < hi, got ({lo}, {hi})")

    @property
    def target_range(self) -> float:
        lo, hi = self.target_bounds
        return hi - lo

    def normalize_target(self, pct: float) -> float:
        lo, hi = self.target_bounds
        return TARGET_LO + (TARGET_HI - TARGET_LO) * (pct - lo) / (hi - lo)

    def to_json(self) -> dict:
        return {"feature_bounds": [list(b) for b in self.feature_bounds], "target_bounds": list(self.target_bounds)}

    @classmethod
    def from_json(cls, obj: dict) -> "NormalizationParams":
        return cls(
            tuple((float(lo), float(hi)) for lo, hi in obj["feature_bounds"]),
            (float(obj["target_bounds"][0]), float(obj["target_bounds"][1])),
        )


def denormalize_target(y: float, norm: NormalizationParams) -> Denormalized:
    lo, hi = norm.target_bounds
    pct = lo + (y - TARGET_LO) * (hi - lo) / (TARGET_HI - TARGET_LO)
    return Denormalized(pct, not TARGET_LO <= y <= TARGET_HI)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EncodedDataset:
    inputs: np.ndarray
    targets: np.ndarray
    norm: NormalizationParams
    source_ids: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {rid: i for i, rid in enumerate(self.source_ids)})

    def __len__(self) -> int:
        return len(self.source_ids)

    def take(self, ids: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        rows = [self._index[i] for i in ids]
        return self.inputs[rows], self.targets[rows]

    def targets_pct(self, ids: Sequence[str] | None = None) -> np.ndarray:
        y = self.targets if ids is None else self.take(ids)[1]
        return np.array([denormalize_target(v, self.norm).pct for v in y])


def _ordinal_bounds(spec: FactorSpec) -> tuple[float, float]:
    k = len(spec.levels)
    return (0.0, float(k - 1)) if k > 1 else (0.0, 1.0)


def encode_values(values: Sequence[FactorValue], schema: FactorSchema, norm: NormalizationParams) -> np.ndarray:
    """Map one record's factor values to network inputs using stored bounds.

    Continuous values outside the training bounds fall outside [0, 1].
    """
    out = np.empty(len(schema.factors))
    for j, (spec, v, (lo, hi)) in enumerate(zip(schema.factors, values, norm.feature_bounds)):
        x = float(spec.levels.index(v)) if spec.is_categorical else float(v)
        out[j] = (x - lo) / (hi - lo)
    return out


def encode(records: Sequence[ProjectRecord], schema: FactorSchema) -> EncodedDataset:
    if not records:
        raise EncodingError("cannot encode an empty record list")
    bounds = []
    for j, spec in enumerate(schema.factors):
        if spec.is_categorical:
            bounds.append(_ordinal_bounds(spec))
            continue
        col = [float(r.values[j]) for r in records]
        lo, hi = min(col), max(col)
        if lo == hi:
            raise EncodingError(f"factor {spec.name!r} has zero range (all values {lo})")
        bounds.append((lo, hi))
    t = [r.overhead_pct for r in records]
    t_lo, t_hi = min(t), max(t)
    if t_lo == t_hi:
        raise EncodingError(f"overhead has zero range (all values {t_lo})")
    norm = NormalizationParams(tuple(bounds), (t_lo, t_hi))
    X = np.vstack([encode_values(r.values, schema, norm) for r in records])
    y = np.array([norm.normalize_target(v) for v in t])
    # bounds are the observed extremes, so only float rounding can leak past the box
    np.clip(X, 0.0, 1.0, out=X)
    np.clip(y, TARGET_LO, TARGET_HI, out=y)
    return EncodedDataset(_readonly(X), _readonly(y), norm, tuple(r.id for r in records))


# ---------------------------------------------------------------------- split


@dataclass(frozen=True)
class DatasetSplit:
    test_ids: tuple[str, ...]
    train_ids: tuple[str, ...]
    validation_ids: tuple[str, ...]
    seed: int

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "test_ids": list(self.test_ids),
            "train_ids": list(self.train_ids),
            "validation_ids": list(self.validation_ids),
        }


def split_sizes(n: int) -> tuple[int, int, int]:
    """(test, train, validation) counts: 10% holdout, 73% of the rest to train.

    Both roundings are half-up, done in integer arithmetic.
    """
    n_test = (n + 5) // 10
    rest = n - n_test
    n_train = (73 * rest + 50) // 100
    return n_test, n_train, rest - n_train


def split(dataset: EncodedDataset | Sequence[str], seed: int) -> DatasetSplit:
    ids = list(dataset.source_ids if isinstance(dataset, EncodedDataset) else dataset)
    n = len(ids)
    if n < 10:
        raise ValueError(f"need at least 10 records to split, got {n}")
    n_test, n_train, n_val = split_sizes(n)
    perm = np.random.default_rng(seed).permutation(n)
    # keep dataset order inside each part
    test = sorted(perm[:n_test])
    train = sorted(perm[n_test:n_test + n_train])
    val = sorted(perm[n_test + n_train:])
    pick = lambda idx: tuple(ids[i] for i in idx)  # noqa: E731
    return DatasetSplit(pick(test), pick(train), pick(val), seed)
