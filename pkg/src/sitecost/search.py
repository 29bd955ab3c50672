"""The 58-trial architecture sweep, best-model selection and sweep reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .data import DatasetSplit, EncodedDataset, denormalize_target
from .metrics import absolute_difference, rms as rms_metric
from .network import Network, NetworkTopology, TrainingConfig, TrainingDiverged, Transfer, forward_batch, init_network, train

N_INPUTS = 10
ONE_LAYER_NODES = (3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 20)
TWO_LAYER_NODES = (
    (2, 1), (2, 2), (3, 1), (3, 2), (3, 3), (4, 1), (4, 2), (4, 3),
    (4, 4), (5, 3), (5, 4), (5, 5), (6, 4), (6, 5), (6, 6),
)
GROUP_TITLES = {
    "one-sigmoid": "One hidden layer, sigmoid transfer",
    "one-tangent": "One hidden layer, tangent transfer",
    "two-sigmoid": "Two hidden layers, sigmoid transfer in each",
    "two-tangent": "Two hidden layers, tangent transfer in each",
}


@dataclass(frozen=True)
class SweepTrial:
    trial_no: int
    group: str
    topology: NetworkTopology


@dataclass(frozen=True)
class SweepPlan:
    trials: tuple[SweepTrial, ...]

    def __len__(self) -> int:
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)

    def groups(self) -> dict[str, list[SweepTrial]]:
        out: dict[str, list[SweepTrial]] = {}
        for t in self.trials:
            out.setdefault(t.group, []).append(t)
        return out

    def to_json(self) -> list:
        return [{"trial_no": t.trial_no, "group": t.group, "topology": t.topology.to_json()} for t in self.trials]

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def build_reference_sweep() -> SweepPlan:
    trials = []
    layouts = [
        ("one-sigmoid", Transfer.SIGMOID, [(n,) for n in ONE_LAYER_NODES]),
        ("one-tangent", Transfer.TANGENT, [(n,) for n in ONE_LAYER_NODES]),
        ("two-sigmoid", Transfer.SIGMOID, TWO_LAYER_NODES),
        ("two-tangent", Transfer.TANGENT, TWO_LAYER_NODES),
    ]
    for group, tf, node_sets in layouts:
        for nodes in node_sets:
            topo = NetworkTopology(N_INPUTS, tuple((n, tf) for n in nodes), 1)
            trials.append(SweepTrial(len(trials) + 1, group, topo))
    return SweepPlan(tuple(trials))


@dataclass(frozen=True)
class TrialResult:
    trial_no: int
    group: str
    topology: NetworkTopology
    rms: float  # validation RMS, normalized target scale
    rms_pct: float  # validation RMS, overhead percent scale
    mean_abs_diff_pct: float  # mean |absolute difference| over the validation facts
    training: dict | None = None
    error: str | None = None
    network: Network | None = field(default=None, compare=False, repr=False)

    @property
    def ok(self) -> bool:
        return self.error is None


def _run_trial(trial: SweepTrial, dataset: EncodedDataset, split: DatasetSplit, config: TrainingConfig, base_seed: int) -> TrialResult:
    train_set = dataset.take(split.train_ids)
    val_X, val_y = dataset.take(split.validation_ids)
    net = init_network(trial.topology, base_seed + trial.trial_no)
    try:
        best, report = train(net, train_set, (val_X, val_y), config)
    except TrainingDiverged as exc:
        return TrialResult(trial.trial_no, trial.group, trial.topology, math.nan, math.nan, math.nan, error=str(exc))
    pred = [denormalize_target(v, dataset.norm).pct for v in forward_batch(best, val_X)]
    actual = [denormalize_target(v, dataset.norm).pct for v in val_y]
    mad = sum(abs(absolute_difference(a, p)) for a, p in zip(actual, pred)) / len(actual)
    return TrialResult(
        trial.trial_no, trial.group, trial.topology,
        rms=report.validation_rms,
        rms_pct=rms_metric(actual, pred),
        mean_abs_diff_pct=mad,
        training=report.summary(),
        network=best,
    )


def run_sweep(
    dataset: EncodedDataset,
    split: DatasetSplit,
    config: TrainingConfig = TrainingConfig(),
    base_seed: int = 0,
    plan: SweepPlan | None = None,
    jobs: int = 1,
) -> list[TrialResult]:
    """Train every trial of ``plan`` (the 58-trial sweep by default); results in trial order.

    Trial k is initialized with seed ``base_seed + k``. Diverged trials carry an
    error string instead of metrics.
    """
    plan = plan or build_reference_sweep()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_trial, t, dataset, split, config, base_seed) for t in plan]
            results = [f.result() for f in futures]
    else:
        results = [_run_trial(t, dataset, split, config, base_seed) for t in plan]
    return sorted(results, key=lambda r: r.trial_no)


def select_best(results: Iterable[TrialResult], metric: str = "rms") -> TrialResult:
    """Minimum-RMS trial; ties go to the lowest trial number."""
    candidates = [r for r in results if r.ok and not math.isnan(getattr(r, metric))]
    if not candidates:
        raise ValueError("no successful trials to select from")
    return min(candidates, key=lambda r: (getattr(r, metric), r.trial_no))


# -------------------------------------------------------------------- reports

CSV_COLUMNS = [
    "trial_no", "group", "input_nodes", "output_nodes", "hidden_layers",
    "nodes_layer1", "nodes_layer2", "transfer", "abs_diff_pct", "rms_pct", "rms_norm", "epochs", "status",
]


def _nodes(topo: NetworkTopology) -> tuple[int, int]:
    sizes = [n for n, _ in topo.hidden]
    return sizes[0], sizes[1] if len(sizes) > 1 else 0


def _num(v: float) -> str:
    return "" if v is None or math.isnan(v) else f"{v:.6f}"


def sweep_csv(results: Sequence[TrialResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        n1, n2 = _nodes(r.topology)
        w.writerow([
            r.trial_no, r.group, r.topology.input_nodes, r.topology.output_nodes, len(r.topology.hidden),
            n1, n2, r.topology.hidden[0][1].value,
            _num(r.mean_abs_diff_pct), _num(r.rms_pct), _num(r.rms),
            (r.training or {}).get("epochs_run", ""),
            "ok" if r.ok else "diverged",
        ])
    return buf.getvalue()


def parse_sweep_csv(text: str) -> list[TrialResult]:
    """Inverse of :func:`sweep_csv` (networks and training traces are not carried)."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        tf = Transfer(row["transfer"])
        nodes = [int(row["nodes_layer1"])] + ([int(row["nodes_layer2"])] if int(row["hidden_layers"]) == 2 else [])
        topo = NetworkTopology(int(row["input_nodes"]), tuple((n, tf) for n in nodes), int(row["output_nodes"]))
        f = lambda k: float(row[k]) if row.get(k) else math.nan  # noqa: E731
        training = {"epochs_run": int(row["epochs"])} if row.get("epochs") else None
        error = None if row["status"] == "ok" else row["status"]
        out.append(TrialResult(int(row["trial_no"]), row["group"], topo, f("rms_norm"), f("rms_pct"), f("abs_diff_pct"), training, error))
    return out


def sweep_text(results: Sequence[TrialResult]) -> str:
    header = (
        f"{'Model':>5} {'Input':>5} {'Output':>6} {'Hidden':>6} {'Nodes L1':>8} {'Nodes L2':>8} "
        f"{'Abs. diff %':>12} {'RMS (pct)':>10} {'RMS (norm)':>10}"
    )
    by_group: dict[str, list[TrialResult]] = {}
    for r in results:
        by_group.setdefault(r.group, []).append(r)
    blocks = []
    for group, rows in by_group.items():
        lines = [GROUP_TITLES.get(group, group), header, "-" * len(header)]
        for r in rows:
            n1, n2 = _nodes(r.topology)
            stats = (
                f"{r.mean_abs_diff_pct:>12.6f} {r.rms_pct:>10.6f} {r.rms:>10.6f}" if r.ok
                else f"{'diverged':>12} {'':>10} {'':>10}"
            )
            lines.append(
                f"{r.trial_no:>5} {r.topology.input_nodes:>5} {r.topology.output_nodes:>6} "
                f"{len(r.topology.hidden):>6} {n1:>8} {n2:>8} {stats}"
            )
        blocks.append("\n".join(lines))
    text = "\n\n".join(blocks) + "\n"
    try:
        text += "\n" + best_line(select_best(results)) + "\n"
    except ValueError:
        text += "\nno successful trials\n"
    return text


def render_sweep_report(results: Sequence[TrialResult], fmt: str = "txt") -> str:
    if not results:
        raise ValueError("no results to render")
    if fmt == "csv":
        return sweep_csv(results)
    if fmt == "txt":
        return sweep_text(results)
    if fmt == "json":
        return json.dumps([result_json(r) for r in results], indent=2) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def result_json(r: TrialResult) -> dict:
    clean = lambda v: None if v is None or math.isnan(v) else v  # noqa: E731
    return {
        "trial_no": r.trial_no,
        "group": r.group,
        "topology": str(r.topology),
        "rms": clean(r.rms),
        "rms_pct": clean(r.rms_pct),
        "mean_abs_diff_pct": clean(r.mean_abs_diff_pct),
        "training": r.training,
        "error": r.error,
    }


def best_line(r: TrialResult) -> str:
    """Best trial summary: model, inputs, hidden layers, nodes per layer, rule, transfer, outputs, RMS."""
    nodes = "/".join(str(n) for n, _ in r.topology.hidden)
    return (
        f"best trial {r.trial_no}: inputs={r.topology.input_nodes} hidden_layers={len(r.topology.hidden)} "
        f"nodes={nodes} rule=backpropagation transfer={r.topology.hidden[0][1].value} "
        f"outputs={r.topology.output_nodes} rms={r.rms:.6f} rms_pct={r.rms_pct:.6f} "
        f"mean_abs_diff_pct={r.mean_abs_diff_pct:.6f}"
    )
