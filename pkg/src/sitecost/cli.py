"""Command-line interface: validate, synth, sweep, train, evaluate, predict.

Exit codes: 0 success, 1 domain failure (bad rows, no records, all trials
diverged, ...), 2 I/O or usage failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .data import (
    EncodingError, FactorSchema, RecordError, SchemaError, default_schema, encode, load_projects,
    load_schema, parse_rows, read_projects, split, write_projects,
)
from .metrics import evaluate, evaluation_csv, evaluation_json, evaluation_text
from .model import TrainedModel, load_model, save_model
from .network import NetworkTopology, TopologyError, TrainingConfig, TrainingDiverged, init_network, predict, train
from .search import best_line, render_sweep_report, result_json, run_sweep, select_best
from .synth import GroundTruthSpec, generate

DEFAULTS = {
    "schema": None,
    "data": None,
    "out": ".",
    "seed_split": 0,
    "seed_train": 0,
    "threshold": None,
    "format": "txt",
    "jobs": 1,
    "learning_rate": None,
    "momentum": None,
    "max_epochs": None,
    "patience": None,
    "full_batch": None,
}

TOPOLOGY_HELP = (
    "network topology I-H1[-H2]-O[:transfer], e.g. 10-13-1:sigmoid or 10-6-4-1:tangent; "
    "at most two hidden layers; transfer is sigmoid|tangent (one name, or a comma list per hidden layer); "
    "the output node is always sigmoid"
)


class UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    # SUPPRESS keeps subcommand defaults from clobbering values given before the subcommand
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="JSON file with option values; command-line flags win")
    g.add_argument("--schema", help="factor schema JSON (default: shipped ten-factor schema)")
    g.add_argument("--data", help="project CSV")
    g.add_argument("--out", help="output directory")
    g.add_argument("--seed-split", type=int, help="seed for the test/train/validation split")
    g.add_argument("--seed-train", type=int, help="base seed; trial k initializes with base + k")
    g.add_argument("--threshold", type=float, help="classification threshold in percent")
    g.add_argument("--format", choices=["csv", "txt", "json"], help="report format on stdout")
    g.add_argument("--jobs", type=int, help="parallel sweep workers")
    t = p.add_argument_group("training overrides")
    t.add_argument("--learning-rate", type=float)
    t.add_argument("--momentum", type=float)
    t.add_argument("--max-epochs", type=int)
    t.add_argument("--patience", type=int)
    t.add_argument("--full-batch", action="store_const", const=True)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="sitecost", description=__doc__.splitlines()[0], parents=[common], allow_abbrev=False
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub_kw = {"parents": [common], "allow_abbrev": False}

    sub.add_parser("validate", **sub_kw, help="check a project CSV against the schema")

    p = sub.add_parser("synth", **sub_kw, help="write a synthetic project CSV and ground_truth.json")
    p.add_argument("-n", "--n", type=int, default=52, help="number of projects")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--noise-sd", type=float, help="gaussian noise sd in overhead percent")
    p.add_argument("--spec", help="ground-truth spec JSON")

    sub.add_parser("sweep", **sub_kw, help="run the 58-trial architecture sweep")

    p = sub.add_parser("train", **sub_kw, help="train a single topology")
    p.add_argument("--topology", required=True, help=TOPOLOGY_HELP)

    p = sub.add_parser("evaluate", **sub_kw, help="actual vs predicted report with correct/wrong verdicts")
    p.add_argument("--model", help="model JSON")
    p.add_argument("--pairs", help="CSV with actual,predicted[,id] columns (no model needed)")

    p = sub.add_parser("predict", **sub_kw, help="predict overhead percentages")
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--set", action="append", default=[], metavar="FACTOR=VALUE", help="factor value for a single record")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items()})
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def training_config(cfg: dict) -> TrainingConfig:
    kw = {}
    for key, field in (("learning_rate", "initial_learning_rate"), ("momentum", "momentum"),
                       ("max_epochs", "max_epochs"), ("patience", "patience_epochs"), ("full_batch", "full_batch")):
        if cfg.get(key) is not None:
            kw[field] = cfg[key]
    return TrainingConfig(**kw)


def _schema(cfg: dict) -> FactorSchema:
    return load_schema(cfg["schema"]) if cfg.get("schema") else default_schema()


def _require(cfg: dict, key: str) -> str:
    if not cfg.get(key):
        raise UsageError(f"--{key} is required")
    path = cfg[key]
    if not Path(path).exists():
        raise FileNotFoundError(path)
    return path


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


# ------------------------------------------------------------------- commands


def cmd_validate(cfg: dict) -> int:
    schema = _schema(cfg)
    records, diags = read_projects(_require(cfg, "data"), schema)
    for d in diags:
        print(d)
    if diags:
        print(f"{len(records)} records OK, {len({d.line for d in diags})} rows invalid")
        return 1
    print(f"{len(records)} records OK")
    return 0


def cmd_synth(cfg: dict, n: int, seed: int, noise_sd: float | None, spec_path: str | None) -> int:
    spec = GroundTruthSpec()
    if spec_path:
        spec = GroundTruthSpec.from_json(json.loads(Path(spec_path).read_text(encoding="utf-8")))
    if noise_sd is not None:
        spec = GroundTruthSpec.from_json({**spec.to_json(), "noise_sd": noise_sd})
    ds = generate(n, seed, spec, _schema(cfg))
    out = _out_dir(cfg)
    ds.write(out / "projects.csv", out / "ground_truth.json")
    print(f"wrote {n} projects to {out / 'projects.csv'}")
    return 0


def _prepare(cfg: dict):
    schema = _schema(cfg)
    records = load_projects(_require(cfg, "data"), schema)
    dataset = encode(records, schema)
    parts = split(dataset, cfg["seed_split"])
    return schema, records, dataset, parts


def _write_holdout(out: Path, records, parts, schema) -> None:
    test = set(parts.test_ids)
    write_projects(out / "holdout.csv", [r for r in records if r.id in test], schema)
    _write(out / "split.json", json.dumps(parts.to_json(), indent=2) + "\n")


def cmd_sweep(cfg: dict) -> int:
    schema, records, dataset, parts = _prepare(cfg)
    config = training_config(cfg)
    results = run_sweep(dataset, parts, config, base_seed=cfg["seed_train"], jobs=cfg["jobs"])
    out = _out_dir(cfg)
    _write(out / "sweep_report.csv", render_sweep_report(results, "csv"))
    _write(out / "sweep_report.txt", render_sweep_report(results, "txt"))
    _write_holdout(out, records, parts, schema)
    try:
        best = select_best(results)
    except ValueError:
        print("all trials diverged", file=sys.stderr)
        return 1
    model = TrainedModel(
        model_id=f"trial_{best.trial_no}",
        network=best.network,
        norm=dataset.norm,
        schema=schema,
        seeds={"split": cfg["seed_split"], "train_base": cfg["seed_train"], "shuffle": config.shuffle_seed},
        training={**best.training, "config": config.to_json(), "trial_no": best.trial_no},
        threshold_pct=best.mean_abs_diff_pct,
    )
    save_model(model, out / "best_model.json")
    pointer = {**result_json(best), "model_file": "best_model.json", "seeds": model.seeds}
    _write(out / "best_trial.json", json.dumps(pointer, indent=2) + "\n")
    if cfg["format"] != "txt":
        print(render_sweep_report(results, cfg["format"]), end="")
    print(best_line(best))
    return 0


def cmd_train(cfg: dict, topology: str) -> int:
    topo = NetworkTopology.parse(topology)
    schema, records, dataset, parts = _prepare(cfg)
    if topo.input_nodes != len(schema.factors) or topo.output_nodes != 1:
        raise TopologyError(f"topology must have {len(schema.factors)} inputs and 1 output, got {topo}")
    config = training_config(cfg)
    net = init_network(topo, cfg["seed_train"])
    val = dataset.take(parts.validation_ids)
    best, report = train(net, dataset.take(parts.train_ids), val, config)
    by_id = {r.id: r for r in records}
    val_records = [by_id[i] for i in parts.validation_ids]
    preds = [predict(best, r, schema, dataset.norm) for r in val_records]
    # threshold argument is irrelevant here, only the aggregate errors are kept
    summary = evaluate([r.overhead_pct for r in val_records], preds, 1.0)
    model = TrainedModel(
        f"train_{topo}", best, dataset.norm, schema,
        seeds={"split": cfg["seed_split"], "shuffle": config.shuffle_seed},
        training={**report.summary(), "config": config.to_json()},
        threshold_pct=summary.mean_abs_diff_pct,
    )
    out = _out_dir(cfg)
    save_model(model, out / "model.json")
    full = {**report.summary(), "topology": str(topo), "validation_rms_pct": summary.rms,
            "validation_mean_abs_diff_pct": summary.mean_abs_diff_pct,
            "train_trace": list(report.train_trace), "validation_trace": list(report.validation_trace)}
    _write(out / "training_report.json", json.dumps(full, indent=2) + "\n")
    print(f"{topo}: hidden nodes {'/'.join(str(n) for n, _ in topo.hidden)}, epochs {report.epochs_run}, "
          f"validation rms {report.validation_rms:.6f}, mean abs diff {summary.mean_abs_diff_pct:.6f}%")
    return 0


def _read_pairs(path: str) -> tuple[list[float], list[float], list[str]]:
    actual, pred, ids = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for k, row in enumerate(csv.DictReader(fh), start=1):
            actual.append(float(row["actual"]))
            pred.append(float(row["predicted"]))
            ids.append(row.get("id") or str(k))
    return actual, pred, ids


def cmd_evaluate(cfg: dict, model_path: str | None, pairs_path: str | None) -> int:
    threshold = cfg["threshold"]
    if pairs_path:
        actual, pred, ids = _read_pairs(pairs_path)
    else:
        if not model_path:
            raise UsageError("evaluate needs --model (with --data) or --pairs")
        model = load_model(model_path)
        if cfg.get("schema") and load_schema(cfg["schema"]) != model.schema:
            raise SchemaError("schema does not match the one the model was trained with")
        records = load_projects(_require(cfg, "data"), model.schema)
        actual = [r.overhead_pct for r in records]
        pred = [model.predict(r) for r in records]
        ids = [r.id for r in records]
        if threshold is None:
            threshold = model.threshold_pct
    if not actual:
        print("no records", file=sys.stderr)
        return 1
    if threshold is None:
        raise UsageError("--threshold is required when the model carries none")
    summary = evaluate(actual, pred, threshold, ids)
    render = {"txt": evaluation_text, "csv": evaluation_csv, "json": evaluation_json}[cfg["format"]]
    print(render(summary), end="")
    if cfg["out"] != DEFAULTS["out"]:
        out = _out_dir(cfg)
        _write(out / "evaluation.csv", evaluation_csv(summary))
        _write(out / "evaluation.json", evaluation_json(summary))
    return 0


def cmd_predict(cfg: dict, model_path: str, assignments: list[str]) -> int:
    model = load_model(model_path)
    if assignments:
        row = {"id": "record"}
        for item in assignments:
            if "=" not in item:
                raise UsageError(f"--set expects FACTOR=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            row[k.strip()] = v.strip()
        records, diags = parse_rows([row], model.schema, require_target=False, first_line=1)
    else:
        records, diags = read_projects(_require(cfg, "data"), model.schema, require_target=False)
    if diags:
        for d in diags:
            print(d, file=sys.stderr)
        return 1
    if not records:
        print("no records", file=sys.stderr)
        return 1
    band = f"±{model.threshold_pct:.2f}%" if model.threshold_pct is not None else "n/a"
    for r in records:
        print(f"{r.id}\t{model.predict(r):.2f}\tmodel={model.model_id}\tthreshold={band}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "synth":
            if args.n < 1:
                parser.error("--n must be >= 1")
            return cmd_synth(cfg, args.n, args.seed, args.noise_sd, args.spec)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "train":
            return cmd_train(cfg, args.topology)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.model, args.pairs)
        if args.command == "predict":
            return cmd_predict(cfg, args.model, args.set)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RecordError, SchemaError, EncodingError, TopologyError, TrainingDiverged, ValueError, KeyError) as exc:
        if isinstance(exc, RecordError):
            for d in exc.diagnostics:
                print(d, file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
