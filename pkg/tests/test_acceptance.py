"""Exit criteria. Each test prints one PASS/FAIL line (also echoed in the terminal summary)."""

import math
import time

import numpy as np
import pytest

from conftest import FIXTURES, REFERENCE
from sitecost.cli import main
from sitecost.data import denormalize_target, encode, split
from sitecost.metrics import Verdict, absolute_difference, evaluate, rms, tolerance_correct
from sitecost.network import NetworkTopology, Transfer, finite_difference_gradient, forward_batch, gradient, init_network
from sitecost.search import build_reference_sweep, parse_sweep_csv, run_sweep, select_best
from sitecost.synth import generate

LINES: list[str] = []

ACTUAL = [8.13, 9.51, 10.86, 10.84, 11.43]
PREDICTED = [8.32294, 9.07061, 10.59704, 11.11394, 11.3421]
THRESHOLD = 2.476118


def record(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} | {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def best_time(fn, repeat=20) -> float:
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def test_c1_absolute_difference_rows():
    printed = {0: -2.373185732, 1: 4.620294427, 2: 2.421362799, 4: 0.769028871}
    values = [absolute_difference(a, p) for a, p in zip(ACTUAL, PREDICTED)]
    errs = {i: abs(values[i] - v) for i, v in printed.items()}
    row4 = abs(values[3] - (-2.527122))
    elapsed = best_time(lambda: [absolute_difference(a, p) for a, p in zip(ACTUAL, PREDICTED)])
    ok = max(errs.values()) < 1e-5 and row4 < 1e-5 and elapsed < 1e-3
    record(1, "signed absolute difference on published rows", ok,
           f"max err rows 1,2,3,5 = {max(errs.values()):.2e}; row 4 = {values[3]:.6f}; "
           f"{elapsed * 1e6:.1f} us")


def test_c2_published_classification():
    summary = evaluate(ACTUAL, PREDICTED, THRESHOLD)
    elapsed = best_time(lambda: evaluate(ACTUAL, PREDICTED, THRESHOLD))
    wrong = [i + 1 for i, p in enumerate(summary.pairs) if p.verdict is Verdict.WRONG]
    ok = summary.correct_count == 4 and wrong == [2] and summary.accuracy == 0.8 and elapsed < 1e-3
    record(2, "4 Correct / 1 Wrong (row 2) at threshold 2.476118", ok,
           f"correct={summary.correct_count} wrong rows={wrong} accuracy={summary.accuracy:.0%}; "
           f"{elapsed * 1e6:.1f} us")


def test_c3_sweep_plan_and_published_selection():
    one = [3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 20]
    two = [(2, 1), (2, 2), (3, 1), (3, 2), (3, 3), (4, 1), (4, 2), (4, 3), (4, 4), (5, 3), (5, 4), (5, 5), (6, 4), (6, 5), (6, 6)]
    expected = ([((n,), Transfer.SIGMOID) for n in one] + [((n,), Transfer.TANGENT) for n in one]
                + [(p, Transfer.SIGMOID) for p in two] + [(p, Transfer.TANGENT) for p in two])
    text = (FIXTURES / "published_sweep.csv").read_text()

    def run():
        plan = build_reference_sweep()
        rows_ok = len(plan) == 58 and all(
            t.trial_no == i + 1 and t.topology.input_nodes == 10 and t.topology.output_nodes == 1
            and t.topology.hidden == tuple((n, tf) for n in nodes)
            for i, (t, (nodes, tf)) in enumerate(zip(plan, expected))
        )
        sizes = [len(v) for v in plan.groups().values()]
        return rows_ok, sizes, select_best(parse_sweep_csv(text), metric="rms_pct")

    rows_ok, sizes, best = run()
    elapsed = best_time(run, repeat=5)
    ok = rows_ok and sizes == [14, 14, 15, 15] and best.trial_no == 11 and elapsed < 10e-3
    record(3, "58-trial plan and published-RMS replay", ok,
           f"rows match={rows_ok} groups={sizes} selected trial {best.trial_no} (RMS {best.rms_pct}); "
           f"{elapsed * 1e3:.2f} ms")


def test_c4_gradient_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    kinds = set()
    for k in range(100):
        rng = np.random.default_rng(10_000 + k)
        tf = (Transfer.SIGMOID, Transfer.TANGENT)[k % 2]
        layers = 1 + (k // 2) % 2
        topo = NetworkTopology(10, tuple((int(rng.integers(1, 16)), tf) for _ in range(layers)), 1)
        kinds.add((tf, layers))
        net = init_network(topo, int(rng.integers(2**31)))
        x, target = rng.random(10), float(rng.uniform(0.1, 0.9))
        a = gradient(net, x, target).flat()
        n = finite_difference_gradient(net, x, target, h=1e-6)
        rel = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
        worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-5 and len(kinds) == 4 and elapsed < 30
    record(4, "analytic vs central-difference gradients, 100 cases", ok,
           f"max relative error {worst:.2e} over {len(kinds)} (transfer, depth) kinds; {elapsed:.1f} s")


def test_c5_end_to_end_synthetic(schema):
    t0 = time.perf_counter()
    ds = generate(52, REFERENCE["data_seed"], schema=schema)
    enc = encode(ds.records, schema)
    parts = split(enc, REFERENCE["split_seed"])
    sizes = (len(parts.test_ids), len(parts.train_ids), len(parts.validation_ids))
    results = run_sweep(enc, parts, base_seed=REFERENCE["base_seed"])
    best = select_best(results)
    X, y = enc.take(parts.test_ids)
    pred = [denormalize_target(v, enc.norm).pct for v in forward_batch(best.network, X)]
    actual = [denormalize_target(v, enc.norm).pct for v in y]
    summary = evaluate(actual, pred, best.mean_abs_diff_pct, parts.test_ids)
    elapsed = time.perf_counter() - t0
    diffs = ", ".join(f"{p.signed_diff_pct:+.2f}" for p in summary.pairs)
    ok = sizes == (5, 34, 13) and summary.accuracy >= 0.8 and best.rms < 0.05 and elapsed < 300
    record(5, "synthetic 52-project protocol", ok,
           f"split={sizes} best trial {best.trial_no} ({best.topology}) validation rms={best.rms:.4f} (<0.05: "
           f"{best.rms < 0.05}); holdout accuracy {summary.accuracy:.0%} at threshold "
           f"{best.mean_abs_diff_pct:.4f}% with diffs [{diffs}]; {elapsed:.1f} s")


def test_c6_determinism(tmp_path):
    t0 = time.perf_counter()
    data = tmp_path / "syn"
    assert main(["synth", "--n", "52", "--seed", str(REFERENCE["data_seed"]), "--out", str(data)]) == 0
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = main(["sweep", "--data", str(data / "projects.csv"), "--out", str(out),
                   "--seed-split", str(REFERENCE["split_seed"]), "--seed-train", str(REFERENCE["base_seed"])])
        assert rc == 0
        runs.append(out)
    files = ["sweep_report.csv", "sweep_report.txt", "best_model.json", "best_trial.json", "holdout.csv"]
    same = {f: (runs[0] / f).read_bytes() == (runs[1] / f).read_bytes() for f in files}
    elapsed = time.perf_counter() - t0
    record(6, "repeat run is byte-identical", all(same.values()),
           f"{sum(same.values())}/{len(files)} files identical; {elapsed:.1f} s for two sweeps")


def test_c7_rms_oracle():
    rng = np.random.default_rng(0)
    vectors = [rng.normal(size=int(rng.integers(1, 50))) for _ in range(100)]
    hand = rms([1, 2], [1, 3])
    zero = all(rms(v, v) == 0 for v in vectors)
    elapsed = best_time(lambda: rms([1, 2], [1, 3]))
    ok = abs(hand - math.sqrt(0.5)) < 1e-6 and abs(hand - 0.7071068) < 1e-6 and zero and elapsed < 1e-3
    record(7, "RMS hand fixture and zero identity", ok,
           f"rms([1,2],[1,3]) = {hand:.7f}; rms(x,x)=0 for 100 vectors: {zero}; {elapsed * 1e6:.1f} us")


def test_c8_tolerance_rule():
    cases = [(0.08, True), (0.0800001, False), (0.05, True), (0.09, False)]
    got = [tolerance_correct(0.1 + d, 0.1, 0.1, 0.8) for d, _ in cases]
    elapsed = best_time(lambda: tolerance_correct(0.18, 0.1, 0.1, 0.8))
    ok = got == [e for _, e in cases] and elapsed < 1e-3
    record(8, "inclusive 0.1 x range tolerance", ok,
           f"boundary fixtures {got}; {elapsed * 1e6:.2f} us")
