"""How often does the holdout reach a given accuracy across data/split seeds?

Each seed s generates a dataset with seed s and splits it with seed s; the
sweep uses base seed 0. Prints one row per seed and the pass rate.
"""

import argparse

from sitecost.data import default_schema, denormalize_target, encode, split
from sitecost.metrics import evaluate
from sitecost.network import forward_batch
from sitecost.search import run_sweep, select_best
from sitecost.synth import generate


def holdout(seed: int, base_seed: int, schema):
    enc = encode(generate(52, seed, schema=schema).records, schema)
    parts = split(enc, seed)
    best = select_best(run_sweep(enc, parts, base_seed=base_seed))
    X, y = enc.take(parts.test_ids)
    pred = [denormalize_target(v, enc.norm).pct for v in forward_batch(best.network, X)]
    actual = [denormalize_target(v, enc.norm).pct for v in y]
    return best, evaluate(actual, pred, best.mean_abs_diff_pct)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=40)
    ap.add_argument("--base-seed", type=int, default=0)
    ap.add_argument("--min-accuracy", type=float, default=0.8)
    args = ap.parse_args()

    schema = default_schema()
    passed = 0
    print("seed\tbest\tval_rms\tthreshold\taccuracy")
    for s in range(1, args.seeds + 1):
        best, summary = holdout(s, args.base_seed, schema)
        passed += summary.accuracy >= args.min_accuracy
        print(f"{s}\t{best.trial_no}\t{best.rms:.4f}\t{best.mean_abs_diff_pct:.4f}\t{summary.accuracy:.2f}", flush=True)
    print(f"accuracy >= {args.min_accuracy}: {passed}/{args.seeds}")


if __name__ == "__main__":
    main()
