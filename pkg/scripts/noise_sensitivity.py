"""Best validation RMS as the ground-truth noise grows (reduced sweep plan by default)."""

import argparse

import numpy as np

from sitecost.data import default_schema, encode, split
from sitecost.search import SweepPlan, build_reference_sweep, run_sweep, select_best
from sitecost.synth import GroundTruthSpec, generate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--noise", type=float, nargs="+", default=[0.0, 0.25, 0.5, 1.0, 2.0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--full", action="store_true", help="use all 58 trials")
    args = ap.parse_args()

    schema = default_schema()
    plan = build_reference_sweep()
    if not args.full:
        plan = SweepPlan(plan.trials[8:13])
    print("noise_sd\tmean_best_rms_pct\tsd")
    for sd in args.noise:
        scores = []
        for s in range(args.seeds):
            enc = encode(generate(52, s, GroundTruthSpec(noise_sd=sd), schema).records, schema)
            best = select_best(run_sweep(enc, split(enc, s), plan=plan))
            scores.append(best.rms_pct)
        print(f"{sd}\t{np.mean(scores):.4f}\t{np.std(scores):.4f}", flush=True)


if __name__ == "__main__":
    main()
