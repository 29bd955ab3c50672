"""Select the best trial from a recorded sweep CSV (default: the bundled reference results)."""

import argparse
from pathlib import Path

from sitecost.search import parse_sweep_csv, render_sweep_report, select_best

DEFAULT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "published_sweep.csv"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", type=Path, nargs="?", default=DEFAULT)
    ap.add_argument("--metric", default="rms_pct", choices=["rms", "rms_pct", "mean_abs_diff_pct"])
    args = ap.parse_args()
    results = parse_sweep_csv(args.csv.read_text())
    best = select_best(results, metric=args.metric)
    print(render_sweep_report(results, "csv"), end="")
    print(f"selected trial {best.trial_no} ({best.topology}) {args.metric}={getattr(best, args.metric)}")


if __name__ == "__main__":
    main()
