"""Error metrics and the correct/wrong test classification."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class Verdict(enum.Enum):
    CORRECT = "Correct"
    WRONG = "Wrong"
    UNCLASSIFIED = "Unclassified"


def rms(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Root mean square error, sqrt(sum((O - P)^2) / n)."""
    a = np.asarray(actual, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if a.size != p.size:
        raise ValueError(f"length mismatch: {a.size} actual vs {p.size} predicted")
    if a.size == 0:
        raise ValueError("rms of an empty sample")
    return math.sqrt(float(np.mean((a - p) ** 2)))


def absolute_difference(actual: float, predicted: float) -> float:
    """Signed relative error in percent: (actual - predicted) / actual * 100.

    Negative means the model over-predicted. The name is historical; the sign
    is kept and magnitude is only taken when classifying.
    """
    if actual == 0:
        raise ValueError("absolute difference undefined for actual = 0")
    return (actual - predicted) / actual * 100.0


def classify_diff(signed_diff_pct: float, threshold_pct: float) -> Verdict:
    if not threshold_pct > 0:
        raise ValueError(f"threshold must be > 0, got {threshold_pct}")
    return Verdict.CORRECT if abs(signed_diff_pct) <= threshold_pct else Verdict.WRONG


@dataclass(frozen=True)
class PredictionPair:
    actual: float
    predicted: float
    signed_diff_pct: float
    verdict: Verdict = Verdict.UNCLASSIFIED
    id: str = ""

    @classmethod
    def of(cls, actual: float, predicted: float, id: str = "") -> "PredictionPair":
        return cls(actual, predicted, absolute_difference(actual, predicted), Verdict.UNCLASSIFIED, id)


def classify(pair: PredictionPair, threshold_pct: float) -> Verdict:
    return classify_diff(pair.signed_diff_pct, threshold_pct)


def tolerance_correct(predicted_norm: float, target_norm: float, tolerance: float, output_range: float) -> bool:
    """True when the output lies within ``tolerance`` x ``output_range`` of the target (inclusive)."""
    if not 0 < tolerance < 1 or not output_range > 0:
        raise ValueError("tolerance must be in (0,1) and output_range > 0")
    return bool(abs(predicted_norm - target_norm) <= tolerance * output_range)


@dataclass(frozen=True)
class EvaluationSummary:
    n: int
    rms: float
    mean_abs_diff_pct: float
    correct_count: int
    accuracy: float
    threshold_pct: float
    pairs: tuple[PredictionPair, ...]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "rms": self.rms,
            "mean_abs_diff_pct": self.mean_abs_diff_pct,
            "correct_count": self.correct_count,
            "wrong_count": self.n - self.correct_count,
            "accuracy": self.accuracy,
            "threshold_pct": self.threshold_pct,
        }


def evaluate(
    actuals: Sequence[float],
    predicteds: Sequence[float],
    threshold_pct: float,
    ids: Sequence[str] | None = None,
) -> EvaluationSummary:
    if len(actuals) != len(predicteds):
        raise ValueError(f"length mismatch: {len(actuals)} actual vs {len(predicteds)} predicted")
    if not actuals:
        raise ValueError("no records to evaluate")
    ids = list(ids) if ids is not None else [str(i + 1) for i in range(len(actuals))]
    pairs = []
    for rid, a, p in zip(ids, actuals, predicteds):
        d = absolute_difference(a, p)
        pairs.append(PredictionPair(float(a), float(p), d, classify_diff(d, threshold_pct), rid))
    n_ok = sum(p.verdict is Verdict.CORRECT for p in pairs)
    return EvaluationSummary(
        n=len(pairs),
        rms=rms(actuals, predicteds),
        mean_abs_diff_pct=sum(abs(p.signed_diff_pct) for p in pairs) / len(pairs),
        correct_count=n_ok,
        accuracy=n_ok / len(pairs),
        threshold_pct=threshold_pct,
        pairs=tuple(pairs),
    )


def signed_label(diff: float, digits: int = 6) -> str:
    """'(+) 4.620294' / '(-) 2.373186' as printed in result tables."""
    return f"({'-' if diff < 0 else '+'}) {abs(diff):.{digits}f}"


def evaluation_csv(summary: EvaluationSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["project", "actual_pct", "predicted_pct", "absolute_difference_pct", "verdict"])
    for p in summary.pairs:
        w.writerow([p.id, f"{p.actual:.6f}", f"{p.predicted:.6f}", f"{p.signed_diff_pct:.6f}", p.verdict.value])
    return buf.getvalue()


def evaluation_text(summary: EvaluationSummary) -> str:
    lines = [f"{'Project':<12}{'Actual %':>12}{'Predicted %':>14}{'Abs. diff %':>16}  Verdict"]
    for p in summary.pairs:
        lines.append(
            f"{p.id:<12}{p.actual:>12.6f}{p.predicted:>14.6f}{signed_label(p.signed_diff_pct):>16}  {p.verdict.value}"
        )
    lines.append(
        f"{summary.correct_count} of {summary.n} correct, accuracy {summary.accuracy:.0%} "
        f"(threshold ±{summary.threshold_pct:.6f}%, RMS {summary.rms:.6f}, mean |diff| {summary.mean_abs_diff_pct:.6f}%)"
    )
    return "\n".join(lines) + "\n"


def evaluation_json(summary: EvaluationSummary) -> str:
    return json.dumps(summary.to_json(), indent=2) + "\n"
