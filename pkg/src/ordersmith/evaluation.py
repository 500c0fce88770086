"""Accuracy, Expected Calibration Error, and run aggregation.

ECE partitions [0, 1] into equal-width right-closed bins, with confidence 0
assigned to the first bin, and averages each bin's |accuracy - confidence|
gap weighted by occupancy. Aggregation reports mean and population standard
deviation of per-run accuracies in percent, rendered table-style as
"65.8_{7.2}".
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadConfidenceError, EmptyInputError, EmptyRunError
from .optimize import Criterion
from .prompts import Ordering
from .scoring import Prediction


@dataclass(frozen=True)
class RunResult:
    """Predictions of one (ordering, seed) evaluation run, with gold labels."""

    predictions: tuple[tuple[Prediction, str], ...]
    ordering: Ordering
    seed: int
    criterion: Criterion
    scoring: str  # "direct" | "pmi"
    criterion_score: float = 0.0

    def __post_init__(self) -> None:
        if len(self.predictions) == 0:
            raise EmptyRunError("a run needs at least one prediction")


def accuracy(run: RunResult) -> float:
    """Fraction of predictions matching gold."""
    hits = sum(pred.label_id == gold for pred, gold in run.predictions)
    return hits / len(run.predictions)


def bin_index(confidence: float, n_bins: int) -> int:
    """0-based right-closed equal-width bin; confidence 0 lands in bin 0."""
    boundaries = np.arange(n_bins + 1) / n_bins
    idx = int(np.digitize(confidence, boundaries, right=True))
    return min(max(idx, 1), n_bins) - 1


def ece(run: RunResult, n_bins: int = 100) -> float:
    """Expected Calibration Error over right-closed equal-width bins."""
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    confs = np.array([pred.confidence for pred, _ in run.predictions])
    if np.any(confs < 0) or np.any(confs > 1):
        raise BadConfidenceError(f"confidence outside [0, 1]: {confs}")
    correct = np.array(
        [float(pred.label_id == gold) for pred, gold in run.predictions]
    )
    boundaries = np.arange(n_bins + 1) / n_bins
    idx = np.clip(np.digitize(confs, boundaries, right=True), 1, n_bins) - 1
    n = len(confs)
    total = 0.0
    for b in range(n_bins):
        in_bin = idx == b
        count = int(in_bin.sum())
        if count == 0:
            continue
        gap = abs(float(correct[in_bin].mean()) - float(confs[in_bin].mean()))
        total += (count / n) * gap
    return total


@dataclass(frozen=True)
class EvalReport:
    """Mean/std accuracy and mean ECE over a set of runs, in percent."""

    accuracy_mean: float
    accuracy_std: float
    ece_mean: float
    n_runs: int
    runs: tuple[RunResult, ...]

    def accuracy_cell(self) -> str:
        return format_cell(self.accuracy_mean, self.accuracy_std)


def format_cell(mean_pct: float, std_pct: float) -> str:
    """Render a mean/std pair the way the accuracy tables print them."""
    return f"{mean_pct:.1f}_{{{std_pct:.1f}}}"


def aggregate(runs: Sequence[RunResult], n_bins: int = 100) -> EvalReport:
    """Mean and population std of run accuracies (%), plus mean ECE (%)."""
    if len(runs) == 0:
        raise EmptyInputError("no runs to aggregate")
    accs = np.array([accuracy(r) for r in runs])
    eces = np.array([ece(r, n_bins) for r in runs])
    return EvalReport(
        accuracy_mean=float(accs.mean()) * 100.0,
        accuracy_std=float(accs.std()) * 100.0,  # ddof=0: population std
        ece_mean=float(eces.mean()) * 100.0,
        n_runs=len(runs),
        runs=tuple(runs),
    )


@dataclass(frozen=True)
class ReportRow:
    """One dataset x method cell of a results table."""

    dataset: str
    method: str
    report: EvalReport


def render_csv(rows: Sequence[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["dataset", "method", "accuracy_mean", "accuracy_std", "ece_mean", "n_runs"]
    )
    for row in rows:
        r = row.report
        writer.writerow(
            [
                row.dataset,
                row.method,
                f"{r.accuracy_mean:.4f}",
                f"{r.accuracy_std:.4f}",
                f"{r.ece_mean:.4f}",
                r.n_runs,
            ]
        )
    return buf.getvalue()


def render_markdown(rows: Sequence[ReportRow]) -> str:
    lines = [
        "| Dataset | Method | Accuracy (%) | ECE (%) | Runs |",
        "|---|---|---|---|---|",
    ]
    for row in rows:
        r = row.report
        lines.append(
            f"| {row.dataset} | {row.method} | {r.accuracy_cell()} "
            f"| {r.ece_mean:.1f} | {r.n_runs} |"
        )
    return "\n".join(lines) + "\n"
