"""Confusion-matrix metrics and leave-one-protein-out cross-validation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)


@dataclass(frozen=True)
class MetricsReport:
    """Reported measures. ``specificity`` here is tp / (tp + fp)."""

    accuracy: float
    specificity: float
    sensitivity: float
    correlation_coefficient: float
    counts: ConfusionCounts
    degenerate: bool = False

    @property
    def mcc(self) -> float:
        return self.correlation_coefficient


def mcc_from_counts(tp, fp, tn, fn) -> float:
    """Matthews correlation; 0 when any marginal is empty."""
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def confusion(predicted, actual) -> ConfusionCounts:
    predicted = np.asarray(predicted, dtype=bool)
    actual = np.asarray(actual, dtype=bool)
    if predicted.shape != actual.shape:
        raise ValueError(f"length mismatch: {predicted.size} predictions, {actual.size} labels")
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    tn = int(predicted.size - tp - fp - fn)
    return ConfusionCounts(tp, fp, tn, fn)


def metrics(c: ConfusionCounts) -> MetricsReport:
    if c.total <= 0:
        raise ValueError("cannot compute metrics on an empty confusion matrix")
    predicted_pos = c.tp + c.fp
    actual_pos = c.tp + c.fn
    degenerate = predicted_pos == 0 or actual_pos == 0
    return MetricsReport(
        accuracy=(c.tp + c.tn) / c.total,
        specificity=c.tp / predicted_pos if predicted_pos else 0.0,
        sensitivity=c.tp / actual_pos if actual_pos else 0.0,
        correlation_coefficient=mcc_from_counts(c.tp, c.fp, c.tn, c.fn),
        counts=c,
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class FoldResult:
    chain_id: str
    predicted: np.ndarray
    counts: ConfusionCounts

    @property
    def report(self) -> MetricsReport:
        return metrics(self.counts)


@dataclass(frozen=True)
class LoocvResult:
    aggregate: MetricsReport
    folds: tuple


class FoldError(RuntimeError):
    def __init__(self, chain_id, cause):
        self.chain_id = chain_id
        super().__init__(f"fold holding out {chain_id!r} failed: {cause}")


def loocv(d, trainer: Callable, on_fold: Optional[Callable] = None, workers: int = 1) -> LoocvResult:
    """Hold out each chain in turn, train on the rest, predict the held-out chain.

    ``trainer(training_dataset)`` must return ``predict(chain) -> bool array``;
    any threshold tuning belongs inside the trainer so that it only sees the
    training fold. ``on_fold(held_out_id, training_dataset)`` is called before
    each fold is trained.
    """
    if len(d.chains) < 2:
        raise ValueError("leave-one-out needs at least two chains")

    def run(index):
        held = d.chains[index]
        train_set = d.without(index)
        if on_fold is not None:
            on_fold(held.id, train_set)
        try:
            predict = trainer(train_set)
            predicted = np.asarray(predict(held.with_labels(None)), dtype=bool)
        except Exception as exc:
            raise FoldError(held.id, exc) from exc
        return FoldResult(held.id, predicted, confusion(predicted, held.labels))

    indices = range(len(d.chains))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            folds = tuple(pool.map(run, indices))
    else:
        folds = tuple(run(i) for i in indices)
    total = ConfusionCounts()
    for fold in folds:
        total = total + fold.counts
    return LoocvResult(metrics(total), folds)


REPORT_COLUMNS = ("chain_id", "tp", "fp", "tn", "fn", "accuracy", "specificity", "sensitivity", "mcc")


def _row(name, report: MetricsReport):
    c = report.counts
    return [name, c.tp, c.fp, c.tn, c.fn, f"{report.accuracy:.4f}", f"{report.specificity:.4f}",
            f"{report.sensitivity:.4f}", f"{report.correlation_coefficient:.4f}"]


def format_report(result: LoocvResult) -> str:
    rows = [list(REPORT_COLUMNS)]
    rows += [_row(f.chain_id, f.report) for f in result.folds]
    rows.append(_row("AGGREGATE", result.aggregate))
    return "".join("\t".join(map(str, r)) + "\n" for r in rows)
