"""Second-stage smoothing of per-residue SVM calls.

Each residue is re-labelled from its own stage-1 call X and the number Y of
stage-1 positives among its sequence neighbours within ``radius``, using the
table P(C | X, Y) and a strict odds threshold ``theta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import serialization
from .evaluation import mcc_from_counts
from .sequence import Dataset, ProteinChain
from .svm import KernelSpec, SvmModel, TrainConfig, svm_predict, svm_train

# 0.01 .. 1.00 inclusive, built from integers so every grid point is exact
THETA_GRID = np.arange(1, 101) / 100.0


@dataclass(frozen=True, eq=False)
class CptModel:
    """``table[c, x, y]`` = P(C=c | X=x, Y=y)."""

    radius: int
    table: np.ndarray
    theta: float = 1.0
    smoothing_alpha: float = 1.0

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.shape != (2, 2, 2 * self.radius + 1):
            raise ValueError(f"CPT must have shape (2, 2, {2 * self.radius + 1})")
        if not np.all(table > 0) or np.abs(table.sum(axis=0) - 1).max() > 1e-9:
            raise ValueError("CPT columns must be strictly positive and sum to 1")
        object.__setattr__(self, "table", table)

    @property
    def odds(self) -> np.ndarray:
        """P(C=1|x,y) / P(C=0|x,y) indexed ``[x, y]``."""
        return self.table[1] / self.table[0]

    def with_theta(self, theta: float) -> "CptModel":
        return CptModel(self.radius, self.table, theta, self.smoothing_alpha)

    def to_json(self) -> str:
        return serialization.dumps("cpt", {
            "radius": self.radius,
            "table": self.table.tolist(),
            "theta": float(self.theta),
            "smoothing_alpha": float(self.smoothing_alpha),
        })

    @classmethod
    def from_json(cls, text: str) -> "CptModel":
        doc = serialization.loads(text, "cpt")
        return cls(doc["radius"], np.array(doc["table"]), doc["theta"], doc["smoothing_alpha"])


def neighbor_count(pred, i: int, r: int = 4) -> int:
    pred = np.asarray(pred, dtype=bool)
    if not 0 <= i < len(pred):
        raise IndexError(f"position {i} outside prediction of length {len(pred)}")
    lo, hi = max(0, i - r), min(len(pred), i + r + 1)
    return int(pred[lo:hi].sum() - pred[i])


def neighbor_counts(pred, r: int = 4) -> np.ndarray:
    """:func:`neighbor_count` for every position at once."""
    x = np.asarray(pred, dtype=np.int64)
    padded = np.concatenate([np.zeros(r, np.int64), x, np.zeros(r, np.int64)])
    return np.convolve(padded, np.ones(2 * r + 1, np.int64), mode="valid") - x


def _bucket_counts(stage1, labels, r):
    counts = np.zeros((2, 2, 2 * r + 1), dtype=np.int64)
    for pred, truth in zip(stage1, labels):
        pred = np.asarray(pred, dtype=bool)
        truth = np.asarray(truth, dtype=bool)
        np.add.at(counts, (truth.astype(int), pred.astype(int), neighbor_counts(pred, r)), 1)
    return counts


def fit_cpt(stage1, labels, r: int = 4, alpha: float = 1.0, chain_ids=None) -> CptModel:
    """Add-``alpha`` smoothed frequencies of C within each (X, Y) bucket.

    ``stage1`` and ``labels`` are parallel per-chain sequences of boolean arrays.
    """
    if not alpha > 0:
        raise ValueError("CPT smoothing alpha must be positive")
    stage1, labels = list(stage1), list(labels)
    if len(stage1) != len(labels):
        raise ValueError("one stage-1 prediction per labeled chain required")
    ids = chain_ids or [str(k) for k in range(len(labels))]
    for cid, pred, truth in zip(ids, stage1, labels):
        if len(pred) != len(truth):
            raise ValueError(f"chain {cid}: {len(pred)} stage-1 calls for {len(truth)} labels")
    counts = _bucket_counts(stage1, labels, r)
    table = (counts + alpha) / (counts.sum(axis=0) + 2 * alpha)
    return CptModel(r, table, 1.0, alpha)


def stage2_odds(m: CptModel, pred) -> np.ndarray:
    pred = np.asarray(pred, dtype=bool)
    return m.odds[pred.astype(int), neighbor_counts(pred, m.radius)]


def stage2_classify(m: CptModel, pred, theta: float = None) -> np.ndarray:
    theta = m.theta if theta is None else theta
    return stage2_odds(m, pred) > theta


def theta_scan(m: CptModel, stage1, labels) -> np.ndarray:
    """MCC at every grid threshold, as a ``(100, 2)`` array of (theta, mcc)."""
    odds = np.concatenate([stage2_odds(m, p) for p in stage1])
    truth = np.concatenate([np.asarray(t, dtype=bool) for t in labels])
    P = int(truth.sum())
    N = truth.size - P
    rows = []
    for theta in THETA_GRID:
        called = odds > theta
        tp = int(np.sum(called & truth))
        fp = int(np.sum(called)) - tp
        rows.append((theta, mcc_from_counts(tp, fp, N - fp, P - tp)))
    return np.array(rows)


def search_theta(m: CptModel, stage1, labels) -> float:
    """Grid threshold with the best MCC; ties go to the largest theta."""
    scan = theta_scan(m, stage1, labels)
    best = np.flatnonzero(scan[:, 1] == scan[:, 1].max())[-1]
    return float(scan[best, 0])


def two_stage_predict(svm: SvmModel, cpt: CptModel, chain: ProteinChain) -> np.ndarray:
    return stage2_classify(cpt, svm_predict(svm, chain))


@dataclass(frozen=True)
class TwoStageModel:
    svm: SvmModel
    cpt: CptModel

    def predict(self, chain: ProteinChain) -> np.ndarray:
        return two_stage_predict(self.svm, self.cpt, chain)


def train_two_stage(d: Dataset, cfg: TrainConfig = TrainConfig(), kernel: KernelSpec = KernelSpec(),
                    w: int = 9, r: int = 4, alpha: float = 1.0) -> TwoStageModel:
    """SVM on ``d``, CPT from its predictions on ``d``, theta tuned on ``d``."""
    svm = svm_train(d, cfg, kernel, w)
    stage1 = [svm_predict(svm, c) for c in d.chains]
    labels = [c.labels for c in d.chains]
    cpt = fit_cpt(stage1, labels, r, alpha, [c.id for c in d.chains])
    return TwoStageModel(svm, cpt.with_theta(search_theta(cpt, stage1, labels)))


def two_stage_trainer(cfg: TrainConfig = TrainConfig(), kernel: KernelSpec = KernelSpec(),
                      w: int = 9, r: int = 4, alpha: float = 1.0):
    def train(d: Dataset):
        return train_two_stage(d, cfg, kernel, w, r, alpha).predict
    return train


def svm_trainer(cfg: TrainConfig = TrainConfig(), kernel: KernelSpec = KernelSpec(), w: int = 9):
    """Stage 1 alone, for comparison against the smoothed classifier."""
    def train(d: Dataset):
        model = svm_train(d, cfg, kernel, w)
        return lambda chain: svm_predict(model, chain)
    return train
