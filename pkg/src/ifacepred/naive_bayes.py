"""Naive Bayes interface classifier over fixed-size residue windows.

Each window position contributes an independent class-conditional symbol
distribution; a residue is called interface when the posterior odds reach
the threshold ``theta`` (inclusive).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import serialization
from .evaluation import mcc_from_counts
from .sequence import ALPHABET_ORDER, ALPHABET_SIZE, Dataset, ProteinChain, Window, dataset_windows, window_matrix

log = logging.getLogger(__name__)

NEG, POS = 0, 1


@dataclass(frozen=True, eq=False)
class NbModel:
    """Trained tables.

    ``prior[c]`` is P(C=c) and ``tables[c, i, a]`` is P(X_i = a | C = c) with
    c = 0 for non-interface and 1 for interface, i running over window
    offsets -n..n.
    """

    window_size: int
    prior: np.ndarray
    tables: np.ndarray
    theta: float = 1.0
    smoothing_alpha: float = 1.0

    def __post_init__(self):
        prior = np.asarray(self.prior, dtype=float)
        tables = np.asarray(self.tables, dtype=float)
        if self.window_size % 2 == 0 or self.window_size < 1:
            raise ValueError(f"window size must be odd, got {self.window_size}")
        if prior.shape != (2,) or not np.all(prior > 0) or abs(prior.sum() - 1) > 1e-9:
            raise ValueError("class prior must be two positive probabilities summing to 1")
        if tables.ndim != 3 or tables.shape[:2] != (2, self.window_size):
            raise ValueError(f"tables must have shape (2, {self.window_size}, alphabet)")
        if not np.all(tables > 0) or np.abs(tables.sum(axis=2) - 1).max() > 1e-9:
            raise ValueError("every conditional table must be strictly positive and sum to 1")
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "tables", tables)
        # per-offset log-likelihood ratio, cached for scoring
        object.__setattr__(self, "_llr", np.log(tables[POS]) - np.log(tables[NEG]))
        object.__setattr__(self, "_prior_llr", math.log(prior[POS]) - math.log(prior[NEG]))

    @property
    def alphabet_size(self) -> int:
        return self.tables.shape[2]

    def with_theta(self, theta: float) -> "NbModel":
        return NbModel(self.window_size, self.prior, self.tables, theta, self.smoothing_alpha)

    def to_json(self) -> str:
        payload = {
            "window_size": self.window_size,
            "alphabet_order": ALPHABET_ORDER if self.alphabet_size == ALPHABET_SIZE
            else list(range(self.alphabet_size)),
            "prior": self.prior.tolist(),
            "tables": self.tables.tolist(),
            "theta": float(self.theta),
            "smoothing_alpha": float(self.smoothing_alpha),
        }
        return serialization.dumps("naive_bayes", payload)

    @classmethod
    def from_json(cls, text: str) -> "NbModel":
        doc = serialization.loads(text, "naive_bayes")
        return cls(doc["window_size"], np.array(doc["prior"]), np.array(doc["tables"]),
                   doc["theta"], doc["smoothing_alpha"])


def nb_train(d: Dataset, w: int = 25, alpha: float = 1.0) -> NbModel:
    """Estimate class priors and add-``alpha`` smoothed per-offset tables.

    Every residue is one training example, including those whose window
    overhangs a terminus (the overhang is the PAD symbol).
    """
    if alpha <= 0:
        log.warning("smoothing alpha %r would allow zero probabilities; using 1", alpha)
        alpha = 1.0
    X, y = dataset_windows(d, w)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == len(y):
        raise ValueError("training data must contain both interface and non-interface residues")
    counts = np.zeros((2, w, ALPHABET_SIZE), dtype=np.int64)
    offsets = np.broadcast_to(np.arange(w), X.shape)
    np.add.at(counts, (np.broadcast_to(y.astype(np.int64)[:, None], X.shape), offsets, X), 1)
    class_totals = np.array([len(y) - n_pos, n_pos], dtype=float)
    prior = class_totals / len(y)
    tables = (counts + alpha) / (class_totals[:, None, None] + alpha * ALPHABET_SIZE)
    return NbModel(w, prior, tables, 1.0, alpha)


def _symbols(x):
    return x.symbols if isinstance(x, Window) else np.asarray(x)


def nb_score(m: NbModel, x) -> float:
    """Log posterior odds of the interface class for one window."""
    symbols = _symbols(x)
    if len(symbols) != m.window_size:
        raise ValueError(f"window of size {len(symbols)} given to a size-{m.window_size} model")
    return float(m._prior_llr + m._llr[np.arange(m.window_size), symbols].sum())


def nb_scores(m: NbModel, windows: np.ndarray) -> np.ndarray:
    """Vectorised :func:`nb_score` over an ``(N, w)`` code matrix."""
    windows = np.asarray(windows)
    if windows.ndim != 2 or windows.shape[1] != m.window_size:
        raise ValueError(f"expected windows of size {m.window_size}")
    return m._prior_llr + m._llr[np.arange(m.window_size), windows].sum(axis=1)


def chain_scores(m: NbModel, chain: ProteinChain) -> np.ndarray:
    return nb_scores(m, window_matrix(chain, m.window_size))


def nb_classify(m: NbModel, x) -> bool:
    return nb_score(m, x) >= math.log(m.theta)


def nb_predict(m: NbModel, chain: ProteinChain, theta: float = None) -> np.ndarray:
    theta = m.theta if theta is None else theta
    return chain_scores(m, chain) >= math.log(theta)


def best_threshold(scores: np.ndarray, labels: np.ndarray) -> float:
    """Log-scale cut maximising MCC of ``score >= cut``.

    Candidates are midpoints between consecutive distinct scores plus one
    guard below the minimum (all positive) and one above the maximum (all
    negative). Ties go to the larger cut.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    distinct = np.unique(scores)
    cuts = np.concatenate(([distinct[0] - 1.0], (distinct[:-1] + distinct[1:]) / 2, [distinct[-1] + 1.0]))
    # predicted positives at cut k are scores >= cuts[k]
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    cum_pos = np.concatenate(([0], np.cumsum(labels[order])))
    n_pred = len(scores) - np.searchsorted(sorted_scores[::-1], cuts, side="left")
    P = int(labels.sum())
    N = len(labels) - P
    tp = cum_pos[n_pred]
    fp = n_pred - tp
    fn = P - tp
    tn = N - fp
    mcc = np.array([mcc_from_counts(*c) for c in zip(tp, fp, tn, fn)])
    best = np.flatnonzero(mcc == mcc.max())[-1]
    return float(cuts[best])


def nb_tune_theta(m: NbModel, d: Dataset) -> float:
    """Threshold maximising training-set MCC, on the ratio scale."""
    scores = np.concatenate([chain_scores(m, c) for c in d.chains])
    labels = np.concatenate([c.labels for c in d.chains])
    return math.exp(best_threshold(scores, labels))


def nb_trainer(w: int = 25, alpha: float = 1.0, tune: bool = True):
    """Training procedure for cross-validation: fit, tune theta on the same fold."""

    def train(d: Dataset):
        model = nb_train(d, w, alpha)
        if tune:
            model = model.with_theta(nb_tune_theta(model, d))
        return lambda chain: nb_predict(model, chain)

    return train
