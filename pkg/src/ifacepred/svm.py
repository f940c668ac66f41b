"""Binary SVM on one-hot window encodings, trained with SMO."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from . import serialization
from .sequence import ALPHABET_SIZE, Dataset, ProteinChain, Window, dataset_windows, window_matrix

LINEAR = "linear"
RBF = "rbf"
_KIND_CODE = {LINEAR: 0, RBF: 1}


@dataclass(frozen=True)
class KernelSpec:
    kind: str = LINEAR
    gamma: Optional[float] = None  # rbf only; None means 1 / feature_dim

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == RBF and self.gamma is not None and not self.gamma > 0:
            raise ValueError("rbf gamma must be positive")

    def resolved_gamma(self, feature_dim: int) -> float:
        if self.kind != RBF:
            return 0.0
        return self.gamma if self.gamma is not None else 1.0 / feature_dim


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    tolerance: float = 1e-3
    seed: int = 0  # shuffles example order and negative down-sampling
    negative_downsample: Optional[float] = None  # negatives kept per positive
    max_iter: Optional[int] = None

    def __post_init__(self):
        if not self.C > 0 or not self.tolerance > 0:
            raise ValueError("C and tolerance must be positive")


def encode_windows(windows: np.ndarray) -> np.ndarray:
    """One-hot encode an ``(N, w)`` code matrix to ``(N, 22 * w)`` floats."""
    windows = np.asarray(windows, dtype=np.int64)
    n, w = windows.shape
    out = np.zeros((n, w * ALPHABET_SIZE))
    out[np.arange(n)[:, None], np.arange(w) * ALPHABET_SIZE + windows] = 1.0
    return out


def encode_window(x) -> np.ndarray:
    symbols = x.symbols if isinstance(x, Window) else np.asarray(x)
    return encode_windows(symbols[None, :])[0]


# --- SMO core ---------------------------------------------------------------
#
# Pairs are chosen as the maximal KKT-violating pair over the gradient of the
# dual (Keerthi et al. / LIBSVM working-set rule); the two-variable
# subproblem is solved analytically. Stopping when the violation gap is below
# ``tol`` guarantees every example meets its KKT condition within ``tol``.


@numba.njit(cache=True)
def _column(X, sq, K, j, kind, gamma, out):
    n = X.shape[0]
    if K.shape[0] > 0:
        for k in range(n):
            out[k] = K[k, j]
        return
    for k in range(n):
        dot = 0.0
        for t in range(X.shape[1]):
            dot += X[k, t] * X[j, t]
        if kind == 0:
            out[k] = dot
        else:
            out[k] = math.exp(-gamma * max(sq[k] + sq[j] - 2.0 * dot, 0.0))


@numba.njit(cache=True)
def _snap(a, C):
    """Clip to [0, C], absorbing round-off next to either bound."""
    eps = 1e-12 * C
    if a <= eps:
        return 0.0
    if a >= C - eps:
        return C
    return a


@numba.njit(cache=True)
def _in_up(a, y, C):
    return (y > 0 and a < C) or (y < 0 and a > 0.0)


@numba.njit(cache=True)
def _in_low(a, y, C):
    return (y > 0 and a > 0.0) or (y < 0 and a < C)


@numba.njit(cache=True)
def _smo(X, y, K, C, tol, kind, gamma, debug, max_iter):
    n, d = X.shape
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a'Qa - e'a, Q_ij = y_i y_j K_ij
    sq = np.empty(n)
    for k in range(n):
        s = 0.0
        for t in range(d):
            s += X[k, t] * X[k, t]
        sq[k] = s
    Ki = np.empty(n)
    Kj = np.empty(n)
    deltas = [0.0]
    deltas.pop()
    it = 0
    m_up = 0.0
    m_low = 0.0
    while it < max_iter:
        i = -1
        j = -1
        m_up = -np.inf
        m_low = np.inf
        for t in range(n):
            v = -y[t] * grad[t]
            if _in_up(alpha[t], y[t], C) and v > m_up:
                m_up = v
                i = t
            if _in_low(alpha[t], y[t], C) and v < m_low:
                m_low = v
                j = t
        if i < 0 or j < 0 or m_up - m_low <= tol:
            break
        _column(X, sq, K, i, kind, gamma, Ki)
        _column(X, sq, K, j, kind, gamma, Kj)
        yi = y[i]
        yj = y[j]
        ai = alpha[i]
        aj = alpha[j]
        s = yi * yj
        if s < 0:
            L = max(0.0, aj - ai)
            H = min(C, C + aj - ai)
        else:
            L = max(0.0, ai + aj - C)
            H = min(C, ai + aj)
        # E_i - E_j expressed through the gradient
        diff = yi * grad[i] - yj * grad[j]
        eta = Ki[i] + Kj[j] - 2.0 * Ki[j]
        if eta > 1e-12:
            aj_new = aj + yj * diff / eta
        else:
            # flat direction: move to the end that increases the dual
            aj_new = H if yj * diff > 0 else L
        aj_new = _snap(min(max(aj_new, L), H), C)
        ai_new = _snap(ai + s * (aj - aj_new), C)
        dai = ai_new - ai
        daj = aj_new - aj
        if debug:
            gi = yi * (grad[i] + 1.0)
            gj = yj * (grad[j] + 1.0)
            deltas.append(dai + daj - dai * yi * gi - daj * yj * gj
                          - 0.5 * (dai * dai * Ki[i] + daj * daj * Kj[j] + 2.0 * dai * daj * s * Ki[j]))
        alpha[i] = ai_new
        alpha[j] = aj_new
        ci = yi * dai
        cj = yj * daj
        for k in range(n):
            grad[k] += y[k] * (ci * Ki[k] + cj * Kj[k])
        it += 1
    # bias from free examples, else midpoint of the feasible interval
    total = 0.0
    nfree = 0
    for t in range(n):
        if 0.0 < alpha[t] < C:
            total += -y[t] * grad[t]
            nfree += 1
    if nfree > 0:
        b = total / nfree
        b = min(max(b, m_low), m_up) if m_up >= m_low else b
    else:
        b = 0.5 * (m_up + m_low)
    return alpha, b, deltas, it


# kernel matrices up to this many examples are precomputed per training run
KERNEL_CACHE_LIMIT = 6000


@dataclass(frozen=True)
class SmoResult:
    alpha: np.ndarray
    b: float
    objective_deltas: list
    iterations: int


def smo_solve(X, y, C=1.0, tol=1e-3, kernel: KernelSpec = KernelSpec(), debug=False,
              max_iter=None) -> SmoResult:
    """Solve the soft-margin dual for feature rows ``X`` and labels ``y`` in {-1, +1}."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if set(np.unique(y)) != {-1.0, 1.0}:
        raise ValueError("SVM training needs examples of both classes")
    gamma = kernel.resolved_gamma(X.shape[1])
    if len(X) <= KERNEL_CACHE_LIMIT:
        K = np.ascontiguousarray(kernel_matrix(X, X, kernel, X.shape[1]))
    else:
        K = np.zeros((0, 0))
    if max_iter is None:
        max_iter = max(10_000_000, 100 * len(X))
    alpha, b, deltas, iterations = _smo(X, y, K, float(C), float(tol), _KIND_CODE[kernel.kind],
                                        float(gamma), bool(debug), int(max_iter))
    return SmoResult(alpha, float(b), list(deltas), int(iterations))


def kernel_matrix(A, B, kernel: KernelSpec, feature_dim: int) -> np.ndarray:
    dots = np.asarray(A, float) @ np.asarray(B, float).T
    if kernel.kind == LINEAR:
        return dots
    gamma = kernel.resolved_gamma(feature_dim)
    sa = (np.asarray(A) ** 2).sum(axis=1)
    sb = (np.asarray(B) ** 2).sum(axis=1)
    return np.exp(-gamma * np.maximum(sa[:, None] + sb[None, :] - 2 * dots, 0.0))


def dual_objective(alpha, X, y, kernel: KernelSpec = KernelSpec()) -> float:
    X = np.asarray(X, float)
    K = kernel_matrix(X, X, kernel, X.shape[1])
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


# --- model ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SvmModel:
    kernel: KernelSpec
    support_vectors: np.ndarray  # (n_sv, feature_dim)
    sv_labels: np.ndarray  # +-1
    dual_coef: np.ndarray  # alpha_k
    bias: float
    C: float = 1.0
    window_size: int = 9
    feature_dim: int = 9 * ALPHABET_SIZE
    meta: dict = field(default_factory=dict)

    @property
    def weights(self) -> np.ndarray:
        """Collapsed primal weights (linear kernel only)."""
        if self.kernel.kind != LINEAR:
            raise ValueError("collapsed weights exist only for the linear kernel")
        return (self.dual_coef * self.sv_labels) @ self.support_vectors

    def decision_features(self, F: np.ndarray) -> np.ndarray:
        F = np.atleast_2d(np.asarray(F, float))
        if F.shape[1] != self.feature_dim:
            raise ValueError(f"expected {self.feature_dim} features, got {F.shape[1]}")
        if len(self.dual_coef) == 0:
            return np.full(len(F), self.bias)
        K = kernel_matrix(self.support_vectors, F, self.kernel, self.feature_dim)
        return (self.dual_coef * self.sv_labels) @ K + self.bias

    def to_json(self) -> str:
        svs = []
        for row in self.support_vectors:
            nz = np.flatnonzero(row)
            svs.append({"indices": nz.tolist(), "values": row[nz].tolist()})
        payload = {
            "kernel": {"kind": self.kernel.kind, "gamma": self.kernel.gamma},
            "C": self.C,
            "window_size": self.window_size,
            "feature_dim": self.feature_dim,
            "support_vectors": svs,
            "alpha": self.dual_coef.tolist(),
            "y": self.sv_labels.tolist(),
            "b": self.bias,
            "meta": self.meta,
        }
        return serialization.dumps("svm", payload)

    @classmethod
    def from_json(cls, text: str) -> "SvmModel":
        doc = serialization.loads(text, "svm")
        dim = doc["feature_dim"]
        sv = np.zeros((len(doc["support_vectors"]), dim))
        for row, entry in zip(sv, doc["support_vectors"]):
            row[entry["indices"]] = entry["values"]
        return cls(KernelSpec(doc["kernel"]["kind"], doc["kernel"]["gamma"]), sv,
                   np.array(doc["y"], float), np.array(doc["alpha"], float), doc["b"],
                   doc["C"], doc["window_size"], dim, doc.get("meta", {}))


def train_features(F, y, cfg: TrainConfig = TrainConfig(), kernel: KernelSpec = KernelSpec(),
                   window_size: int = 0) -> SvmModel:
    """Train on an explicit feature matrix ``F`` with boolean or +-1 labels."""
    y = np.asarray(y)
    y = np.where(y, 1.0, -1.0) if y.dtype == bool else y.astype(float)
    F = np.asarray(F, float)
    perm = np.random.default_rng(cfg.seed).permutation(len(y))
    res = smo_solve(F[perm], y[perm], cfg.C, cfg.tolerance, kernel, max_iter=cfg.max_iter)
    alpha = np.empty_like(res.alpha)
    alpha[perm] = res.alpha
    sv = alpha > 0
    meta = {"seed": cfg.seed, "tolerance": cfg.tolerance,
            "negative_downsample": cfg.negative_downsample, "iterations": res.iterations}
    return SvmModel(kernel, F[sv], y[sv], alpha[sv], res.b, cfg.C, window_size, F.shape[1], meta)


def svm_train(d: Dataset, cfg: TrainConfig = TrainConfig(), kernel: KernelSpec = KernelSpec(),
              w: int = 9) -> SvmModel:
    windows, labels = dataset_windows(d, w)
    if labels.all() or not labels.any():
        raise ValueError("SVM training needs both interface and non-interface residues")
    if cfg.negative_downsample is not None:
        rng = np.random.default_rng(cfg.seed)
        pos = np.flatnonzero(labels)
        neg = np.flatnonzero(~labels)
        keep = min(len(neg), max(1, int(round(cfg.negative_downsample * len(pos)))))
        chosen = np.sort(rng.choice(neg, size=keep, replace=False))
        idx = np.sort(np.concatenate([pos, chosen]))
        windows, labels = windows[idx], labels[idx]
    return train_features(encode_windows(windows), labels, cfg, kernel, w)


def svm_decision(m: SvmModel, x) -> float:
    symbols = x.symbols if isinstance(x, Window) else np.asarray(x)
    if len(symbols) != m.window_size:
        raise ValueError(f"window of size {len(symbols)} given to a size-{m.window_size} model")
    return float(m.decision_features(encode_window(symbols)[None, :])[0])


def svm_chain_decisions(m: SvmModel, chain: ProteinChain) -> np.ndarray:
    return m.decision_features(encode_windows(window_matrix(chain, m.window_size)))


def svm_predict(m: SvmModel, chain: ProteinChain) -> np.ndarray:
    """Stage-1 calls: positive iff the decision value is strictly above zero."""
    return svm_chain_decisions(m, chain) > 0


def kkt_violations(m_alpha, F, y, b, C, kernel: KernelSpec = KernelSpec()) -> np.ndarray:
    """Per-example KKT violation magnitude for a dual solution."""
    F = np.asarray(F, float)
    K = kernel_matrix(F, F, kernel, F.shape[1])
    f = (m_alpha * y) @ K + b
    yf = y * f
    viol = np.zeros(len(y))
    at_zero = m_alpha <= 0
    at_c = m_alpha >= C
    free = ~at_zero & ~at_c
    viol[at_zero] = np.maximum(0, 1 - yf[at_zero])
    viol[at_c] = np.maximum(0, yf[at_c] - 1)
    viol[free] = np.abs(yf[free] - 1)
    return viol
