import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ifacepred.sequence import ALPHABET_SIZE, Dataset, ProteinChain, window_at
from ifacepred.svm import (
    KernelSpec, SvmModel, TrainConfig, dual_objective, encode_window, encode_windows, kernel_matrix,
    kkt_violations, smo_solve, svm_chain_decisions, svm_decision, svm_predict, svm_train, train_features,
)
from ifacepred.synthetic import clustered_corpus

SQUARE_X = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
SQUARE_Y = np.array([1.0, 1.0, -1.0, -1.0])


def active_set_oracle(X, y, C, kernel=KernelSpec()):
    """Optimal dual value by enumerating each example as at 0, at C or free.

    For every assignment the free multipliers and bias solve the KKT
    equalities; feasible assignments are checked and the best dual kept.
    """
    n = len(y)
    K = kernel_matrix(X, X, kernel, X.shape[1])
    Q = (y[:, None] * y[None, :]) * K
    best = -np.inf
    for states in itertools.product((0, 1, 2), repeat=n):  # 0: alpha=0, 1: alpha=C, 2: free
        free = [k for k in range(n) if states[k] == 2]
        at_c = [k for k in range(n) if states[k] == 1]
        alpha = np.zeros(n)
        alpha[at_c] = C
        m = len(free)
        # unknowns: alpha_free, b
        A = np.zeros((m + 1, m + 1))
        rhs = np.zeros(m + 1)
        for r, k in enumerate(free):
            A[r, :m] = Q[k, free]
            A[r, m] = y[k]
            rhs[r] = 1 - Q[k, at_c].sum() * C
        A[m, :m] = y[free]
        rhs[m] = -(y[at_c] * C).sum()
        sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
        if np.abs(A @ sol - rhs).max() > 1e-9:
            continue
        alpha[free] = sol[:m]
        b = sol[m]
        if np.any(alpha < -1e-9) or np.any(alpha > C + 1e-9):
            continue
        yf = y * ((alpha * y) @ K + b)
        ok = all(yf[k] >= 1 - 1e-9 for k in range(n) if states[k] == 0)
        ok = ok and all(yf[k] <= 1 + 1e-9 for k in range(n) if states[k] == 1)
        if ok:
            best = max(best, alpha.sum() - 0.5 * alpha @ Q @ alpha)
    return best


def test_oracle_square_is_half():
    assert active_set_oracle(SQUARE_X, SQUARE_Y, 10.0) == pytest.approx(0.5, abs=1e-12)


def test_two_point_closed_form():
    X = np.array([[1.0, 0.0], [-1.0, 0.0]])
    y = np.array([1.0, -1.0])
    res = smo_solve(X, y, C=10.0, tol=1e-6)
    assert np.allclose(res.alpha, [0.5, 0.5], atol=1e-9)
    assert res.b == pytest.approx(0.0, abs=1e-9)
    m = train_features(X, y > 0, TrainConfig(C=10.0, tolerance=1e-6))
    assert np.allclose(m.weights, [1.0, 0.0], atol=1e-9)


def test_square_fixture():
    res = smo_solve(SQUARE_X, SQUARE_Y, C=10.0, tol=1e-6)
    f = (res.alpha * SQUARE_Y) @ kernel_matrix(SQUARE_X, SQUARE_X, KernelSpec(), 2) + res.b
    assert np.all(np.sign(f) == SQUARE_Y)
    assert kkt_violations(res.alpha, SQUARE_X, SQUARE_Y, res.b, 10.0).max() < 1e-3
    assert dual_objective(res.alpha, SQUARE_X, SQUARE_Y) == pytest.approx(0.5, abs=1e-6)


def random_problem(rng, n=6, d=3):
    X = rng.normal(size=(n, d))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    return X, y


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("kernel", [KernelSpec(), KernelSpec("rbf", 0.5)])
def test_matches_active_set_oracle(seed, kernel):
    X, y = random_problem(np.random.default_rng(seed))
    C = 2.0
    res = smo_solve(X, y, C, tol=1e-8, kernel=kernel)
    assert dual_objective(res.alpha, X, y, kernel) == pytest.approx(active_set_oracle(X, y, C, kernel), abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 10.0))
def test_kkt_and_feasibility(seed, C):
    X, y = random_problem(np.random.default_rng(seed), n=15, d=4)
    res = smo_solve(X, y, C, tol=1e-3)
    assert np.all(res.alpha >= 0) and np.all(res.alpha <= C)
    assert abs(res.alpha @ y) < 1e-9
    assert kkt_violations(res.alpha, X, y, res.b, C).max() <= 1e-3 + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_objective_never_decreases(seed):
    X, y = random_problem(np.random.default_rng(seed), n=20, d=3)
    res = smo_solve(X, y, 1.0, debug=True, kernel=KernelSpec("rbf", 1.0))
    assert len(res.objective_deltas) == res.iterations
    assert min(res.objective_deltas, default=0.0) >= -1e-12


def test_label_flip_negates_decisions():
    rng = np.random.default_rng(4)
    X, y = random_problem(rng, n=25, d=4)
    a = train_features(X, y, TrainConfig(tolerance=1e-8))
    b = train_features(X, -y, TrainConfig(tolerance=1e-8))
    probe = rng.normal(size=(10, 4))
    assert np.allclose(a.decision_features(probe), -b.decision_features(probe), atol=1e-5)


def test_linear_collapse_equals_sv_form():
    d = clustered_corpus(np.random.default_rng(0), n_chains=5, length=60)
    m = svm_train(d, TrainConfig(negative_downsample=1.0), w=5)
    F = encode_windows(np.random.default_rng(1).integers(0, ALPHABET_SIZE, (30, 5)))
    assert np.allclose(F @ m.weights + m.bias, m.decision_features(F), atol=1e-10)


def test_rbf_self_kernel_is_one():
    F = encode_windows(np.random.default_rng(2).integers(0, ALPHABET_SIZE, (10, 9)))
    K = kernel_matrix(F, F, KernelSpec("rbf"), F.shape[1])
    assert np.allclose(np.diag(K), 1.0)
    assert np.all((K > 0) & (K <= 1.0))


def test_one_hot_encoding():
    F = encode_windows(np.array([[0, 21, 20]]))
    assert F.shape == (1, 66)
    assert F.sum() == 3
    assert F[0, 0] == F[0, 22 + 21] == F[0, 44 + 20] == 1
    c = ProteinChain.from_string("a", "MKV")
    x = encode_window(window_at(c, 0, 3))
    assert x[21] == 1.0  # PAD before the first residue


def test_single_class_rejected():
    with pytest.raises(ValueError):
        smo_solve(np.eye(3), np.ones(3))
    with pytest.raises(ValueError):
        svm_train(Dataset((ProteinChain.from_string("a", "MKVL", "----"),)))


def test_decision_tie_resolves_negative():
    m = SvmModel(KernelSpec(), np.zeros((0, 3 * ALPHABET_SIZE)), np.zeros(0), np.zeros(0), 0.0,
                 window_size=3, feature_dim=3 * ALPHABET_SIZE)
    c = ProteinChain.from_string("a", "MKV")
    assert svm_chain_decisions(m, c).tolist() == [0.0, 0.0, 0.0]
    assert not svm_predict(m, c).any()


def test_window_size_mismatch():
    d = clustered_corpus(np.random.default_rng(0), n_chains=3, length=40)
    m = svm_train(d, TrainConfig(negative_downsample=1.0), w=5)
    with pytest.raises(ValueError):
        svm_decision(m, np.zeros(7, int))


def test_deterministic_and_round_trip():
    d = clustered_corpus(np.random.default_rng(3), n_chains=4, length=60)
    cfg = TrainConfig(seed=7, negative_downsample=2.0)
    a = svm_train(d, cfg, w=7)
    b = svm_train(d, cfg, w=7)
    assert a.to_json() == b.to_json()
    again = SvmModel.from_json(a.to_json())
    assert again.to_json() == a.to_json()
    c = d.chains[0]
    assert np.array_equal(svm_chain_decisions(again, c), svm_chain_decisions(a, c))


def test_seed_changes_order_not_optimum():
    rng = np.random.default_rng(9)
    X, y = random_problem(rng, n=30, d=3)
    a = train_features(X, y, TrainConfig(seed=0, tolerance=1e-8), KernelSpec("rbf", 1.0))
    b = train_features(X, y, TrainConfig(seed=5, tolerance=1e-8), KernelSpec("rbf", 1.0))
    probe = rng.normal(size=(10, 3))
    assert np.allclose(a.decision_features(probe), b.decision_features(probe), atol=1e-4)
