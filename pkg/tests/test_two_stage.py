import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ifacepred.evaluation import confusion, metrics
from ifacepred.svm import TrainConfig, svm_predict
from ifacepred.synthetic import clustered_corpus
from ifacepred.two_stage import (
    THETA_GRID, CptModel, fit_cpt, neighbor_count, neighbor_counts, search_theta, stage2_classify,
    stage2_odds, theta_scan, train_two_stage, two_stage_predict,
)


def bits(s):
    return np.array([c == "1" for c in s])


def test_neighbor_count_examples():
    assert neighbor_count(bits("010110100"), 4, 4) == 3
    assert neighbor_count(bits("000000000"), 4, 4) == 0
    assert neighbor_count(bits("111111111"), 4, 4) == 8
    assert neighbor_count(bits("11111"), 0, 4) == 4  # truncated at the N-terminus
    with pytest.raises(IndexError):
        neighbor_count(bits("0101"), 4)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=40), st.integers(0, 6))
def test_neighbor_counts_vectorised(pred, r):
    assert neighbor_counts(pred, r).tolist() == [neighbor_count(pred, i, r) for i in range(len(pred))]
    assert all(0 <= y <= 2 * r for y in neighbor_counts(pred, r))


def test_fit_cpt_hand_tally():
    # r=1: positions (x, y, c) = (1,0,1) (0,2,1) (1,0,0)
    m = fit_cpt([bits("101")], [bits("110")], r=1, alpha=1.0)
    # bucket (x=1, y=0): one C=1 and one C=0 -> (1+1)/(2+2)
    assert m.table[1, 1, 0] == pytest.approx(0.5)
    # bucket (x=0, y=2): one C=1 -> (1+1)/(1+2)
    assert m.table[1, 0, 2] == pytest.approx(2 / 3)
    # empty buckets are uniform
    assert m.table[1, 0, 0] == pytest.approx(0.5)
    assert np.allclose(m.table.sum(axis=0), 1.0)


def test_fit_cpt_sharp_limit():
    m = fit_cpt([bits("0011100")], [bits("0011100")], r=1, alpha=1e-12)
    assert m.table[1, 1, 1] == pytest.approx(1.0)  # ends of the run
    assert m.table[0, 0, 0] == pytest.approx(1.0)


def test_fit_cpt_validation():
    with pytest.raises(ValueError):
        fit_cpt([bits("01")], [bits("011")], chain_ids=["x"])
    with pytest.raises(ValueError):
        fit_cpt([bits("01")], [bits("01")], alpha=0.0)
    with pytest.raises(ValueError):
        CptModel(1, np.full((2, 2, 4), 0.5))


def uniform_except(r, entries, base=(0.5, 0.5)):
    """CPT with P(C=1|x, y) = base[x] except for the listed (x, y) buckets."""
    table = np.empty((2, 2, 2 * r + 1))
    for x in (0, 1):
        table[:, x, :] = np.array([1 - base[x], base[x]])[:, None]
    for (x, y), p in entries.items():
        table[:, x, y] = (1 - p, p)
    return CptModel(r, table)


def test_isolated_positive_removed_and_gap_filled():
    m = uniform_except(2, {(1, 0): 0.1, (0, 4): 0.9}, base=(0.1, 0.9))
    assert stage2_classify(m, bits("00100"), theta=1.0).tolist() == [False] * 5
    # the 0 between four positives is filled
    assert stage2_classify(m, bits("11011"), theta=1.0).tolist() == [True] * 5


def test_strict_threshold():
    m = uniform_except(1, {})
    assert not stage2_classify(m, bits("010"), theta=1.0).any()
    assert stage2_classify(m, bits("010"), theta=0.99).all()


def test_search_theta_matches_rescan():
    d = clustered_corpus(np.random.default_rng(1), n_chains=8, length=60)
    rng = np.random.default_rng(2)
    stage1 = [c.labels ^ (rng.random(len(c)) < 0.2) for c in d.chains]
    labels = [c.labels for c in d.chains]
    m = fit_cpt(stage1, labels, r=4)
    scan = theta_scan(m, stage1, labels)
    assert scan.shape == (100, 2)
    assert np.array_equal(scan[:, 0], THETA_GRID)
    assert THETA_GRID[0] == 0.01 and THETA_GRID[-1] == 1.0
    # independent rescan with metrics() on concatenated predictions
    truth = np.concatenate(labels)
    best = None
    for theta in [k / 100 for k in range(1, 101)]:
        pred = np.concatenate([stage2_classify(m, p, theta) for p in stage1])
        r = metrics(confusion(pred, truth)).correlation_coefficient
        if best is None or r >= best[1]:
            best = (theta, r)
    assert search_theta(m, stage1, labels) == best[0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_theta_monotone(seed, t1, t2):
    rng = np.random.default_rng(seed)
    pred = rng.random(50) < 0.3
    m = fit_cpt([pred], [rng.random(50) < 0.3], r=3)
    lo, hi = sorted((t1, t2))
    assert np.all(stage2_classify(m, pred, hi) <= stage2_classify(m, pred, lo))
    assert np.all(stage2_odds(m, pred) > 0)


def test_pipeline_equals_manual_composition():
    d = clustered_corpus(np.random.default_rng(4), n_chains=6, length=80)
    model = train_two_stage(d, TrainConfig(negative_downsample=1.0), w=7)
    assert model.cpt.theta in THETA_GRID
    for c in d.chains:
        manual = stage2_classify(model.cpt, svm_predict(model.svm, c))
        assert np.array_equal(two_stage_predict(model.svm, model.cpt, c), manual)
    again = CptModel.from_json(model.cpt.to_json())
    assert again.to_json() == model.cpt.to_json()
