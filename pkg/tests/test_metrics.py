import json

import numpy as np
import pytest

from hemloss.errors import InvalidArgument
from hemloss.metrics import (
    EvalReport,
    accuracy,
    auroc,
    confidence_histogram,
    dar,
    mls,
    msp,
    threshold_at_tpr,
    write_histogram_csv,
)

from oracles import pairwise_auroc


def test_confidence_scores():
    assert msp([0.0, 0.0, 0.0, 0.0]) == 0.25
    assert mls([0.0, 0.0, 0.0, 0.0]) == 0.0
    # 1 / (1 + 3 exp(-10)), 30-digit mpmath evaluation
    assert msp([10.0, 0, 0, 0]) == pytest.approx(0.999863818758568933, abs=1e-15)
    assert mls([10.0, 0, 0, 0]) == 10.0


def test_confidence_shift_identities():
    y = np.random.default_rng(0).normal(size=(20, 5))
    np.testing.assert_allclose(msp(y + 3.3), msp(y), atol=1e-15)
    np.testing.assert_allclose(mls(y + 3.3), mls(y) + 3.3)


def test_msp_bounds():
    y = np.random.default_rng(1).normal(0, 4, size=(200, 6))
    s = msp(y)
    assert np.all(s > 1 / 6) and np.all(s <= 1.0)


def test_accuracy():
    y = np.eye(4)
    assert accuracy(y, [0, 1, 2, 3]) == 100.0
    assert accuracy(y, [1, 2, 3, 0]) == 0.0
    assert accuracy(y, [0, 1, 2, 0]) == 75.0
    # ties go to the lowest index
    assert accuracy([[1.0, 1.0]], [0]) == 100.0


def test_auroc_examples():
    assert auroc([0.9] * 5, [0.1] * 7) == 100.0
    assert auroc([0.3, 0.5, 0.5, 0.9], [0.9, 0.5, 0.3, 0.5]) == 50.0
    # pairs won: 0.9 -> 3, 0.8 -> 3, 0.4 -> 2 (beats 0.3 and 0.2)
    assert auroc([0.9, 0.8, 0.4], [0.7, 0.3, 0.2]) == pytest.approx(800 / 9, abs=1e-12)
    assert pairwise_auroc([0.9, 0.8, 0.4], [0.7, 0.3, 0.2]) == pytest.approx(800 / 9, abs=1e-12)
    with pytest.raises(InvalidArgument):
        auroc([], [1.0])


def test_auroc_matches_pairwise_with_ties():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a, b = rng.integers(1, 60, size=2)
        k = rng.integers(0, 6, size=a) / 5.0
        u = rng.integers(0, 6, size=b) / 5.0
        fast = auroc(k, u)
        assert abs(fast - pairwise_auroc(k.tolist(), u.tolist())) <= 1e-12
        assert abs(fast + auroc(u, k) - 100.0) <= 1e-9


def test_auroc_monotone_transform_invariant():
    rng = np.random.default_rng(3)
    known = rng.normal(1, 1, size=(50, 4))
    unknown = rng.normal(0, 1, size=(60, 4))
    base = auroc(msp(known), msp(unknown))
    for f in (np.exp, lambda s: 3 * s - 7, lambda s: s**3):
        assert auroc(f(msp(known)), f(msp(unknown))) == pytest.approx(base, abs=1e-12)


def test_threshold_at_tpr():
    grid = np.arange(1, 101) / 100
    t = threshold_at_tpr(grid, 0.95)
    assert t == 0.06
    assert np.count_nonzero(grid >= t) == 95
    assert threshold_at_tpr([0.4] * 9) == 0.4
    assert threshold_at_tpr(grid, 1.0) == grid.min()


def test_threshold_is_largest_admissible():
    rng = np.random.default_rng(4)
    for _ in range(100):
        s = rng.integers(0, 20, size=rng.integers(1, 50)) / 19
        rate = rng.uniform(0.5, 1.0)
        t = threshold_at_tpr(s, rate)
        assert np.mean(s >= t) >= rate - 1e-12
        larger = s[s > t]
        if larger.size:
            assert np.mean(s >= larger.min()) < rate


def test_dar_truth_table():
    logits = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    labels = [0, 1, 1, 0]
    scores = [0.9, 0.9, 0.1, 0.1]
    assert dar(logits, labels, scores, 0.5) == 50.0
    assert dar(logits[[1, 2]], [1, 1], [0.1, 0.1], 0.5) == 100.0
    assert dar(logits[[1, 2]], [1, 1], [0.9, 0.9], 0.5) == 0.0


def test_dar_ignores_rejected_wrong_prediction():
    rng = np.random.default_rng(5)
    logits = rng.normal(size=(40, 5))
    labels = rng.integers(0, 5, size=40)
    scores = rng.uniform(size=40)
    base = dar(logits, labels, scores, 0.5)
    rejected_wrong = (scores < 0.5) & (logits.argmax(1) != labels)
    shuffled = logits.copy()
    for i in np.flatnonzero(rejected_wrong):
        wrong = [c for c in range(5) if c != labels[i]]
        shuffled[i] = 0.0
        shuffled[i, rng.choice(wrong)] = 1.0
    assert dar(shuffled, labels, scores, 0.5) == base


def test_histogram():
    edges, counts = confidence_histogram([0.5] * 10, 10)
    assert counts.sum() == 10 and np.count_nonzero(counts) == 1
    _, counts = confidence_histogram([], 10)
    assert counts.sum() == 0 and counts.shape == (10,)
    s = np.random.default_rng(6).normal(0.5, 1, size=333)
    for bins in (1, 7, 20):
        _, c = confidence_histogram(s, bins)
        assert c.sum() == 333


def test_report_json_and_csv(tmp_path):
    edges, counts = confidence_histogram([0.2, 0.9], 4)
    rep = EvalReport(97.5, auroc={"msp": {"noise": 88.0}}, auroc_mean={"msp": 88.0})
    d = json.loads(rep.to_json())
    assert d["accuracy"] == 97.5 and d["auroc"]["msp"]["noise"] == 88.0
    write_histogram_csv(tmp_path / "h.csv", edges, counts)
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "bin_low,bin_high,count" and len(lines) == 5
