import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idsbalance.eval import (ConfusionMatrix, compare_experiments, confusion, weighted_metrics,
                             welch_df, welch_ttest)
from idsbalance.errors import InputError

from oracles import weighted_metrics_oracle, welch_p_mpmath


def test_confusion_basics():
    assert np.array_equal(confusion([0, 1, 2, 3, 4], [0, 1, 2, 3, 4]).grid, np.eye(5, dtype=int))
    cm = confusion([1], [3])
    assert cm.grid[1, 3] == 1 and cm.total == 1
    with pytest.raises(InputError):
        confusion([0, 1], [0])


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=60),
       st.randoms(use_true_random=False))
def test_confusion_permutation_invariant(pairs, rnd):
    t, p = zip(*pairs)
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    t2, p2 = zip(*shuffled)
    assert np.array_equal(confusion(t, p).grid, confusion(t2, p2).grid)
    assert confusion(t, p).total == len(pairs)


def test_one_vs_rest_counts():
    cm = confusion([0, 0, 1, 1, 2], [0, 1, 1, 2, 2])
    assert cm.one_vs_rest(1) == (1, 1, 1, 2)


def test_diagonal_metrics_are_one():
    r = weighted_metrics(ConfusionMatrix(np.diag([3, 1, 0, 2, 5])))
    assert (r.accuracy, r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0, 1.0)


def test_two_class_hand_values():
    cm = ConfusionMatrix(np.array([[8, 2], [3, 7]]), ("A", "B"))
    r = weighted_metrics(cm)
    assert r.accuracy == 0.75
    assert r.per_class[0]["precision"] == pytest.approx(8 / 11, abs=1e-15)
    assert r.per_class[0]["recall"] == pytest.approx(0.8, abs=1e-15)
    pre_b, rec_b = 7 / 9, 0.7
    assert r.precision == pytest.approx((8 / 11 + pre_b) / 2, abs=1e-15)
    assert r.recall == pytest.approx(0.75, abs=1e-15)
    f1a = 2 * (8 / 11) * 0.8 / (8 / 11 + 0.8)
    f1b = 2 * pre_b * rec_b / (pre_b + rec_b)
    assert r.f1 == pytest.approx((f1a + f1b) / 2, abs=1e-15)


def test_single_predicted_class():
    r = weighted_metrics(confusion([0, 0, 0, 1, 2], [0] * 5))
    assert r.per_class[0]["recall"] == 1.0
    assert r.per_class[1]["recall"] == 0.0
    assert r.recall == pytest.approx(0.6, abs=1e-15)
    assert "Normal.precision" not in r.zero_division
    assert "DoS.precision" in r.zero_division and "U2R.recall" in r.zero_division


def test_empty_matrix_rejected():
    with pytest.raises(InputError):
        weighted_metrics(ConfusionMatrix(np.zeros((5, 5), dtype=int)))


@settings(max_examples=200)
@given(st.lists(st.integers(0, 40), min_size=25, max_size=25).filter(lambda v: sum(v) > 0))
def test_metrics_match_loop_oracle(cells):
    grid = np.array(cells).reshape(5, 5)
    r = weighted_metrics(ConfusionMatrix(grid))
    acc, wp, wr, wf, per = weighted_metrics_oracle(grid)
    assert r.accuracy == pytest.approx(acc, abs=1e-12)
    assert r.precision == pytest.approx(wp, abs=1e-12)
    assert r.recall == pytest.approx(wr, abs=1e-12)
    assert r.f1 == pytest.approx(wf, abs=1e-12)
    # weighted recall is trace/total
    assert abs(r.recall - r.accuracy) < 1e-12
    for ours, (p, rc, f, s) in zip(r.per_class, per):
        assert ours["support"] == s
        assert 0 <= ours["precision"] <= 1 and 0 <= ours["recall"] <= 1
        if p and rc:
            assert ours["f1"] == pytest.approx(2 / (1 / p + 1 / rc), rel=1e-12)


def test_serialization_roundtrips():
    cm = confusion([0, 1, 2, 3, 4, 4], [0, 1, 1, 3, 4, 0])
    assert np.array_equal(ConfusionMatrix.from_csv(cm.to_csv()).grid, cm.grid)
    r = weighted_metrics(cm)
    assert "accuracy=" in r.to_text() and "U2R.support=1" in r.to_text()
    import json
    assert json.loads(r.to_json())["accuracy"] == r.accuracy


# -- Welch t-test ------------------------------------------------------------

def test_identical_samples():
    assert welch_ttest([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == (0.0, 1.0)
    assert welch_ttest([2.0, 2.0], [2.0, 2.0, 2.0]) == (0.0, 1.0)


def test_separated_samples():
    rng = np.random.default_rng(0)
    a = rng.normal(scale=1e-3, size=100)
    b = 1 + rng.normal(scale=1e-3, size=100)
    assert welch_ttest(a, b)[1] < 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_welch_matches_quadrature_oracle(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(5, 1, 10)
    b = rng.normal(6, 1 + seed * 0.5, 10 + 3 * seed)
    t, p = welch_ttest(a, b)
    t_o, p_o, df_o = welch_p_mpmath(a.tolist(), b.tolist())
    assert t == pytest.approx(t_o, rel=1e-10)
    assert abs(p - p_o) < 1e-6
    assert welch_df(a, b) == pytest.approx(df_o, rel=1e-10)


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=20),
       st.lists(st.floats(-100, 100), min_size=2, max_size=20))
def test_welch_symmetry_and_range(a, b):
    t1, p1 = welch_ttest(a, b)
    t2, p2 = welch_ttest(b, a)
    assert t1 == -t2 or (t1 == 0 and t2 == 0)
    assert p1 == pytest.approx(p2, rel=1e-12)
    assert 0 < p1 <= 1


def test_welch_errors():
    with pytest.raises(InputError):
        welch_ttest([1.0], [1.0, 2.0])
    with pytest.raises(InputError):
        welch_ttest([1.0, np.nan], [1.0, 2.0])


def test_compare_experiments():
    v = np.random.default_rng(1).integers(0, 2, 500)
    assert compare_experiments(v, v) == 1.0
    assert compare_experiments(np.ones(1000), np.zeros(1000)) < 1e-100
    with pytest.raises(InputError):
        compare_experiments([0, 1], [0, 1, 1])
    with pytest.raises(InputError):
        compare_experiments([0, 2], [0, 1])


def test_two_point_accuracy_gap_is_significant():
    n = 22544
    a = np.zeros(n)
    a[: int(0.80 * n)] = 1
    b = np.zeros(n)
    b[: int(0.78 * n)] = 1
    assert compare_experiments(a, b) < 0.05 / 100
