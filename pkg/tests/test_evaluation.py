from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drcpd.detector import ScoreSeries
from drcpd.errors import RangeError, UndefinedMetricError
from drcpd.evaluation import aggregate_runs, align, roc_auc, summarize_runs


def pair_count_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(Fraction(1) if p > q else Fraction(1, 2) if p == q else Fraction(0)
               for p, q in product(pos, neg))
    return wins / (len(pos) * len(neg))


def test_hand_example():
    assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75


def test_ties_count_half():
    assert roc_auc([1.0, 1.0], [0, 1]) == 0.5
    assert roc_auc([1.0, 1.0, 2.0], [0, 1, 1]) == 0.75


def test_perfect_and_reversed():
    assert roc_auc([1, 2, 3, 4], [0, 0, 1, 1]) == 1.0
    assert roc_auc([4, 3, 2, 1], [0, 0, 1, 1]) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 1)), min_size=2, max_size=40))
def test_matches_pair_counting(rows):
    scores = [float(s) for s, _ in rows]
    labels = [y for _, y in rows]
    if len(set(labels)) < 2:
        with pytest.raises(UndefinedMetricError):
            roc_auc(scores, labels)
        return
    assert roc_auc(scores, labels, exact=True) == pair_count_auc(scores, labels)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=4, max_size=30), st.integers(0, 2**32 - 1))
def test_invariant_under_monotone_transform(scores, seed):
    labels = np.random.default_rng(seed).integers(0, 2, len(scores))
    if len(set(labels.tolist())) < 2:
        return
    s = np.array(scores, dtype=float)
    assert roc_auc(s, labels) == roc_auc(s ** 3 + 2 * s - 7, labels)


def test_single_class_undefined():
    with pytest.raises(UndefinedMetricError):
        roc_auc([0.1, 0.2], [1, 1])


def test_bad_inputs():
    with pytest.raises(ValueError):
        roc_auc([0.1, 0.2], [0, 2])
    with pytest.raises(ValueError):
        roc_auc([0.1], [0, 1])


def test_align_picks_evaluated_times():
    labels = np.array([0, 0, 1, 1, 0, 1])
    run = align(ScoreSeries(np.array([1, 3, 5]), np.array([0.1, 0.2, 0.3])), labels)
    assert run.labels.tolist() == [0, 1, 1]
    with pytest.raises(RangeError):
        align(ScoreSeries(np.array([6]), np.array([0.1])), labels)


def test_aggregation():
    mean, stderr = aggregate_runs([0.9])
    assert (mean, stderr) == (0.9, 0.0)
    mean, std, stderr = summarize_runs([0.8, 0.9, 1.0])
    assert mean == pytest.approx(0.9)
    assert std == pytest.approx(0.1)
    assert stderr == pytest.approx(0.1 / np.sqrt(3))
    with pytest.raises(ValueError):
        summarize_runs([])
