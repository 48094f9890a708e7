"""ROC AUC against change-point labels and multi-run aggregation."""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import rankdata

from .errors import RangeError, UndefinedMetricError


@dataclass(frozen=True)
class LabeledRun:
    t: np.ndarray
    scores: np.ndarray
    labels: np.ndarray


@dataclass(frozen=True)
class BenchmarkRow:
    algorithm: str
    dataset: int
    mean_auc: float
    std: float
    stderr: float
    runs: int
    dt: int
    seed: int


def _check(scores, labels):
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"{scores.shape[0]} scores but {labels.shape[0]} labels")
    if not np.all(np.isin(labels, (0, 1))):
        raise ValueError("labels must be 0/1")
    labels = labels.astype(bool)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.shape[0]:
        raise UndefinedMetricError("ROC AUC needs both positive and negative labels")
    return scores, labels, n_pos


def roc_auc(scores, labels, exact=False):
    """Mann-Whitney AUC: P(score of a positive > score of a negative), ties count 1/2.

    With ``exact=True`` the result is a :class:`fractions.Fraction`.
    """
    scores, labels, n_pos = _check(scores, labels)
    n_neg = labels.shape[0] - n_pos
    ranks = rankdata(scores, method="average")  # half-integers, exact in float
    u = float(np.sum(ranks[labels])) - n_pos * (n_pos + 1) / 2.0
    if exact:
        return Fraction(int(round(2 * u)), 2 * n_pos * n_neg)
    return u / (n_pos * n_neg)


def align(score_series, labels):
    """Pick the label of every evaluated time of a score series."""
    labels = np.asarray(labels)
    t = np.asarray(score_series.t, dtype=np.int64)
    if t.size and (t.min() < 0 or t.max() >= labels.shape[0]):
        raise RangeError(f"labels cover [0, {labels.shape[0]}) but scores reach t={t.max()}")
    return LabeledRun(t, np.asarray(score_series.D, dtype=float), labels[t])


def aggregate_runs(aucs):
    """``(mean, standard error)`` of per-run AUCs; the error is 0 for a single run."""
    mean, _, stderr = summarize_runs(aucs)
    return mean, stderr


def summarize_runs(aucs):
    """Mean, sample standard deviation and standard error of per-run AUCs."""
    aucs = np.asarray(aucs, dtype=float).ravel()
    if aucs.size == 0:
        raise ValueError("need at least one run")
    mean = float(np.mean(aucs))
    if aucs.size == 1:
        return mean, 0.0, 0.0
    std = float(np.std(aucs, ddof=1))
    return mean, std, std / math.sqrt(aucs.size)
