"""Least-squares regression trees and gradient boosting over them.

Two boosted models share one engine:

* ``fit_gbdt_rulsif`` fits the relative density ratio directly by functional
  gradient descent on the RuLSIF loss. Each round fits a tree to the negative
  per-row gradient ``-(1-alpha) w`` (reference rows) or ``1 - alpha w``
  (test rows) and adds ``nu * tree`` to the running estimate.
* ``fit_gbdt_classifier`` is a logistic booster (reference -> 0, test -> 1)
  whose tree structure is fit to BCE residuals and whose leaf values are a
  single Newton step ``sum(residual) / sum(p (1 - p))``.

Split search is exact: every midpoint between consecutive distinct values of
every feature is scored, and the heavy loop runs in the compiled core when it
is available (see :mod:`drcpd._kernels`).
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .series import make_rng

RATIO = "ratio"
CLASSIFIER = "classifier"
_TINY = np.finfo(float).tiny
_EPSNEG = np.finfo(float).epsneg


@dataclass(frozen=True)
class RegressionTree:
    """Flat binary tree; ``feature[i] == -1`` marks a leaf. Node 0 is the root."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray
    max_depth: int
    min_leaf: int

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    @property
    def n_leaves(self):
        return int(np.sum(self.feature < 0))

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def predict(self, X):
        X = _check_rows(X, None)
        offsets = np.array([0, self.n_nodes], dtype=np.int64)
        return _kernels.predict_forest(X, self.feature, self.threshold, self.left, self.right,
                                       self.value, offsets, 0.0, 1.0)

    def with_values(self, value):
        return RegressionTree(self.feature, self.threshold, self.left, self.right,
                              np.asarray(value, dtype=float), self.count, self.max_depth,
                              self.min_leaf)


@dataclass(frozen=True)
class BoostedEnsemble:
    """``base_value + nu * sum(tree(x))``, passed through a sigmoid for classifiers."""

    trees: tuple
    learning_rate: float
    base_value: float
    kind: str
    n_features: int
    alpha: float = 0.1
    subsample_fraction: float = 1.0
    train_loss: np.ndarray = field(default=None, repr=False)
    _packed: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.trees:
            sizes = [t.n_nodes for t in self.trees]
            offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
            packed = tuple(np.concatenate([getattr(t, name) for t in self.trees])
                           for name in ("feature", "threshold", "left", "right", "value"))
        else:
            offsets = np.zeros(1, dtype=np.int64)
            packed = (np.zeros(0, np.int64), np.zeros(0), np.zeros(0, np.int64),
                      np.zeros(0, np.int64), np.zeros(0))
        object.__setattr__(self, "_packed", packed + (offsets,))

    def decision_function(self, X):
        """Raw additive score (ratio estimate, or logit for classifiers)."""
        X = _check_rows(X, self.n_features)
        return _kernels.predict_forest(X, *self._packed, float(self.base_value),
                                       float(self.learning_rate))

    def predict(self, X):
        raw = self.decision_function(X)
        if self.kind == CLASSIFIER:
            # keep probabilities strictly inside (0, 1) even for saturated logits
            return np.clip(sigmoid(raw), _TINY, 1.0 - _EPSNEG)
        return raw


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _check_rows(X, n_features):
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D row matrix, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {X.shape[1]}")
    return X


class _Presorted:
    """Per-feature sort order of a fixed row matrix, reused by every tree."""

    def __init__(self, X):
        self.X = _check_rows(X, None)
        order = np.argsort(self.X, axis=0, kind="stable")
        self.order = np.ascontiguousarray(order.T, dtype=np.int64)
        self.sorted_vals = np.ascontiguousarray(np.take_along_axis(self.X.T, self.order, axis=1))

    def fit(self, targets, in_sample, max_depth, min_leaf):
        """Return ``(tree, leaf)``; ``leaf[r]`` is row r's leaf, -1 outside the sample."""
        targets = np.ascontiguousarray(targets, dtype=float)
        *arrays, leaf = _kernels.build_tree(self.X, self.order, self.sorted_vals, targets,
                                            np.ascontiguousarray(in_sample, dtype=np.uint8),
                                            int(max_depth), int(min_leaf))
        return RegressionTree(*arrays, max_depth=int(max_depth), min_leaf=int(min_leaf)), leaf

    def predict(self, tree, leaf, value=None):
        """Tree output on the stored rows, reusing known leaf assignments."""
        value = tree.value if value is None else value
        out = value[np.maximum(leaf, 0)]
        missing = leaf < 0
        if missing.any():
            out[missing] = value[_leaf_index(tree, self.X[missing])]
        return out


def fit_tree(rows, targets, max_depth=6, min_leaf=5):
    """Greedy least-squares CART tree; leaves predict the mean target.

    A node is split only when the best split strictly lowers its sum of
    squared errors and both children keep at least ``min_leaf`` rows.
    """
    rows = _check_rows(rows, None)
    targets = np.asarray(targets, dtype=float)
    if rows.shape[0] == 0:
        raise ValueError("cannot fit a tree on zero rows")
    if targets.shape != (rows.shape[0],):
        raise ValueError(f"targets length {targets.shape} does not match {rows.shape[0]} rows")
    if max_depth < 0 or min_leaf < 1:
        raise ValueError("max_depth must be >= 0 and min_leaf >= 1")
    return _Presorted(rows).fit(targets, np.ones(rows.shape[0], np.uint8), max_depth,
                                min_leaf)[0]


def _check_boost_args(ref, test, n_estimators, learning_rate, subsample):
    ref = _check_rows(getattr(ref, "rows", ref), None)
    test = _check_rows(getattr(test, "rows", test), ref.shape[1])
    if ref.shape[0] == 0 or test.shape[0] == 0:
        raise ValueError("reference and test samples must be non-empty")
    if n_estimators < 1:
        raise ValueError(f"n_estimators must be >= 1, got {n_estimators}")
    if not learning_rate > 0:
        raise ValueError(f"learning rate must be > 0, got {learning_rate}")
    if not (0.0 < subsample <= 1.0):
        raise ValueError(f"subsample fraction must lie in (0, 1], got {subsample}")
    return ref, test


def _subsample_mask(rng, n_ref, n_test, fraction):
    mask = np.zeros(n_ref + n_test, dtype=np.uint8)
    if fraction >= 1.0:
        mask[:] = 1
        return mask
    k_ref = max(1, int(round(fraction * n_ref)))
    k_test = max(1, int(round(fraction * n_test)))
    mask[rng.choice(n_ref, k_ref, replace=False)] = 1
    mask[n_ref + rng.choice(n_test, k_test, replace=False)] = 1
    return mask


def rulsif_loss(w_ref, w_test, alpha):
    """Empirical RuLSIF objective (without its constant term)."""
    w_ref = np.asarray(w_ref, dtype=float)
    w_test = np.asarray(w_test, dtype=float)
    return ((1 - alpha) / 2 * np.mean(w_ref ** 2) + alpha / 2 * np.mean(w_test ** 2)
            - np.mean(w_test))


def rulsif_gradient_targets(w_ref, w_test, alpha):
    """Negative per-row loss gradients: reference rows then test rows."""
    return np.concatenate([-(1 - alpha) * np.asarray(w_ref, dtype=float),
                           1.0 - alpha * np.asarray(w_test, dtype=float)])


def fit_gbdt_rulsif(ref, test, n_estimators=100, learning_rate=0.2, alpha=0.1, seed=0,
                    max_depth=6, min_leaf=5, subsample=1.0, init_noise=0.1):
    """Boost regression trees on the RuLSIF loss to estimate the relative ratio.

    Training rows start from ``1 + eps`` with ``eps ~ N(0, init_noise)``; the
    noise only breaks symmetry during fitting, so the fitted model predicts
    with base value 1 on any row. ``train_loss[m]`` is the loss after
    ``m`` rounds over all training rows.
    """
    if not (0.0 <= alpha < 1.0):
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    ref, test = _check_boost_args(ref, test, n_estimators, learning_rate, subsample)
    rng = make_rng(seed)
    n_ref = ref.shape[0]
    pre = _Presorted(np.vstack([ref, test]))
    w = 1.0 + init_noise * rng.standard_normal(pre.X.shape[0]) if init_noise > 0 \
        else np.ones(pre.X.shape[0])
    losses = [rulsif_loss(w[:n_ref], w[n_ref:], alpha)]
    trees = []
    for _ in range(n_estimators):
        mask = _subsample_mask(rng, n_ref, test.shape[0], subsample)
        z = rulsif_gradient_targets(w[:n_ref], w[n_ref:], alpha)
        tree, leaf = pre.fit(z, mask, max_depth, min_leaf)
        trees.append(tree)
        w = w + learning_rate * pre.predict(tree, leaf)
        losses.append(rulsif_loss(w[:n_ref], w[n_ref:], alpha))
    return BoostedEnsemble(tuple(trees), float(learning_rate), 1.0, RATIO, ref.shape[1],
                           alpha=float(alpha), subsample_fraction=float(subsample),
                           train_loss=np.array(losses))


def bce_loss(p, y, clip=1e-7):
    p = np.clip(np.asarray(p, dtype=float), clip, 1 - clip)
    y = np.asarray(y, dtype=float)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def fit_gbdt_classifier(ref, test, n_estimators=100, learning_rate=0.1, seed=0,
                        max_depth=6, min_leaf=5, subsample=1.0):
    """Logistic gradient boosting separating reference (0) from test (1) rows."""
    ref, test = _check_boost_args(ref, test, n_estimators, learning_rate, subsample)
    rng = make_rng(seed)
    n_ref, n_test = ref.shape[0], test.shape[0]
    pre = _Presorted(np.vstack([ref, test]))
    y = np.concatenate([np.zeros(n_ref), np.ones(n_test)])
    base = float(np.log(n_test / n_ref))
    logit = np.full(y.shape[0], base)
    losses = [bce_loss(sigmoid(logit), y)]
    trees = []
    for _ in range(n_estimators):
        mask = _subsample_mask(rng, n_ref, n_test, subsample)
        p = sigmoid(logit)
        residual = y - p
        tree, leaf = pre.fit(residual, mask, max_depth, min_leaf)
        sel = mask.astype(bool)
        num = np.bincount(leaf[sel], weights=residual[sel], minlength=tree.n_nodes)
        den = np.bincount(leaf[sel], weights=(p * (1 - p))[sel], minlength=tree.n_nodes)
        newton = np.where(den > 1e-12, num / np.maximum(den, 1e-12), 0.0)
        tree = tree.with_values(np.where(tree.feature < 0, newton, tree.value))
        trees.append(tree)
        logit = logit + learning_rate * pre.predict(tree, leaf)
        losses.append(bce_loss(sigmoid(logit), y))
    return BoostedEnsemble(tuple(trees), float(learning_rate), base, CLASSIFIER, ref.shape[1],
                           subsample_fraction=float(subsample), train_loss=np.array(losses))


def _leaf_index(tree, X):
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    for _ in range(tree.max_depth + 1):
        feat = tree.feature[node]
        internal = feat >= 0
        if not internal.any():
            break
        go_left = X[rows, np.where(internal, feat, 0)] <= tree.threshold[node]
        node = np.where(internal, np.where(go_left, tree.left[node], tree.right[node]), node)
    return node


def predict_ensemble(model, x):
    """Ratio estimate (ratio kind) or probability in (0, 1) (classifier kind)."""
    x = np.asarray(x, dtype=float)
    out = model.predict(x)
    return float(out[0]) if x.ndim == 1 else out
