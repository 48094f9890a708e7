"""The five interchangeable ratio estimators behind one small interface.

Every estimator has ``output`` (``"ratio"`` or ``"proba"``), an optional
``tune(ref, test, seed)`` hook for per-window hyperparameter search, and
``fit(ref, test, seed, tuned=None)`` returning a model with ``predict(X)``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernel_rulsif, nn, trees

RATIO = "ratio"
PROBA = "proba"


@dataclass(frozen=True)
class Standardized:
    """A model applied to inputs shifted and scaled by fixed column moments."""

    model: object
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit_moments(cls, ref, test):
        pooled = np.vstack([np.asarray(ref, dtype=float), np.asarray(test, dtype=float)])
        scale = pooled.std(axis=0)
        scale[scale == 0] = 1.0
        return pooled.mean(axis=0), scale

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def predict(self, X):
        return self.model.predict(self.transform(X))


def _standardized_fit(fit, standardize, ref, test):
    # tanh units saturate once inputs drift far from the origin
    if not standardize:
        return fit(ref, test)
    mean, scale = Standardized.fit_moments(ref, test)
    model = fit((np.asarray(ref, dtype=float) - mean) / scale,
                (np.asarray(test, dtype=float) - mean) / scale)
    return Standardized(model, mean, scale)


@dataclass(frozen=True)
class KernelRulsif:
    alpha: float = kernel_rulsif.DEFAULT_ALPHA
    n_kernels: int = kernel_rulsif.DEFAULT_N_KERNELS
    grid: kernel_rulsif.CvGrid = field(default_factory=kernel_rulsif.CvGrid)
    sigma: float = None
    lam: float = None
    name = "kernel-rulsif"
    output = RATIO

    def tune(self, ref, test, seed):
        if self.sigma is not None and self.lam is not None:
            return self.sigma, self.lam
        return kernel_rulsif.cross_validate(ref, test, self.grid, self.alpha, self.n_kernels, seed)

    def fit(self, ref, test, seed, tuned=None):
        sigma, lam = tuned if tuned is not None else self.tune(ref, test, seed)
        return kernel_rulsif.fit_closed_form(ref, test, sigma, lam, self.alpha, self.n_kernels,
                                             seed)


@dataclass(frozen=True)
class GbdtRulsif:
    n_estimators: int = 100
    learning_rate: float = 0.2
    alpha: float = 0.1
    max_depth: int = 6
    min_leaf: int = 5
    subsample: float = 1.0
    name = "gbdt-rulsif"
    output = RATIO

    def tune(self, ref, test, seed):
        return None

    def fit(self, ref, test, seed, tuned=None):
        return trees.fit_gbdt_rulsif(ref, test, self.n_estimators, self.learning_rate,
                                     self.alpha, seed, self.max_depth, self.min_leaf,
                                     self.subsample)


@dataclass(frozen=True)
class NnRulsif:
    adam: nn.AdamConfig = field(default_factory=nn.AdamConfig)
    alpha: float = 0.1
    hidden: int = 10
    standardize: bool = True
    name = "nn-rulsif"
    output = RATIO

    def tune(self, ref, test, seed):
        return None

    def fit(self, ref, test, seed, tuned=None):
        return _standardized_fit(
            lambda r, t: nn.fit_nn_rulsif(r, t, self.adam, self.alpha, seed, self.hidden),
            self.standardize, ref, test)


@dataclass(frozen=True)
class GbdtClassifier:
    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int = 6
    min_leaf: int = 5
    subsample: float = 1.0
    name = "gbdt-classifier"
    output = PROBA

    def tune(self, ref, test, seed):
        return None

    def fit(self, ref, test, seed, tuned=None):
        return trees.fit_gbdt_classifier(ref, test, self.n_estimators, self.learning_rate, seed,
                                         self.max_depth, self.min_leaf, self.subsample)


@dataclass(frozen=True)
class NnClassifier:
    adam: nn.AdamConfig = field(default_factory=nn.AdamConfig)
    hidden: int = 10
    standardize: bool = True
    name = "nn-classifier"
    output = PROBA

    def tune(self, ref, test, seed):
        return None

    def fit(self, ref, test, seed, tuned=None):
        return _standardized_fit(
            lambda r, t: nn.fit_nn_classifier(r, t, self.adam, seed, self.hidden),
            self.standardize, ref, test)


ESTIMATORS = {
    cls.name: cls for cls in (KernelRulsif, GbdtRulsif, NnRulsif, GbdtClassifier, NnClassifier)
}

# row labels used in benchmark tables
DISPLAY_NAMES = {
    "kernel-rulsif": "RuLSIF",
    "gbdt-rulsif": "GBDT-RuLSIF",
    "nn-rulsif": "NN-RuLSIF",
    "nn-classifier": "NN",
    "gbdt-classifier": "GBDT",
}


def make_estimator(name, **params):
    try:
        cls = ESTIMATORS[name]
    except KeyError:
        raise ValueError(f"unknown estimator {name!r}; choose from {sorted(ESTIMATORS)}") from None
    return cls(**params)
