"""Dissimilarity scores built from ratio estimates or classifier probabilities."""

import enum
import math

import numpy as np

DEFAULT_CLIP = 1e-6


class ScoreKind(enum.Enum):
    PEARSON = "pe"
    KL = "kl"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown score {value!r}; choose 'pe' or 'kl'") from None


def _check_clip(clip_eps):
    if not (0.0 < clip_eps < 0.5):
        raise ValueError(f"clip_eps must lie in (0, 0.5), got {clip_eps}")


def _nonempty(values, name):
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    return arr


def ratio_from_proba(f, clip_eps=DEFAULT_CLIP):
    """Odds ``f / (1 - f)`` of a classifier output, with ``f`` clipped away from 0 and 1.

    Valid as a density ratio when reference and test samples have equal size.
    Accepts a scalar or an array.
    """
    _check_clip(clip_eps)
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr < 0) or np.any(f_arr > 1) or np.any(np.isnan(f_arr)):
        raise ValueError("probabilities must lie in [0, 1]")
    f_arr = np.clip(f_arr, clip_eps, 1 - clip_eps)
    out = f_arr / (1 - f_arr)
    return float(out) if out.ndim == 0 else out


def proba_from_ratio(w):
    """Inverse of the odds map; negative ratios count as 0."""
    w = np.maximum(np.asarray(w, dtype=float), 0.0)
    return w / (1.0 + w)


def pe_score(w_on_test, w_swapped_on_ref):
    """Symmetric Pearson score ``mean(w) + mean(w') - 2``.

    ``w_on_test`` are held-out test-row predictions of a model fit with roles
    (reference, test); ``w_swapped_on_ref`` are held-out reference-row
    predictions of the model fit with the roles swapped. Negative ratio
    predictions are floored at 0 first.
    """
    a = np.maximum(_nonempty(w_on_test, "w_on_test"), 0.0)
    b = np.maximum(_nonempty(w_swapped_on_ref, "w_swapped_on_ref"), 0.0)
    return float(a.mean() + b.mean() - 2.0)


def kl_score(f_on_test, f_on_ref, clip_eps=DEFAULT_CLIP):
    """Symmetric KL score from one classifier's outputs (natural log).

    ``mean_test log(f / (1 - f)) + mean_ref log((1 - f) / f)`` with ``f``
    clipped to ``[clip_eps, 1 - clip_eps]``.
    """
    _check_clip(clip_eps)
    ft = _nonempty(f_on_test, "f_on_test")
    fr = _nonempty(f_on_ref, "f_on_ref")
    for arr in (ft, fr):
        if np.any(arr < 0) or np.any(arr > 1) or np.any(np.isnan(arr)):
            raise ValueError("probabilities must lie in [0, 1]")
    ft = np.clip(ft, clip_eps, 1 - clip_eps)
    fr = np.clip(fr, clip_eps, 1 - clip_eps)
    # log(f) - log(1 - f) on explicit complements: swapping the lists and
    # complementing them reproduces the same float terms whenever 1 - f is exact
    return float(np.mean(np.log(ft) - np.log(1 - ft)) + np.mean(np.log(1 - fr) - np.log(fr)))


def kl_bound(clip_eps=DEFAULT_CLIP):
    return 2.0 * math.log((1 - clip_eps) / clip_eps)
