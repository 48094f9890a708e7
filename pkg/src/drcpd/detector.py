"""Sliding-window change-point detection driver.

At every evaluated time ``t`` the test sample holds the embeddings anchored
at ``t-n+1 .. t`` and the reference sample those anchored at
``t-2n+1 .. t-n``. Each sample is split in half; the estimator is fit on the
training halves and scored on the validation halves. With the Pearson score
the estimator is fit a second time with the two samples' roles swapped.

Randomness at ``t`` depends only on ``(seed, t, iteration)``, so the score
at a given ``t`` does not depend on the stride or on which other times are
evaluated.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import scores
from .errors import RangeError
from .estimators import PROBA, RATIO, make_estimator
from .scores import ScoreKind
from .series import TimeSeries, embedding_matrix, make_rng, random_split

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectorConfig:
    k: int = 10
    n: int = 500
    m: int = 1
    dt: int = 1
    estimator: str = "gbdt-classifier"
    score: str = "auto"
    seed: int = 0
    mu: float = None
    clip_eps: float = scores.DEFAULT_CLIP
    estimator_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1 or self.n < 4 or self.m < 1 or self.dt < 1:
            raise ValueError(f"need k >= 1, n >= 4, m >= 1, dt >= 1 (got k={self.k}, n={self.n}, "
                             f"m={self.m}, dt={self.dt})")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        make_estimator(self.estimator, **self.estimator_params)
        if self.score != "auto":
            ScoreKind.parse(self.score)

    @property
    def first_t(self):
        return self.k - 1 + 2 * self.n

    def score_kind(self):
        if self.score == "auto":
            est = make_estimator(self.estimator, **self.estimator_params)
            return ScoreKind.PEARSON if est.output == RATIO else ScoreKind.KL
        return ScoreKind.parse(self.score)

    def to_dict(self):
        out = asdict(self)
        out["score"] = self.score_kind().value
        return out


@dataclass(frozen=True)
class ScoreSeries:
    t: np.ndarray
    D: np.ndarray
    config: DetectorConfig = None

    def __len__(self):
        return self.t.shape[0]


@dataclass(frozen=True)
class AlarmList:
    detections: tuple
    mu: float


def _as_ratio(pred, output, clip_eps):
    return scores.ratio_from_proba(pred, clip_eps) if output == PROBA else pred


def _as_proba(pred, output):
    return scores.proba_from_ratio(pred) if output == RATIO else pred


def window_rows(emb, t, k, n):
    """Reference and test sample rows at ``t`` (anchors descending, as embeddings)."""
    j = t - k + 1  # embedding row of anchor t
    test = emb[j - n + 1 : j + 1][::-1]
    ref = emb[j - 2 * n + 1 : j - n + 1][::-1]
    return np.ascontiguousarray(ref), np.ascontiguousarray(test)


def score_at(emb, t, config, estimator=None, kind=None):
    """Dissimilarity at a single time ``t``, averaged over ``config.m`` splits."""
    est = estimator or make_estimator(config.estimator, **config.estimator_params)
    kind = kind or config.score_kind()
    ref, test = window_rows(emb, t, config.k, config.n)
    total = 0.0
    tuned_fw = tuned_bw = None
    for it in range(config.m):
        rng = make_rng(config.seed, t, it)
        s_ref, s_test, s_fw, s_bw, s_tune = (int(v) for v in rng.integers(2**63, size=5))
        ref_split = random_split(ref, 0.5, s_ref)
        test_split = random_split(test, 0.5, s_test)
        if it == 0:
            tuned_fw = est.tune(ref_split.train, test_split.train, s_tune)
        model = est.fit(ref_split.train, test_split.train, s_fw, tuned_fw)
        if kind is ScoreKind.PEARSON:
            if it == 0:
                tuned_bw = est.tune(test_split.train, ref_split.train, s_tune)
            swapped = est.fit(test_split.train, ref_split.train, s_bw, tuned_bw)
            w_test = _as_ratio(model.predict(test_split.valid), est.output, config.clip_eps)
            w_ref = _as_ratio(swapped.predict(ref_split.valid), est.output, config.clip_eps)
            d = scores.pe_score(w_test, w_ref)
        else:
            f_test = _as_proba(model.predict(test_split.valid), est.output)
            f_ref = _as_proba(model.predict(ref_split.valid), est.output)
            d = scores.kl_score(f_test, f_ref, config.clip_eps)
        total += d / config.m
    return total


def evaluation_times(T, config):
    return np.arange(config.first_t, T, config.dt)


def detect(series, config=None, times=None, progress=None):
    """Run the detector over ``series`` and return the score trace.

    ``times`` optionally restricts evaluation to a subset of the stride grid
    (used for parallel chunking); every entry must be a valid anchor.
    """
    config = config or DetectorConfig()
    series = series if isinstance(series, TimeSeries) else TimeSeries(series)
    T = series.length
    if T < config.k + 2 * config.n:
        raise RangeError(f"series of length {T} is too short: need T >= k + 2n = "
                         f"{config.k + 2 * config.n}")
    emb = embedding_matrix(series.values, config.k)
    ts = evaluation_times(T, config) if times is None else np.asarray(times, dtype=np.int64)
    if ts.size and (ts.min() < config.first_t or ts.max() >= T):
        raise RangeError(f"evaluation times must lie in [{config.first_t}, {T})")
    est = make_estimator(config.estimator, **config.estimator_params)
    kind = config.score_kind()
    D = np.empty(ts.shape[0])
    for i, t in enumerate(ts):
        D[i] = score_at(emb, int(t), config, est, kind)
        if progress is not None:
            progress(i + 1, ts.shape[0])
    log.debug("detect: %s on %d times", config.estimator, ts.shape[0])
    return ScoreSeries(ts.astype(np.int64), D, config)


def threshold_alarms(score_series, mu):
    """First time of every maximal run with ``D >= mu``."""
    mu = float(mu)
    if np.isnan(mu):
        raise ValueError("threshold must not be NaN")
    above = np.asarray(score_series.D) >= mu
    starts = above & ~np.concatenate([[False], above[:-1]])
    return AlarmList(tuple(int(t) for t in np.asarray(score_series.t)[starts]), mu)
