"""Time-series container, Hankel-style embedding and seeded splitting.

An embedding of length ``k`` anchored at ``t`` stacks the rows
``x(t), x(t-1), ..., x(t-k+1)`` into a single ``k*d`` vector. A sample of
size ``n`` anchored at ``t`` holds the embeddings for anchors
``t, t-1, ..., t-n+1`` (in that order).

All randomness goes through :func:`make_rng`, a PCG64 generator keyed by a
:class:`numpy.random.SeedSequence`. Both algorithms are documented and
platform independent, so splits replay bit-for-bit everywhere.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import RangeError


def make_rng(*key):
    """PCG64 generator seeded from a tuple of non-negative integers."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in key])))


def derive_seed(*key):
    """Collapse an integer key tuple into one 63-bit seed."""
    state = np.random.SeedSequence([int(k) for k in key]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


@dataclass(frozen=True)
class TimeSeries:
    """T x d matrix of finite observations; row index is time."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError(f"expected a 2-D (T, d) array, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"time series must have T >= 1 and d >= 1, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("time series contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def length(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class SequenceEmbedding:
    vector: np.ndarray
    anchor_time: int
    window_len: int


@dataclass(frozen=True)
class SequenceSample:
    """n embeddings for consecutive descending anchors starting at ``anchor_time``."""

    rows: np.ndarray
    anchor_time: int
    window_len: int

    @property
    def size(self):
        return self.rows.shape[0]

    @property
    def anchors(self):
        return np.arange(self.anchor_time, self.anchor_time - self.size, -1)


@dataclass(frozen=True)
class SplitPair:
    train: np.ndarray
    valid: np.ndarray
    train_index: np.ndarray
    valid_index: np.ndarray
    seed: int


def _as_series(series):
    return series if isinstance(series, TimeSeries) else TimeSeries(series)


def embed(series, t, k):
    """Return the length-``k*d`` embedding of ``series`` anchored at ``t``."""
    series = _as_series(series)
    if k < 1:
        raise ValueError(f"window length k must be >= 1, got {k}")
    if not (k - 1 <= t < series.length):
        raise RangeError(f"anchor t={t} needs k-1 <= t < T (k={k}, T={series.length})")
    block = series.values[t - k + 1 : t + 1][::-1]
    return SequenceEmbedding(block.reshape(-1).copy(), int(t), int(k))


def embedding_matrix(values, k):
    """All embeddings of a (T, d) array: row ``j`` is the embedding anchored at ``j + k - 1``."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    T, d = values.shape
    if k < 1 or k > T:
        raise RangeError(f"window length k={k} incompatible with T={T}")
    windows = np.lib.stride_tricks.sliding_window_view(values, k, axis=0)  # (T-k+1, d, k)
    # reverse time inside each window, then flatten block-wise: [x(t), x(t-1), ...]
    return np.ascontiguousarray(windows[:, :, ::-1].transpose(0, 2, 1).reshape(T - k + 1, k * d))


def make_sample(series, t, k, n):
    """Stack the embeddings for anchors ``t, t-1, ..., t-n+1``."""
    series = _as_series(series)
    if n < 1:
        raise ValueError(f"sample size n must be >= 1, got {n}")
    if t >= series.length or t - n + 1 < k - 1:
        raise RangeError(
            f"sample at t={t} with n={n}, k={k} needs k-1 <= t-n+1 and t < T={series.length}"
        )
    emb = embedding_matrix(series.values[t - n - k + 2 : t + 1], k)
    return SequenceSample(np.ascontiguousarray(emb[::-1]), int(t), int(k))


def split_sizes(n, fraction):
    if not (0.0 < fraction < 1.0):
        raise ValueError(f"split fraction must lie in (0, 1), got {fraction}")
    if n < 2:
        raise ValueError(f"need at least 2 rows to split, got {n}")
    n_train = math.ceil(round(n * fraction, 9))
    return min(max(n_train, 1), n - 1)


def random_split(sample, fraction=0.5, seed=0):
    """Uniformly random disjoint train/validation partition of a sample's rows.

    The train part gets ``ceil(n * fraction)`` rows (clamped so both parts are
    non-empty); with ``fraction=0.5`` and odd ``n`` the extra row goes to train.
    """
    rows = sample.rows if isinstance(sample, SequenceSample) else np.asarray(sample)
    n_train = split_sizes(rows.shape[0], fraction)
    perm = make_rng(seed).permutation(rows.shape[0])
    train_index = np.sort(perm[:n_train])
    valid_index = np.sort(perm[n_train:])
    return SplitPair(rows[train_index], rows[valid_index], train_index, valid_index, int(seed))
