"""Synthetic benchmark generators, ground-truth labels and CSV I/O.

All three generators produce 10 segments of 2000 steps (T = 20000) with a
change point at the start of every segment after the first:

1. AR(2) ``x1(t) = 0.6 x1(t-1) - 0.5 x1(t-2) + e1(t)`` with ``e1 ~ N(mu_N, 1)``,
   ``mu_1 = 0``, ``mu_N = mu_{N-1} + 0.5 N``; plus an uninformative
   ``x2 ~ N(0, 5)`` column.
2. Same AR(2) with ``e1 ~ N(0, sigma_N)``, ``sigma_1 = 1``,
   ``sigma_N = 1 + 0.25 N``; plus the same noise column.
3. ``x(t) = sin(omega_N t) + e(t)``, ``e ~ N(0.5, 1)``, ``omega_1 = 1``,
   ``omega_N = log(e + 0.5 N)``.

Normal parameters are (mean, standard deviation). The AR recursion starts at
zero, runs a 200-step burn-in under segment-1 parameters that is discarded,
and then continues without reset across segments.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .series import TimeSeries, make_rng

N_SEGMENTS = 10
SEGMENT_LENGTH = 2000
BURN_IN = 200
DATASET_IDS = (1, 2, 3)


@dataclass(frozen=True)
class LabeledSeries:
    series: TimeSeries
    change_points: tuple
    n: int
    labels: np.ndarray


@dataclass(frozen=True)
class SyntheticSpec:
    dataset: int
    seed: int = 0
    segments: int = N_SEGMENTS
    segment_length: int = SEGMENT_LENGTH

    def __post_init__(self):
        if self.dataset not in DATASET_IDS:
            raise ValueError(f"dataset must be one of {DATASET_IDS}, got {self.dataset}")
        if self.segments < 1 or self.segment_length < 1:
            raise ValueError("segments and segment_length must be positive")

    @property
    def length(self):
        return self.segments * self.segment_length

    @property
    def change_points(self):
        return tuple(self.segment_length * i for i in range(1, self.segments))


def mean_schedule(segments=N_SEGMENTS):
    mu = [0.0]
    for N in range(2, segments + 1):
        mu.append(mu[-1] + 0.5 * N)
    return np.array(mu)


def std_schedule(segments=N_SEGMENTS):
    return np.array([1.0] + [1.0 + 0.25 * N for N in range(2, segments + 1)])


def frequency_schedule(segments=N_SEGMENTS):
    return np.array([1.0] + [math.log(math.e + 0.5 * N) for N in range(2, segments + 1)])


def _ar2(innovations, burn_in_noise):
    x = np.zeros(innovations.shape[0])
    p1 = p2 = 0.0
    for e in burn_in_noise:
        p1, p2 = 0.6 * p1 - 0.5 * p2 + e, p1
    for t, e in enumerate(innovations):
        cur = 0.6 * p1 - 0.5 * p2 + e
        x[t] = cur
        p1, p2 = cur, p1
    return x


def label_series(T, change_points, n):
    """0/1 labels: 1 on every ``[t*, t* + 2n)`` (clipped to ``[0, T)``)."""
    cps = list(change_points)
    if any(b < a for a, b in zip(cps, cps[1:])):
        raise ValueError("change points must be sorted")
    if cps and (cps[0] < 0 or cps[-1] >= T):
        raise ValueError(f"change points must lie in [0, {T})")
    labels = np.zeros(T, dtype=np.int8)
    for cp in cps:
        labels[cp : min(cp + 2 * n, T)] = 1
    return labels


def generate(spec, n=500):
    spec = spec if isinstance(spec, SyntheticSpec) else SyntheticSpec(*spec)
    rng = make_rng(spec.seed, spec.dataset)
    seg = np.repeat(np.arange(spec.segments), spec.segment_length)
    if spec.dataset in (1, 2):
        if spec.dataset == 1:
            loc, scale = mean_schedule(spec.segments)[seg], np.ones(seg.shape[0])
        else:
            loc, scale = np.zeros(seg.shape[0]), std_schedule(spec.segments)[seg]
        burn = rng.normal(loc[0], scale[0], size=BURN_IN)
        x1 = _ar2(rng.normal(loc, scale), burn)
        x2 = rng.normal(0.0, 5.0, size=seg.shape[0])
        values = np.column_stack([x1, x2])
    else:
        omega = frequency_schedule(spec.segments)[seg]
        t = np.arange(seg.shape[0])
        values = (np.sin(omega * t) + rng.normal(0.5, 1.0, size=seg.shape[0]))[:, None]
    cps = spec.change_points
    return LabeledSeries(TimeSeries(values), cps, n, label_series(spec.length, cps, n))


def gen_dataset1(seed, n=500):
    return generate(SyntheticSpec(1, seed), n)


def gen_dataset2(seed, n=500):
    return generate(SyntheticSpec(2, seed), n)


def gen_dataset3(seed, n=500):
    return generate(SyntheticSpec(3, seed), n)


# --- CSV ------------------------------------------------------------------

def parse_series(text, header=False, path=None):
    lines = text.splitlines()
    rows = []
    width = None
    start = 0
    if header:
        if not lines:
            raise ParseError("file is empty", 1, path)
        start = 1
    for lineno in range(start + 1, len(lines) + 1):
        line = lines[lineno - 1]
        if not line.strip():
            if lineno == len(lines):
                continue
            raise ParseError("blank line", lineno, path)
        cells = line.split(",")
        try:
            row = [float(c) for c in cells]
        except ValueError:
            raise ParseError(f"non-numeric cell in {line!r}"
                             + ("" if header else " (pass header=True for a header row)"),
                             lineno, path) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError("non-finite value", lineno, path)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"expected {width} columns, found {len(row)}", lineno, path)
        rows.append(row)
    if not rows:
        raise ParseError("no data rows", path=path)
    return TimeSeries(np.array(rows))


def load_csv(path, header=False):
    """Read a comma-separated (T, d) series; one row per timestamp."""
    with open(path, newline="") as fh:
        return parse_series(fh.read(), header=header, path=str(path))


def format_series(series, header=None):
    values = series.values if isinstance(series, TimeSeries) else np.atleast_2d(series)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(header)
    for row in values:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def save_csv(series, path, header=None):
    with open(path, "w", newline="") as fh:
        fh.write(format_series(series, header))


def parse_labels(text, path=None):
    cps = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            cps.append(int(line.strip()))
        except ValueError:
            raise ParseError(f"expected an integer change point, got {line!r}", lineno,
                             path) from None
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ParseError("change points must be strictly increasing", path=path)
    return cps


def load_labels(path):
    """Change points, one integer per line."""
    with open(path) as fh:
        return parse_labels(fh.read(), str(path))


def format_labels(change_points):
    return "".join(f"{int(cp)}\n" for cp in change_points)


def save_labels(change_points, path):
    with open(path, "w") as fh:
        fh.write(format_labels(change_points))
