"""Change-point detection by direct density-ratio estimation."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .datasets import LabeledSeries, SyntheticSpec, generate, label_series, load_csv, load_labels
from .detector import DetectorConfig, ScoreSeries, detect, threshold_alarms
from .errors import DrcpdError, ParseError, RangeError, SolverError, UndefinedMetricError
from .estimators import ESTIMATORS, make_estimator
from .evaluation import aggregate_runs, roc_auc
from .scores import ScoreKind, kl_score, pe_score
from .series import TimeSeries, embed, make_sample, random_split

__all__ = [
    "BACKEND", "DetectorConfig", "DrcpdError", "ESTIMATORS", "LabeledSeries", "ParseError",
    "RangeError", "ScoreKind", "ScoreSeries", "SolverError", "SyntheticSpec", "TimeSeries",
    "UndefinedMetricError", "aggregate_runs", "detect", "embed", "generate", "kl_score",
    "label_series", "load_csv", "load_labels", "make_estimator", "make_sample", "pe_score",
    "random_split", "roc_auc", "threshold_alarms",
]
