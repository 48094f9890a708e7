"""Command-line interface.

Every command writes a ``<output>.manifest.json`` next to its main output
recording the tool version, the command and its fully resolved arguments.
``drcpd --from-manifest FILE`` re-runs that command with the same
arguments; with a fixed seed the outputs are reproduced byte for byte.

Exit codes: 0 success, 2 usage error, 3 data error, 4 runtime/numeric error.
"""

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, datasets, evaluation
from .detector import DetectorConfig, ScoreSeries, detect
from .errors import ParseError, RangeError, SolverError, UndefinedMetricError
from .estimators import DISPLAY_NAMES, ESTIMATORS
from .series import derive_seed

log = logging.getLogger("drcpd")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4
JOBS_ENV = "DRCPD_JOBS"
ESTIMATOR_ORDER = ("kernel-rulsif", "gbdt-rulsif", "nn-rulsif", "nn-classifier",
                   "gbdt-classifier")
# short-gap data (e.g. transit light curves) needs smaller windows
SHORT_GAP_N = 200


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# --- output helpers ---------------------------------------------------------

def atomic_write(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest_path(output):
    return os.fspath(output) + ".manifest.json"


def write_manifest(output, command, args, **extra):
    manifest = {"tool": "drcpd", "version": __version__, "command": command, "args": args}
    manifest.update(extra)
    atomic_write(manifest_path(output), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def read_manifest(path):
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed manifest {path}: {exc}") from None
    if manifest.get("tool") != "drcpd" or "command" not in manifest or "args" not in manifest:
        raise DataError(f"{path} is not a drcpd manifest")
    return manifest


def _fmt(x):
    return repr(float(x))


def format_scores(score_series):
    lines = ["t,D"]
    lines += [f"{int(t)},{_fmt(d)}" for t, d in zip(score_series.t, score_series.D)]
    return "\n".join(lines) + "\n"


def load_scores(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except FileNotFoundError:
        raise DataError(f"score file not found: {path}") from None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip().replace(" ", "") != "t,D":
        raise ParseError("expected header 't,D'", 1, path)
    ts, ds = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        try:
            if len(parts) != 2:
                raise ValueError
            ts.append(int(parts[0]))
            ds.append(float(parts[1]))
        except ValueError:
            raise ParseError(f"expected 't,D' row, got {line!r}", lineno, path) from None
    if not ts:
        raise ParseError("score file has no rows", path=path)
    t = np.array(ts, dtype=np.int64)
    if np.any(np.diff(t) <= 0):
        raise ParseError("times must be strictly increasing", path=path)
    return ScoreSeries(t, np.array(ds))


def _load_series(path, header):
    try:
        return datasets.load_csv(path, header=header)
    except FileNotFoundError:
        raise DataError(f"series file not found: {path}") from None


# --- commands ---------------------------------------------------------------

def cmd_generate(args):
    spec = datasets.SyntheticSpec(args.dataset, args.seed)
    data = datasets.generate(spec, n=args.n)
    header = ["x1", "x2"] if data.series.dim == 2 else ["x1"]
    atomic_write(args.out_series, datasets.format_series(data.series,
                                                         header if args.header else None))
    atomic_write(args.out_labels, datasets.format_labels(data.change_points))
    write_manifest(args.out_series, "generate", _args_dict(args),
                   source={"generator": args.dataset, "seed": args.seed},
                   outputs=[os.fspath(args.out_series), os.fspath(args.out_labels)],
                   shape=list(data.series.values.shape))
    return EXIT_OK


def _detector_config(args):
    n = SHORT_GAP_N if getattr(args, "short_gap", False) else args.n
    return DetectorConfig(k=args.k, n=n, m=args.m, dt=args.dt, estimator=args.estimator,
                          score=args.score, seed=args.seed)


def cmd_detect(args):
    config = _detector_config(args)
    series = _load_series(args.series, args.header)
    if series.length < config.k + 2 * config.n:
        raise DataError(f"series has {series.length} rows but detection needs at least "
                        f"k + 2n = {config.k + 2 * config.n}")
    scores = detect(series, config)
    atomic_write(args.out, format_scores(scores))
    write_manifest(args.out, "detect", _args_dict(args), config=config.to_dict(),
                   source={"series": os.fspath(args.series), "length": series.length},
                   outputs=[os.fspath(args.out)])
    return EXIT_OK


def cmd_evaluate(args):
    scores = load_scores(args.scores)
    try:
        cps = datasets.load_labels(args.labels)
    except FileNotFoundError:
        raise DataError(f"labels file not found: {args.labels}") from None
    meta = {}
    if os.path.exists(manifest_path(args.scores)):
        meta = read_manifest(manifest_path(args.scores))
    config = meta.get("config", {})
    n = args.n if args.n is not None else config.get("n", 500)
    T = meta.get("source", {}).get("length", int(scores.t[-1]) + 1)
    if cps and cps[-1] >= T:
        raise DataError(f"change point {cps[-1]} lies beyond the series length {T}")
    labels = datasets.label_series(T, cps, n)
    run = evaluation.align(scores, labels)
    try:
        auc = evaluation.roc_auc(run.scores, run.labels)
    except UndefinedMetricError as exc:
        raise DataError(f"{exc}: the evaluated times carry a single label class") from None
    rows = {"auc": _fmt(auc), "evaluated": len(run.t), "positives": int(run.labels.sum()),
            "n": n, "dt": config.get("dt", ""), "seed": config.get("seed", ""),
            "estimator": config.get("estimator", ""), "score": config.get("score", "")}
    text = ",".join(rows) + "\n" + ",".join(str(v) for v in rows.values()) + "\n"
    atomic_write(args.out, text)
    write_manifest(args.out, "evaluate", _args_dict(args), outputs=[os.fspath(args.out)])
    return EXIT_OK


def _benchmark_cell(job):
    dataset, run, estimator, seed, k, n, m, dt = job
    data = datasets.generate(datasets.SyntheticSpec(dataset, derive_seed(seed, dataset, run)), n)
    config = DetectorConfig(k=k, n=n, m=m, dt=dt, estimator=estimator,
                            seed=derive_seed(seed, dataset, run, 1))
    scores = detect(data.series, config)
    labeled = evaluation.align(scores, data.labels)
    return evaluation.roc_auc(labeled.scores, labeled.labels)


def run_benchmark(dataset_ids, estimators, runs, dt, seed, k=10, n=500, m=1, jobs=1,
                  progress=None):
    """AUC of every (dataset, estimator) pair over ``runs`` generated instances.

    Returns ``(rows, per_run)`` where ``rows`` is a list of
    :class:`~drcpd.evaluation.BenchmarkRow` and ``per_run`` maps
    ``(estimator, dataset)`` to the list of run AUCs.
    """
    cells = [(ds, r, est, seed, k, n, m, dt)
             for ds in dataset_ids for est in estimators for r in range(runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            aucs = list(pool.map(_benchmark_cell, cells))
    else:
        aucs = []
        for i, cell in enumerate(cells):
            aucs.append(_benchmark_cell(cell))
            if progress is not None:
                progress(i + 1, len(cells), cell, aucs[-1])
    per_run = {}
    for cell, auc in zip(cells, aucs):
        per_run.setdefault((cell[2], cell[0]), []).append(auc)
    rows = []
    for ds in dataset_ids:
        for est in estimators:
            mean, std, stderr = evaluation.summarize_runs(per_run[(est, ds)])
            rows.append(evaluation.BenchmarkRow(DISPLAY_NAMES[est], ds, mean, std, stderr,
                                                runs, dt, seed))
    return rows, per_run


def format_benchmark(rows):
    lines = ["algorithm,dataset,mean_auc,std,stderr,runs,dt,seed"]
    for r in rows:
        lines.append(f"{r.algorithm},{r.dataset},{r.mean_auc:.6f},{r.std:.6f},{r.stderr:.6f},"
                     f"{r.runs},{r.dt},{r.seed}")
    return "\n".join(lines) + "\n"


def cmd_benchmark(args):
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")

    def progress(i, total, cell, auc):
        log.info("[%d/%d] dataset %d run %d %s: AUC %.4f", i, total, cell[0], cell[1],
                 cell[2], auc)

    rows, per_run = run_benchmark(args.datasets, args.estimators, args.runs, args.dt, args.seed,
                                  args.k, args.n, args.m, args.jobs, progress)
    atomic_write(args.out, format_benchmark(rows))
    write_manifest(args.out, "benchmark", _args_dict(args), outputs=[os.fspath(args.out)],
                   per_run={f"{est}/{ds}": [_fmt(a) for a in aucs]
                            for (est, ds), aucs in per_run.items()})
    return EXIT_OK


def cmd_plot(args):
    from .plotting import render_svg

    scores = load_scores(args.scores)
    series = _load_series(args.series, args.header)
    labels = None
    if args.labels:
        cps = datasets.load_labels(args.labels)
        labels = datasets.label_series(series.length, cps, args.n)
    atomic_write(args.out, render_svg(series, scores, labels=labels))
    write_manifest(args.out, "plot", _args_dict(args), outputs=[os.fspath(args.out)])
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def _args_dict(args):
    skip = {"func", "from_manifest", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _add_detector_flags(p):
    p.add_argument("--estimator", choices=sorted(ESTIMATORS), default="gbdt-classifier")
    p.add_argument("--score", choices=("auto", "pe", "kl"), default="auto",
                   help="auto: pe for ratio estimators, kl for classifiers")
    p.add_argument("--k", type=int, default=10, help="embedding length")
    p.add_argument("--n", type=int, default=500, help="reference/test sample size")
    p.add_argument("--m", type=int, default=1, help="random splits averaged per time")
    p.add_argument("--dt", type=int, default=1, help="stride between evaluated times")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="drcpd", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"drcpd {__version__}")
    parser.add_argument("--from-manifest", metavar="FILE",
                        help="re-run the command recorded in a manifest")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("generate", help="write a synthetic benchmark series")
    p.add_argument("--dataset", type=int, choices=datasets.DATASET_IDS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--out-series", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--header", action="store_true", help="write a column header row")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detect", help="compute the dissimilarity score trace")
    p.add_argument("series")
    p.add_argument("--header", action="store_true", help="series CSV has a header row")
    p.add_argument("--short-gap", action="store_true",
                   help=f"use n={SHORT_GAP_N} for closely spaced change points")
    _add_detector_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="ROC AUC of a score trace against change points")
    p.add_argument("scores")
    p.add_argument("labels")
    p.add_argument("--n", type=int, default=None,
                   help="label window half-width (default: from the score manifest, else 500)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="AUC table over generated datasets and estimators")
    p.add_argument("--datasets", type=int, nargs="+", choices=datasets.DATASET_IDS,
                   default=list(datasets.DATASET_IDS))
    p.add_argument("--estimators", nargs="+", choices=ESTIMATOR_ORDER,
                   default=list(ESTIMATOR_ORDER))
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--dt", type=int, default=1)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--desk", action="store_true", help="desk-scale preset: --runs 3 --dt 25")
    p.add_argument("--jobs", type=int, default=int(os.environ.get(JOBS_ENV, "1")))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("plot", help="two-panel SVG: signal above, score below")
    p.add_argument("scores")
    p.add_argument("series")
    p.add_argument("--header", action="store_true")
    p.add_argument("--labels", help="optional change-point file to shade label windows")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def _replay(parser, manifest_file):
    manifest = read_manifest(manifest_file)
    sub_args = argparse.Namespace(**manifest["args"])
    sub_args.func = {"generate": cmd_generate, "detect": cmd_detect, "evaluate": cmd_evaluate,
                     "benchmark": cmd_benchmark, "plot": cmd_plot}.get(manifest["command"])
    if sub_args.func is None:
        raise DataError(f"unknown command {manifest['command']!r} in manifest")
    return sub_args


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        if args.from_manifest:
            args = _replay(parser, args.from_manifest)
        elif args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        if getattr(args, "desk", False):
            args.runs, args.dt, args.desk = 3, 25, False
        return args.func(args)
    except UsageError as exc:
        print(f"drcpd: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ParseError, RangeError, UndefinedMetricError) as exc:
        print(f"drcpd: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"drcpd: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, ArithmeticError, OSError) as exc:
        print(f"drcpd: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
