"""Time the compiled extension against the pure-numpy fallback.

Each case runs the same public fitting routine twice, once per backend, on
identical inputs, and reports the best-of-``--repeat`` wall time.

    python benchmarks/bench_core.py --rows 500 --dim 20 --repeat 3
"""

import argparse
import time
from contextlib import contextmanager

import numpy as np

from drcpd import _kernels, detector, trees
from drcpd.nn import AdamConfig, fit_nn_rulsif
from drcpd.series import TimeSeries

KERNELS = ("build_tree", "predict_forest", "train_mlp")


@contextmanager
def use_backend(module):
    saved = {name: getattr(_kernels, name) for name in KERNELS}
    try:
        for name in KERNELS:
            setattr(_kernels, name, getattr(module, name))
        yield
    finally:
        for name, fn in saved.items():
            setattr(_kernels, name, fn)


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def make_cases(rows, dim, seed):
    rng = np.random.default_rng(seed)
    ref = rng.normal(size=(rows // 2, dim))
    test = rng.normal(0.3, 1.0, size=(rows // 2, dim))
    targets = rng.normal(size=rows)
    pooled = np.vstack([ref, test])
    forest = trees.fit_gbdt_rulsif(ref, test, seed=seed)
    series = TimeSeries(rng.normal(size=(1400, 1)))
    config = detector.DetectorConfig(k=5, n=100, dt=200, estimator="gbdt-rulsif", seed=seed)
    return {
        "tree build (depth 6)": lambda: trees.fit_tree(pooled, targets),
        "forest predict (100 trees)": lambda: forest.predict(pooled),
        "gbdt-rulsif fit": lambda: trees.fit_gbdt_rulsif(ref, test, seed=seed),
        "gbdt-classifier fit": lambda: trees.fit_gbdt_classifier(ref, test, seed=seed),
        "nn-rulsif fit": lambda: fit_nn_rulsif(ref, test, AdamConfig(), seed=seed),
        "detect (gbdt-rulsif, 6 windows)": lambda: detector.detect(series, config),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=500, help="pooled sample size")
    parser.add_argument("--dim", type=int, default=20, help="feature dimension")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    found = _kernels.backends()
    if "compiled" not in found:
        print("compiled extension not built; only the python backend is timed")
    names = [b for b in ("compiled", "python") if b in found]
    cases = make_cases(args.rows, args.dim, args.seed)

    print(f"{'case':34s}" + "".join(f"{b:>12s}" for b in names) + f"{'speedup':>10s}")
    for label, fn in cases.items():
        times = {}
        for backend in names:
            with use_backend(found[backend]):
                fn()  # warm-up
                times[backend] = best_time(fn, args.repeat)
        row = f"{label:34s}" + "".join(f"{times[b] * 1e3:10.2f}ms" for b in names)
        if len(names) == 2:
            row += f"{times['python'] / times['compiled']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
