import os
import subprocess
import sys

import numpy as np
import pytest

from drcpd import _fallback, _kernels, nn, trees

BACKENDS = _kernels.backends()
needs_core = pytest.mark.skipif("compiled" not in BACKENDS, reason="compiled core not built")


def _tree_args(rng, n, d, depth, min_leaf, rounded=False, constant=False):
    X = rng.normal(size=(n, d))
    if rounded:
        X = np.round(X, 1)  # many ties
    y = rng.normal(size=n) + (X[:, 0] > 0)
    if constant:
        y[:] = 0.3
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T).astype(np.int64)
    vals = np.ascontiguousarray(np.take_along_axis(X.T, order, axis=1))
    mask = (rng.random(n) < 0.8).astype(np.uint8)
    mask[0] = 1
    return X, order, vals, y, mask, depth, min_leaf


@needs_core
def test_tree_builders_bitwise_identical():
    core = BACKENDS["compiled"]
    rng = np.random.default_rng(0)
    for trial in range(150):
        args = _tree_args(rng, int(rng.integers(1, 300)), int(rng.integers(1, 8)),
                          int(rng.integers(0, 7)), int(rng.integers(1, 6)),
                          rounded=trial % 3 == 0, constant=trial % 7 == 0)
        a = core.build_tree(*args)
        b = _fallback.build_tree(*args)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)


@needs_core
def test_forest_prediction_identical(rng):
    core = BACKENDS["compiled"]
    ref, test = rng.normal(size=(150, 4)), rng.normal(0.5, 1, size=(150, 4))
    model = trees.fit_gbdt_classifier(ref, test, n_estimators=20, seed=1)
    X = rng.normal(size=(100, 4))
    args = (X,) + model._packed
    a = core.predict_forest(args[0], *args[1:], model.base_value, model.learning_rate)
    b = _fallback.predict_forest(args[0], *args[1:], model.base_value, model.learning_rate)
    np.testing.assert_array_equal(a, b)


@needs_core
@pytest.mark.parametrize("kind", [0, 1])
def test_mlp_training_agrees(rng, kind):
    ref, test = rng.normal(size=(90, 5)), rng.normal(0.7, 1, size=(70, 5))
    a = nn._fit(ref, test, None, 3, 10, kind, 0.1, BACKENDS["compiled"])
    b = nn._fit(ref, test, None, 3, 10, kind, 0.1, _fallback)
    for name in ("W1", "b1", "w2"):
        np.testing.assert_allclose(getattr(a, name), getattr(b, name), rtol=1e-9, atol=1e-10)
    np.testing.assert_allclose(a.train_loss, b.train_loss, rtol=1e-9, atol=1e-12)


def test_env_var_forces_python_backend():
    env = dict(os.environ, DRCPD_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import drcpd; print(drcpd.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
