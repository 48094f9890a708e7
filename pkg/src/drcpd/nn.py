"""One-hidden-layer tanh perceptron trained with mini-batch Adam.

Used two ways: with a linear output trained on the RuLSIF loss (the network
output *is* the ratio estimate), and with a sigmoid output trained on binary
cross-entropy to separate reference rows (label 0) from test rows (label 1).

Each optimisation step consumes one batch from each sample. An epoch is
``ceil(max(n_ref, n_test) / batch_size)`` steps over fresh permutations; the
smaller sample is cycled through extra permutations so both batches of a
step have the same size.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _fallback, _kernels
from .series import make_rng

LINEAR = "linear"
SIGMOID = "sigmoid"
BCE_CLIP = 1e-7


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 0.1
    beta1: float = 0.0
    beta2: float = 0.9
    eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 20

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError(f"learning rate must be > 0, got {self.lr}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("Adam betas must lie in [0, 1)")
        if not self.eps > 0:
            raise ValueError("eps must be > 0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")


@dataclass
class Mlp:
    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    output_kind: str = LINEAR
    train_loss: np.ndarray = field(default=None, repr=False)

    @property
    def n_inputs(self):
        return self.W1.shape[1]

    @property
    def hidden(self):
        return self.W1.shape[0]

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} inputs, got {X.shape[-1]}")
        return np.tanh(X @ self.W1.T + self.b1) @ self.w2 + self.b2

    def predict(self, X):
        out = self.decision_function(X)
        if self.output_kind == SIGMOID:
            out = np.clip(_sigmoid(out), np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)
        return out

    def copy(self):
        return Mlp(self.W1.copy(), self.b1.copy(), self.w2.copy(), float(self.b2),
                   self.output_kind)


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        return float(_fallback._sigmoid(z[None])[0])
    return _fallback._sigmoid(z)


def init_mlp(n_inputs, hidden=10, output_kind=LINEAR, seed=0):
    """Glorot-uniform weights, zero biases."""
    rng = make_rng(seed)
    a1 = math.sqrt(6.0 / (n_inputs + hidden))
    a2 = math.sqrt(6.0 / (hidden + 1))
    W1 = rng.uniform(-a1, a1, size=(hidden, n_inputs))
    w2 = rng.uniform(-a2, a2, size=hidden)
    return Mlp(W1, np.zeros(hidden), w2, 0.0, output_kind)


def forward(net, x):
    x = np.asarray(x, dtype=float)
    out = net.predict(x)
    return float(out) if x.ndim == 1 else out


def rulsif_batch_loss(net, ref_batch, test_batch, alpha=0.1):
    ref_batch = np.atleast_2d(np.asarray(ref_batch, dtype=float))
    test_batch = np.atleast_2d(np.asarray(test_batch, dtype=float))
    if ref_batch.shape[0] == 0 or test_batch.shape[0] == 0:
        raise ValueError("both batches must be non-empty")
    w_ref = net.decision_function(ref_batch)
    w_test = net.decision_function(test_batch)
    return float((1 - alpha) / (2 * len(w_ref)) * np.sum(w_ref ** 2)
                 + alpha / (2 * len(w_test)) * np.sum(w_test ** 2) - np.sum(w_test) / len(w_test))


def bce_batch_loss(net, ref_batch, test_batch, clip=BCE_CLIP):
    ref_batch = np.atleast_2d(np.asarray(ref_batch, dtype=float))
    test_batch = np.atleast_2d(np.asarray(test_batch, dtype=float))
    if ref_batch.shape[0] == 0 or test_batch.shape[0] == 0:
        raise ValueError("both batches must be non-empty")
    p_ref = np.clip(_sigmoid(net.decision_function(ref_batch)), clip, 1 - clip)
    p_test = np.clip(_sigmoid(net.decision_function(test_batch)), clip, 1 - clip)
    total = len(p_ref) + len(p_test)
    return float((-np.sum(np.log(1 - p_ref)) - np.sum(np.log(p_test))) / total)


def backprop_gradients(net, ref_batch, test_batch, loss="rulsif", alpha=0.1, clip=BCE_CLIP):
    """Analytic gradients of the batch loss w.r.t. every parameter.

    ``loss`` is ``"rulsif"`` (linear output) or ``"bce"`` (sigmoid output).
    Returns a dict with keys ``W1``, ``b1``, ``w2``, ``b2``.
    """
    if loss not in ("rulsif", "bce"):
        raise ValueError(f"unknown loss {loss!r}")
    ref_batch = np.atleast_2d(np.asarray(ref_batch, dtype=float))
    test_batch = np.atleast_2d(np.asarray(test_batch, dtype=float))
    for batch in (ref_batch, test_batch):
        if batch.shape[1] != net.n_inputs:
            raise ValueError(f"expected {net.n_inputs} inputs, got {batch.shape[1]}")
    _, gW1, gb1, gw2, gb2 = _fallback.mlp_batch_grad(
        net.W1, net.b1, net.w2, np.array([net.b2]), ref_batch, test_batch,
        0 if loss == "rulsif" else 1, alpha, clip)
    return {"W1": gW1, "b1": gb1, "w2": gw2, "b2": float(gb2[0])}


def batch_schedule(n_ref, n_test, batch_size, epochs, rng):
    """Row indices for every step: ``(ref_idx, test_idx, bounds, steps_per_epoch)``."""
    length = max(n_ref, n_test)
    steps = math.ceil(length / batch_size)
    bounds_one = np.minimum(np.arange(steps + 1) * batch_size, length)

    def cover(n):
        reps = math.ceil(length / n)
        return np.concatenate([rng.permutation(n) for _ in range(reps)])[:length]

    ridx, tidx, bounds = [], [], [0]
    for e in range(epochs):
        ridx.append(cover(n_ref))
        tidx.append(cover(n_test))
        bounds.extend((e * length + bounds_one[1:]).tolist())
    return (np.concatenate(ridx).astype(np.int64), np.concatenate(tidx).astype(np.int64),
            np.asarray(bounds, dtype=np.int64), steps)


def _fit(ref, test, adam, seed, hidden, kind, alpha, backend):
    adam = adam or AdamConfig()
    ref = np.ascontiguousarray(getattr(ref, "rows", ref), dtype=float)
    test = np.ascontiguousarray(getattr(test, "rows", test), dtype=float)
    if ref.ndim != 2 or test.ndim != 2 or ref.shape[0] == 0 or test.shape[0] == 0:
        raise ValueError("reference and test samples must be non-empty row matrices")
    if ref.shape[1] != test.shape[1]:
        raise ValueError("reference and test rows differ in width")
    rng = make_rng(seed)
    net = init_mlp(ref.shape[1], hidden, SIGMOID if kind else LINEAR,
                   int(rng.integers(2**63)))
    ridx, tidx, bounds, steps = batch_schedule(ref.shape[0], test.shape[0], adam.batch_size,
                                               adam.epochs, rng)
    b2 = np.array([net.b2])
    train = backend.train_mlp if backend is not None else _kernels.train_mlp
    losses = train(ref, test, ridx, tidx, bounds, steps, net.W1, net.b1, net.w2, b2, kind,
                   float(alpha), adam.lr, adam.beta1, adam.beta2, adam.eps, BCE_CLIP)
    net.b2 = float(b2[0])
    net.train_loss = np.asarray(losses)
    return net


def fit_nn_rulsif(ref, test, adam=None, alpha=0.1, seed=0, hidden=10, backend=None):
    """Train a linear-output network on the RuLSIF loss; returns the fitted :class:`Mlp`."""
    if not (0.0 <= alpha < 1.0):
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    return _fit(ref, test, adam, seed, hidden, 0, alpha, backend)


def fit_nn_classifier(ref, test, adam=None, seed=0, hidden=10, backend=None):
    """Train a sigmoid-output network with BCE (reference -> 0, test -> 1)."""
    return _fit(ref, test, adam, seed, hidden, 1, 0.0, backend)
