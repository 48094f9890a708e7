"""Gaussian-kernel RuLSIF: the linear-in-parameters relative ratio baseline.

The model is ``w(x) = sum_i theta_i K(x, c_i)`` with centres ``c_i`` drawn
from the test sample. Minimising the empirical RuLSIF objective plus
``(lambda / 2) ||theta||^2`` is a ridge problem with normal equations

    (H + lambda I) theta = h,
    H = (1 - alpha) mean_ref(phi phi^T) + alpha mean_test(phi phi^T),
    h = mean_test(phi),

where ``phi(x)`` is the vector of kernel values at the centres.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SolverError
from .series import make_rng

DEFAULT_SIGMAS = tuple(10.0 ** p for p in range(-3, 4))
DEFAULT_LAMBDAS = tuple(10.0 ** p for p in range(-3, 2))
DEFAULT_N_KERNELS = 10
DEFAULT_ALPHA = 0.1
DEFAULT_FOLDS = 5


@dataclass(frozen=True)
class CvGrid:
    sigmas: tuple = DEFAULT_SIGMAS
    lambdas: tuple = DEFAULT_LAMBDAS
    folds: int = DEFAULT_FOLDS

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if not self.sigmas or not self.lambdas:
            raise ValueError("cross-validation grid must be non-empty")
        if min(self.sigmas) <= 0 or min(self.lambdas) <= 0:
            raise ValueError("grid entries must be positive")
        if self.folds < 2:
            raise ValueError(f"need at least 2 folds, got {self.folds}")


@dataclass(frozen=True)
class KernelModel:
    centers: np.ndarray
    theta: np.ndarray
    sigma: float
    alpha: float
    lam: float

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.centers.shape[1]:
            raise ValueError(f"expected {self.centers.shape[1]} features, got {X.shape[1]}")
        out = kernel_matrix(X, self.centers, self.sigma) @ self.theta
        return float(out[0]) if single else out


def gaussian_kernel(x, center, sigma):
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    if x.shape != center.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {center.shape}")
    if not sigma > 0:
        raise ValueError(f"kernel width must be > 0, got {sigma}")
    diff = x - center
    return float(np.exp(-np.dot(diff, diff) / (2.0 * sigma * sigma)))


def sq_distances(X, centers):
    X = np.asarray(X, dtype=float)
    centers = np.asarray(centers, dtype=float)
    d2 = (np.sum(X * X, axis=1)[:, None] + np.sum(centers * centers, axis=1)[None, :]
          - 2.0 * X @ centers.T)
    return np.maximum(d2, 0.0)


def kernel_matrix(X, centers, sigma):
    if not sigma > 0:
        raise ValueError(f"kernel width must be > 0, got {sigma}")
    return np.exp(-sq_distances(X, centers) / (2.0 * sigma * sigma))


def select_centers(test_rows, n_kernels, seed):
    """``n_kernels`` rows of the test sample, without replacement when possible."""
    test_rows = np.asarray(test_rows, dtype=float)
    if n_kernels < 1:
        raise ValueError(f"need at least one kernel centre, got {n_kernels}")
    n = test_rows.shape[0]
    rng = make_rng(seed)
    pick = rng.choice(n, n_kernels, replace=n < n_kernels)
    return test_rows[np.sort(pick)]


def _moments(phi_ref, phi_test, alpha):
    H = ((1 - alpha) * phi_ref.T @ phi_ref / phi_ref.shape[0]
         + alpha * phi_test.T @ phi_test / phi_test.shape[0])
    return H, phi_test.mean(axis=0)


def _solve(H, h, lam):
    A = H + lam * np.eye(H.shape[0])
    if lam == 0 and np.linalg.cond(A) > 1.0 / np.finfo(float).eps:
        raise SolverError("kernel system is singular with lambda = 0; use lambda > 0")
    try:
        return np.linalg.solve(A, h)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"kernel system could not be solved ({exc}); use lambda > 0") from exc


def penalized_objective(theta, phi_ref, phi_test, alpha, lam):
    """Empirical RuLSIF loss plus ``lam/2 ||theta||^2`` (no constant term)."""
    w_ref = phi_ref @ theta
    w_test = phi_test @ theta
    return ((1 - alpha) / 2 * np.mean(w_ref ** 2) + alpha / 2 * np.mean(w_test ** 2)
            - np.mean(w_test) + lam / 2 * np.dot(theta, theta))


def fit_closed_form(ref, test, sigma, lam, alpha=DEFAULT_ALPHA, n_kernels=DEFAULT_N_KERNELS,
                    seed=0, centers=None):
    ref = np.atleast_2d(np.asarray(getattr(ref, "rows", ref), dtype=float))
    test = np.atleast_2d(np.asarray(getattr(test, "rows", test), dtype=float))
    if ref.shape[0] == 0 or test.shape[0] == 0:
        raise ValueError("reference and test samples must be non-empty")
    if not (0.0 <= alpha < 1.0):
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if centers is None:
        centers = select_centers(test, n_kernels, seed)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    H, h = _moments(kernel_matrix(ref, centers, sigma), kernel_matrix(test, centers, sigma),
                    alpha)
    theta = _solve(H, h, lam)
    return KernelModel(centers, theta, float(sigma), float(alpha), float(lam))


def _fold_ids(n, folds, rng):
    ids = np.empty(n, dtype=np.int64)
    ids[rng.permutation(n)] = np.arange(n) % folds
    return ids


def cv_losses(ref, test, grid=None, alpha=DEFAULT_ALPHA, n_kernels=DEFAULT_N_KERNELS, seed=0,
              centers=None):
    """Mean held-out RuLSIF loss for every (sigma, lambda) pair.

    Centres are drawn once from the whole test sample and shared by all folds.
    Reference and test rows are each split into ``grid.folds`` random folds;
    fold ``j`` of both is held out together. Returns an array of shape
    ``(len(grid.sigmas), len(grid.lambdas))``.
    """
    grid = grid or CvGrid()
    ref = np.atleast_2d(np.asarray(getattr(ref, "rows", ref), dtype=float))
    test = np.atleast_2d(np.asarray(getattr(test, "rows", test), dtype=float))
    if min(ref.shape[0], test.shape[0]) < grid.folds:
        raise ValueError(f"{grid.folds}-fold cross-validation needs at least {grid.folds} rows "
                         f"per sample, got {ref.shape[0]} and {test.shape[0]}")
    rng = make_rng(seed)
    if centers is None:
        centers = select_centers(test, n_kernels, int(rng.integers(2**63)))
    fr = _fold_ids(ref.shape[0], grid.folds, rng)
    ft = _fold_ids(test.shape[0], grid.folds, rng)
    d_ref = sq_distances(ref, centers)
    d_test = sq_distances(test, centers)
    nr = np.bincount(fr, minlength=grid.folds).astype(float)
    nt = np.bincount(ft, minlength=grid.folds).astype(float)
    lams = np.asarray(grid.lambdas)
    eye = np.eye(centers.shape[0])
    out = np.zeros((len(grid.sigmas), len(grid.lambdas)))
    for a, sigma in enumerate(grid.sigmas):
        pr = np.exp(-d_ref / (2 * sigma * sigma))
        pt = np.exp(-d_test / (2 * sigma * sigma))
        Gr = np.stack([pr[fr == j].T @ pr[fr == j] for j in range(grid.folds)])
        Gt = np.stack([pt[ft == j].T @ pt[ft == j] for j in range(grid.folds)])
        gt = np.stack([pt[ft == j].sum(axis=0) for j in range(grid.folds)])
        Gr_all, Gt_all, gt_all = Gr.sum(0), Gt.sum(0), gt.sum(0)
        for j in range(grid.folds):
            ntr_r, ntr_t = ref.shape[0] - nr[j], test.shape[0] - nt[j]
            H_tr = (1 - alpha) * (Gr_all - Gr[j]) / ntr_r + alpha * (Gt_all - Gt[j]) / ntr_t
            h_tr = (gt_all - gt[j]) / ntr_t
            H_ho = (1 - alpha) * Gr[j] / nr[j] + alpha * Gt[j] / nt[j]
            h_ho = gt[j] / nt[j]
            A = H_tr[None] + lams[:, None, None] * eye[None]
            thetas = np.linalg.solve(A, np.broadcast_to(h_tr, (len(lams), len(h_tr)))[..., None])
            thetas = thetas[..., 0]
            held = 0.5 * np.einsum("li,ij,lj->l", thetas, H_ho, thetas) - thetas @ h_ho
            out[a] += held / grid.folds
    return out


def best_grid_point(losses, grid):
    """Argmin of a loss table; ties go to larger lambda, then larger sigma."""
    best = None
    for li in sorted(range(len(grid.lambdas)), key=lambda i: -grid.lambdas[i]):
        for si in sorted(range(len(grid.sigmas)), key=lambda i: -grid.sigmas[i]):
            if best is None or losses[si, li] < losses[best]:
                best = (si, li)
    return grid.sigmas[best[0]], grid.lambdas[best[1]]


def cross_validate(ref, test, grid=None, alpha=DEFAULT_ALPHA, n_kernels=DEFAULT_N_KERNELS,
                   seed=0, centers=None):
    """Pick (sigma, lambda) minimising the mean held-out RuLSIF loss."""
    grid = grid or CvGrid()
    return best_grid_point(cv_losses(ref, test, grid, alpha, n_kernels, seed, centers), grid)


def predict(model, x):
    return model.predict(x)
