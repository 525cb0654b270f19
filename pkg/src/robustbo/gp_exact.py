"""Exact Gaussian-process regression with a Gaussian observation model.

Posterior prediction, the negative log marginal likelihood with analytic
gradients in log-parameter space, and maximum-likelihood hyperparameter
fitting via multistart L-BFGS-B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .kernels import (
    KernelFamily,
    KernelSpec,
    gram,
    kernel_matrix,
    scaled_distance_matrix,
)
from .linalg import NumericalError, jittered_cholesky

NOISE_FLOOR_FRACTION = 1e-8


@dataclass(frozen=True)
class Prediction:
    mean: float
    variance: float


@dataclass(frozen=True)
class GaussianGP:
    """Fitted exact-GP posterior state.

    ``chol`` is the lower Cholesky factor of the noisy Gram matrix
    (including any jitter), and ``weights`` solves
    ``K @ weights = y - mean_offset``.
    """

    spec: KernelSpec
    noise_variance: float
    X: np.ndarray
    y: np.ndarray
    mean_offset: float
    chol: np.ndarray
    weights: np.ndarray
    jitter_used: float


def exact_posterior(X, y, spec: KernelSpec, noise_variance: float,
                    mean_offset: float = 0.0) -> GaussianGP:
    """Build the posterior state for fixed hyperparameters."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ValueError("X and y lengths differ")
    K = gram(X, spec, noise_variance)
    L, jitter = jittered_cholesky(K)
    weights = cho_solve((L, True), y - mean_offset)
    return GaussianGP(spec, float(noise_variance), X, y, float(mean_offset),
                      L, weights, jitter)


def predict(model: GaussianGP, x_q) -> Prediction:
    """Posterior mean and (latent) variance at a single query point."""
    means, variances = predict_batch(model, np.atleast_2d(x_q))
    return Prediction(float(means[0]), float(variances[0]))


def predict_batch(model: GaussianGP,
                  X_q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized posterior mean and variance at many query points."""
    X_q = np.atleast_2d(np.asarray(X_q, dtype=float))
    k_q = kernel_matrix(X_q, model.X, model.spec)  # (m, n)
    means = model.mean_offset + k_q @ model.weights
    v = solve_triangular(model.chol, k_q.T, lower=True)  # (n, m)
    variances = model.spec.signal_variance - np.sum(v * v, axis=0)
    return means, np.maximum(variances, 0.0)


def _dK_dlog_params(X: np.ndarray, spec: KernelSpec,
                    noise_variance: float) -> list[np.ndarray]:
    """Gram-matrix derivatives wrt (log l_1..d, log sf2, log sn2)."""
    n, d = X.shape
    r = scaled_distance_matrix(X, X, spec)
    grads: list[np.ndarray] = []
    if spec.family is KernelFamily.MATERN52:
        # dk/d(r^2) * (-2) expressed without dividing by r
        factor = spec.signal_variance * ((1.0 + r) / 3.0) * np.exp(-r)
    else:
        factor = spec.signal_variance * (
            1.0 + r ** 2 / (2.0 * spec.alpha)
        ) ** (-spec.alpha - 1.0)
    for i in range(d):
        Di = ((X[:, i][:, None] - X[:, i][None, :]) / spec.lengthscales[i]) ** 2
        grads.append(factor * Di)
    Kf = gram(X, spec, 0.0)
    grads.append(Kf)  # d/d log sf2
    grads.append(noise_variance * np.eye(n))  # d/d log sn2
    return grads


def nlml(X, y, spec: KernelSpec,
         noise_variance: float) -> tuple[float, np.ndarray]:
    """Negative log marginal likelihood and its gradient.

    The gradient is taken with respect to the log-hyperparameters, ordered
    ``(log l_1, ..., log l_d, log signal_variance, log noise_variance)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    K = gram(X, spec, noise_variance)
    L, jitter = jittered_cholesky(K)
    alpha = cho_solve((L, True), y)
    value = (
        0.5 * float(y @ alpha)
        + float(np.sum(np.log(np.diag(L))))
        + 0.5 * n * np.log(2.0 * np.pi)
    )
    Kinv = cho_solve((L, True), np.eye(n))
    A = Kinv - np.outer(alpha, alpha)
    grads = _dK_dlog_params(X, spec, noise_variance)
    grad = np.array([0.5 * np.sum(A * dK) for dK in grads])
    return value, grad


def default_hyper_bounds(X, y) -> tuple[np.ndarray, np.ndarray]:
    """Log-space box for (lengthscales, signal variance, noise variance)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    widths = np.maximum(X.max(axis=0) - X.min(axis=0), 1e-3)
    vy = max(float(np.var(y)), 1e-12)
    lower = np.concatenate([np.log(1e-2 * widths),
                            [np.log(1e-3 * vy), np.log(1e-6 * vy)]])
    upper = np.concatenate([np.log(1e2 * widths),
                            [np.log(1e3 * vy), np.log(1.0 * vy)]])
    return lower, upper


def _log_box_starts(lower: np.ndarray, upper: np.ndarray, n: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Latin-hypercube start points inside a log-space box."""
    d = lower.size
    u = np.empty((n, d))
    for j in range(d):
        u[:, j] = (rng.permutation(n) + rng.random(n)) / n
    return lower + u * (upper - lower)


def fit_exact(X, y, hyper_bounds=None, restarts: int = 5, seed: int = 0,
              init: np.ndarray | None = None) -> GaussianGP:
    """Maximum-likelihood fit of kernel and noise hyperparameters.

    Targets are centered by their empirical mean before fitting; the offset
    is stored on the model and added back at prediction time.  ``init``
    optionally adds one extra start point (log-parameter vector).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 2:
        raise ValueError("fit_exact requires at least 2 observations")
    if not np.all(np.isfinite(y)):
        raise ValueError("y must be finite")
    offset = float(np.mean(y))
    yc = y - offset
    vy = max(float(np.var(y)), 1e-12)
    if hyper_bounds is None:
        lower, upper = default_hyper_bounds(X, y)
    else:
        lower, upper = (np.asarray(b, dtype=float) for b in hyper_bounds)
    d = X.shape[1]
    noise_floor = NOISE_FLOOR_FRACTION * vy
    lower[-1] = max(lower[-1], np.log(noise_floor))
    upper[-1] = max(upper[-1], lower[-1])

    def unpack(theta):
        spec = KernelSpec(KernelFamily.MATERN52, np.exp(theta[:d]),
                          float(np.exp(theta[d])))
        return spec, float(np.exp(theta[d + 1]))

    def objective(theta):
        try:
            spec, sn2 = unpack(theta)
            return nlml(X, yc, spec, sn2)
        except (NumericalError, FloatingPointError, OverflowError):
            return 1e25, np.zeros_like(theta)

    rng = np.random.default_rng(seed)
    starts = list(_log_box_starts(lower, upper, restarts, rng))
    if init is not None:
        starts.append(np.clip(np.asarray(init, dtype=float), lower, upper))
    best_val = np.inf
    best_theta = None
    for theta0 in starts:
        res = minimize(objective, theta0, jac=True, method="L-BFGS-B",
                       bounds=list(zip(lower, upper)))
        if np.isfinite(res.fun) and res.fun < best_val:
            best_val = res.fun
            best_theta = res.x
    if best_theta is None:
        raise NumericalError("all hyperparameter starts failed")
    spec, sn2 = unpack(best_theta)
    return exact_posterior(X, y, spec, sn2, mean_offset=offset)


def log_params(model: GaussianGP) -> np.ndarray:
    """Log-hyperparameter vector of a fitted model (for warm starts)."""
    return np.concatenate([
        np.log(model.spec.lengthscales),
        [np.log(model.spec.signal_variance),
         np.log(max(model.noise_variance, 1e-300))],
    ])
