"""Gaussian process with a heavy-tailed Student-t observation model.

The latent posterior is non-Gaussian, so it is approximated by a Gaussian
centered at the posterior mode (found by damped Newton iteration) with
precision ``K^-1 + W``, where ``W`` holds the curvature of the negative
log-likelihood at the mode.  Negative curvature entries, which the
Student-t produces at large residuals, are clamped to zero so the
approximation stays well defined.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize
from scipy.special import gammaln

from .kernels import KernelFamily, KernelSpec, gram, kernel_matrix
from .linalg import NumericalError, jittered_cholesky


@dataclass(frozen=True)
class StudentTLik:
    """Student-t observation model with degrees of freedom and scale."""

    dof: float = 4.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.dof >= 1.0:
            raise ValueError("dof must be >= 1")
        if not self.scale > 0.0:
            raise ValueError("scale must be positive")


def t_logpdf(y, f, lik: StudentTLik):
    """Log density of y under a Student-t centered at f, with its first two
    derivatives in f.

    Vectorized over arrays; returns (logpdf, d/df, d2/df2).
    """
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    nu, s = lik.dof, lik.scale
    r = y - f
    q = nu * s * s + r * r
    lp = (
        gammaln((nu + 1.0) / 2.0)
        - gammaln(nu / 2.0)
        - 0.5 * np.log(nu * np.pi)
        - np.log(s)
        - ((nu + 1.0) / 2.0) * np.log(q / (nu * s * s))
    )
    d1 = (nu + 1.0) * r / q
    d2 = (nu + 1.0) * (r * r - nu * s * s) / q ** 2
    return lp, d1, d2


@dataclass(frozen=True)
class LaplaceGP:
    """Laplace-approximated posterior state for the Student-t model.

    ``f_hat`` is the latent mode (excluding ``mean_offset``), ``coeffs``
    satisfies ``f_hat = K @ coeffs``, ``W`` is the clamped curvature
    diagonal and ``B_chol`` the lower Cholesky factor of
    ``I + sqrt(W) K sqrt(W)``.
    """

    spec: KernelSpec
    lik: StudentTLik
    X: np.ndarray
    y: np.ndarray
    mean_offset: float
    f_hat: np.ndarray
    W: np.ndarray
    coeffs: np.ndarray
    K: np.ndarray
    B_chol: np.ndarray
    converged: bool
    newton_iters: int
    jitter_used: float


def _psi(lp_sum: float, a: np.ndarray, f: np.ndarray) -> float:
    return lp_sum - 0.5 * float(a @ f)


def laplace_mode(X, y, spec: KernelSpec, lik: StudentTLik,
                 mean_offset: float = 0.0, max_iters: int = 100,
                 tol: float = 1e-6) -> LaplaceGP:
    """Find the latent posterior mode by damped Newton iteration.

    The prior has mean ``mean_offset``; the latent vector is represented
    relative to it and initialized at zero.  Each Newton direction is
    backtracked (up to 20 halvings) until the log posterior does not
    decrease, so the objective is non-decreasing over accepted steps.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    yc = y - mean_offset
    K = gram(X, spec, 0.0)
    _, jitter = jittered_cholesky(K)
    if jitter:
        K = K + jitter * np.eye(n)

    a = np.zeros(n)
    f = np.zeros(n)
    lp, d1, d2 = t_logpdf(yc, f, lik)
    psi = _psi(float(np.sum(lp)), a, f)
    converged = False
    iters = 0
    gtol = tol * (1.0 + float(np.max(np.abs(y))) if n else 1.0)
    for iters in range(1, max_iters + 1):
        grad_norm = float(np.max(np.abs(d1 - a)))
        if grad_norm <= gtol:
            converged = True
            break
        W = np.maximum(-d2, 0.0)
        sW = np.sqrt(W)
        B = np.eye(n) + sW[:, None] * K * sW[None, :]
        L = np.linalg.cholesky(B)
        b = W * f + d1
        a_dir = b - sW * cho_solve((L, True), sW * (K @ b))
        delta = a_dir - a
        step = 1.0
        accepted = False
        for _ in range(21):
            a_new = a + step * delta
            f_new = K @ a_new
            lp_new, d1_new, d2_new = t_logpdf(yc, f_new, lik)
            psi_new = _psi(float(np.sum(lp_new)), a_new, f_new)
            if psi_new >= psi - 1e-12 * (1.0 + abs(psi)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        a, f = a_new, f_new
        lp, d1, d2 = lp_new, d1_new, d2_new
        psi = max(psi, psi_new)
    else:
        grad_norm = float(np.max(np.abs(d1 - a)))
        converged = grad_norm <= gtol

    if not converged:
        converged = float(np.max(np.abs(d1 - a))) <= gtol
    W = np.maximum(-d2, 0.0)
    sW = np.sqrt(W)
    B = np.eye(n) + sW[:, None] * K * sW[None, :]
    B_chol = np.linalg.cholesky(B)
    return LaplaceGP(spec, lik, X, y, float(mean_offset), f, W, a, K, B_chol,
                     converged, iters, jitter)


def laplace_evidence_from_model(model: LaplaceGP) -> float:
    """Approximate log marginal likelihood at the fitted mode."""
    lp, _, _ = t_logpdf(model.y - model.mean_offset, model.f_hat, model.lik)
    return (
        float(np.sum(lp))
        - 0.5 * float(model.coeffs @ model.f_hat)
        - float(np.sum(np.log(np.diag(model.B_chol))))
    )


def laplace_evidence(X, y, spec: KernelSpec, lik: StudentTLik,
                     mean_offset: float = 0.0) -> float:
    """Approximate log marginal likelihood for given hyperparameters."""
    model = laplace_mode(X, y, spec, lik, mean_offset=mean_offset)
    return laplace_evidence_from_model(model)


def _robust_std(y: np.ndarray) -> float:
    mad = float(np.median(np.abs(y - np.median(y))))
    return max(1.4826 * mad, 1e-6 * max(float(np.std(y)), 1.0), 1e-8)


def default_laplace_bounds(X, y, optimize_dof: bool = False):
    """Log-space box for (lengthscales, signal variance, t scale[, dof])."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    widths = np.maximum(X.max(axis=0) - X.min(axis=0), 1e-3)
    s = _robust_std(y)
    v = s * s
    # lengthscale floor is deliberately higher than the exact-GP box:
    # with a free short lengthscale the latent can interpolate isolated
    # outliers instead of rejecting them
    lower = np.concatenate([np.log(5e-2 * widths),
                            [np.log(1e-3 * v), np.log(1e-3 * s)]])
    upper = np.concatenate([np.log(1e2 * widths),
                            [np.log(1e3 * v), np.log(1e1 * s)]])
    if optimize_dof:
        lower = np.concatenate([lower, [np.log(2.0)]])
        upper = np.concatenate([upper, [np.log(100.0)]])
    return lower, upper


def fit_laplace(X, y, hyper_bounds=None, restarts: int = 3, seed: int = 0,
                dof: float = 4.0, optimize_dof: bool = False,
                init: np.ndarray | None = None,
                max_evals: int = 200) -> LaplaceGP:
    """Fit kernel hyperparameters and the likelihood scale by maximizing
    the approximate evidence with a multistart Nelder-Mead search.

    Targets are centered by their median (robust to corrupted values).
    The degrees of freedom stay fixed at ``dof`` unless ``optimize_dof``;
    evidence gradients through the mode are not used.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 4:
        raise ValueError("fit_laplace requires at least 4 observations")
    offset = float(np.median(y))
    d = X.shape[1]
    if hyper_bounds is None:
        lower, upper = default_laplace_bounds(X, y, optimize_dof)
    else:
        lower, upper = (np.asarray(b, dtype=float) for b in hyper_bounds)

    def unpack(theta):
        spec = KernelSpec(KernelFamily.MATERN52, np.exp(theta[:d]),
                          float(np.exp(theta[d])))
        nu = float(np.exp(theta[d + 2])) if optimize_dof else dof
        return spec, StudentTLik(dof=nu, scale=float(np.exp(theta[d + 1])))

    def objective(theta):
        if np.any(theta < lower - 1e-12) or np.any(theta > upper + 1e-12):
            return 1e25
        try:
            spec, lik = unpack(theta)
            model = laplace_mode(X, y, spec, lik, mean_offset=offset)
        except (NumericalError, np.linalg.LinAlgError):
            return 1e25
        ev = laplace_evidence_from_model(model)
        if not np.isfinite(ev):
            return 1e25
        penalty = 0.0 if model.converged else 10.0
        return -ev + penalty

    rng = np.random.default_rng(seed)
    p = lower.size
    starts = []
    for _ in range(restarts):
        starts.append(lower + rng.random(p) * (upper - lower))
    if init is not None:
        starts.append(np.clip(np.asarray(init, dtype=float)[:p], lower, upper))
    best_val = np.inf
    best_theta = None
    for theta0 in starts:
        res = minimize(objective, theta0, method="Nelder-Mead",
                       options={"maxfev": max_evals, "xatol": 1e-3,
                                "fatol": 1e-4})
        if res.fun < best_val:
            best_val = res.fun
            best_theta = res.x
    if best_theta is None or not np.isfinite(best_val):
        raise NumericalError("Laplace evidence optimization failed")
    spec, lik = unpack(np.clip(best_theta, lower, upper))
    return laplace_mode(X, y, spec, lik, mean_offset=offset)


def laplace_log_params(model: LaplaceGP,
                       optimize_dof: bool = False) -> np.ndarray:
    """Log-hyperparameter vector of a fitted model (for warm starts)."""
    parts = [np.log(model.spec.lengthscales),
             [np.log(model.spec.signal_variance), np.log(model.lik.scale)]]
    if optimize_dof:
        parts.append([np.log(model.lik.dof)])
    return np.concatenate(parts)


def predict_latent(model: LaplaceGP, x_q) -> tuple[float, float]:
    """Approximate posterior mean and variance of the latent function."""
    means, variances = predict_latent_batch(model, np.atleast_2d(x_q))
    return float(means[0]), float(variances[0])


def predict_latent_batch(model: LaplaceGP, X_q):
    """Vectorized latent prediction at many query points."""
    if not model.converged:
        warnings.warn("predicting from a non-converged Laplace fit",
                      RuntimeWarning, stacklevel=2)
    X_q = np.atleast_2d(np.asarray(X_q, dtype=float))
    k_q = kernel_matrix(X_q, model.X, model.spec)  # (m, n)
    means = model.mean_offset + k_q @ model.coeffs
    sW = np.sqrt(model.W)
    v = solve_triangular(model.B_chol, sW[:, None] * k_q.T, lower=True)
    variances = model.spec.signal_variance - np.sum(v * v, axis=0)
    return means, np.maximum(variances, 0.0)


def latent_marginal_variances(model: LaplaceGP) -> np.ndarray:
    """Diagonal of the approximate latent posterior covariance at the
    training inputs."""
    sW = np.sqrt(model.W)
    V = solve_triangular(model.B_chol, sW[:, None] * model.K, lower=True)
    return np.maximum(np.diag(model.K) - np.sum(V * V, axis=0), 0.0)
