"""Covariance functions with per-dimension lengthscales.

Two stationary families are provided: a Matern-5/2 kernel used for the
surrogate model, and a rational quadratic kernel used to generate
out-of-model test functions.  Both operate on the weighted distance
``r = sqrt(sum_i ((x_i - x'_i) / l_i)^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class KernelFamily(Enum):
    MATERN52 = "matern52"
    RATIONAL_QUADRATIC = "rq"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its hyperparameters.

    Parameters
    ----------
    family : KernelFamily
    lengthscales : array of d positive reals, one per input dimension.
    signal_variance : positive amplitude multiplying the unit-variance form.
    alpha : shape parameter of the rational quadratic family; ignored for
        Matern-5/2.
    """

    family: KernelFamily
    lengthscales: np.ndarray
    signal_variance: float = 1.0
    alpha: float = 2.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if ls.ndim != 1 or ls.size == 0:
            raise ValueError("lengthscales must be a non-empty 1-d vector")
        if not np.all(ls > 0.0):
            raise ValueError("all lengthscales must be positive")
        if not self.signal_variance > 0.0:
            raise ValueError("signal_variance must be positive")
        if not self.alpha > 0.0:
            raise ValueError("alpha must be positive")
        object.__setattr__(self, "lengthscales", ls)

    @property
    def dimension(self) -> int:
        return self.lengthscales.size


def matern52_spec(lengthscales, signal_variance: float = 1.0) -> KernelSpec:
    return KernelSpec(KernelFamily.MATERN52, np.asarray(lengthscales, float),
                      signal_variance)


def rq_spec(lengthscales, signal_variance: float = 1.0,
            alpha: float = 2.0) -> KernelSpec:
    return KernelSpec(KernelFamily.RATIONAL_QUADRATIC,
                      np.asarray(lengthscales, float), signal_variance, alpha)


def _check_dim(x: np.ndarray, spec: KernelSpec) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[-1] != spec.dimension:
        raise ValueError(
            f"point dimension {x.shape[-1]} does not match kernel "
            f"dimension {spec.dimension}"
        )
    return x


def scaled_distance(x, x2, spec: KernelSpec) -> float:
    """Lengthscale-weighted Euclidean distance between two points."""
    x = _check_dim(x, spec)
    x2 = _check_dim(x2, spec)
    return float(np.sqrt(np.sum(((x - x2) / spec.lengthscales) ** 2)))


def scaled_distance_matrix(X1: np.ndarray, X2: np.ndarray,
                           spec: KernelSpec) -> np.ndarray:
    """Pairwise weighted distances between the rows of ``X1`` and ``X2``."""
    X1 = np.atleast_2d(np.asarray(X1, dtype=float)) / spec.lengthscales
    X2 = np.atleast_2d(np.asarray(X2, dtype=float)) / spec.lengthscales
    if X1.shape[1] != spec.dimension or X2.shape[1] != spec.dimension:
        raise ValueError("input dimension does not match kernel dimension")
    d2 = (
        np.sum(X1 ** 2, axis=1)[:, None]
        + np.sum(X2 ** 2, axis=1)[None, :]
        - 2.0 * X1 @ X2.T
    )
    return np.sqrt(np.maximum(d2, 0.0))


def _kernel_of_r(r: np.ndarray, spec: KernelSpec) -> np.ndarray:
    if spec.family is KernelFamily.MATERN52:
        k = (1.0 + r + r ** 2 / 3.0) * np.exp(-r)
    elif spec.family is KernelFamily.RATIONAL_QUADRATIC:
        k = (1.0 + r ** 2 / (2.0 * spec.alpha)) ** (-spec.alpha)
    else:  # pragma: no cover
        raise ValueError(f"unknown kernel family {spec.family}")
    return spec.signal_variance * k


def kernel_value(x, x2, spec: KernelSpec) -> float:
    """Covariance between two points."""
    return float(_kernel_of_r(np.asarray(scaled_distance(x, x2, spec)), spec))


def kernel_matrix(X1: np.ndarray, X2: np.ndarray,
                  spec: KernelSpec) -> np.ndarray:
    """Cross-covariance matrix between the rows of ``X1`` and ``X2``."""
    return _kernel_of_r(scaled_distance_matrix(X1, X2, spec), spec)


def gram(X: np.ndarray, spec: KernelSpec,
         noise_variance: float = 0.0) -> np.ndarray:
    """Symmetric Gram matrix of ``X`` with noise on the diagonal."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    K = kernel_matrix(X, X, spec)
    # exact symmetry regardless of floating-point summation order
    K = 0.5 * (K + K.T)
    if noise_variance:
        K = K + noise_variance * np.eye(X.shape[0])
    return K
