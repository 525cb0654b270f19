"""Outlier classification and the detection schedule.

A fitted heavy-tailed model supplies a latent mode and marginal variance
per observation; points whose standardized residual falls in an extreme
tail of the Student-t are flagged.  All points are reclassified from
scratch every time, so earlier decisions can be revised as the model
improves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import t as student_t

from .data import Dataset
from .gp_laplace import LaplaceGP, latent_marginal_variances


class Direction(Enum):
    """Which residual tail counts as an outlier."""

    HIGH = "high"
    LOW = "low"
    BOTH = "both"


@dataclass(frozen=True)
class Schedule:
    """When outlier detection runs during an optimization budget."""

    warmup_fraction: float = 0.25
    period: int = 5
    quantile: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.warmup_fraction <= 1.0:
            raise ValueError("warmup_fraction must lie in [0, 1]")
        if self.period < 1:
            raise ValueError("period must be a positive integer")
        if not 0.0 < self.quantile <= 0.5:
            raise ValueError("quantile must lie in (0, 0.5]")


@dataclass(frozen=True)
class OutlierFlags:
    flags: np.ndarray
    scores: np.ndarray
    warning: str | None = None


def classify_outliers(dataset: Dataset, model: LaplaceGP,
                      quantile: float = 0.05,
                      direction: Direction = Direction.HIGH) -> OutlierFlags:
    """Flag observations whose tail probability falls below ``quantile``.

    Residuals are standardized by ``sqrt(scale^2 + latent variance)`` and
    scored against the Student-t CDF with the model's degrees of freedom.
    Previous flags play no role; classification is a pure function of the
    dataset and the fitted model.
    """
    if len(dataset) != model.y.size:
        raise ValueError("model was not fitted on this dataset")
    warning = None
    if not model.converged:
        warning = "laplace fit did not converge; classification may be unreliable"
    resid = dataset.y - (model.mean_offset + model.f_hat)
    spread = np.sqrt(model.lik.scale ** 2 + latent_marginal_variances(model))
    t_vals = resid / spread
    upper = student_t.sf(t_vals, df=model.lik.dof)
    lower = student_t.cdf(t_vals, df=model.lik.dof)
    if direction is Direction.HIGH:
        scores = upper
    elif direction is Direction.LOW:
        scores = lower
    else:
        scores = 2.0 * np.minimum(upper, lower)
    flags = scores < quantile
    return OutlierFlags(flags=flags, scores=scores, warning=warning)


def detection_start(budget: int, schedule: Schedule) -> int:
    return int(math.ceil(schedule.warmup_fraction * budget))


def should_run_detection(iteration: int, budget: int,
                         schedule: Schedule) -> bool:
    """True when the warmup has passed and the iteration hits the cadence."""
    if not 0 <= iteration < budget:
        raise ValueError("iteration must satisfy 0 <= iteration < budget")
    start = detection_start(budget, schedule)
    return iteration >= start and (iteration - start) % schedule.period == 0


def active_subset(dataset: Dataset,
                  flags: np.ndarray) -> tuple[Dataset, str | None]:
    """View of the non-flagged observations, preserving order.

    If every point is flagged the full dataset is returned together with a
    degenerate-classification warning, so downstream fitting never sees an
    empty set.
    """
    flags = np.asarray(flags, dtype=bool).ravel()
    if flags.size != len(dataset):
        raise ValueError("flags length does not match dataset")
    if flags.all():
        return Dataset(dataset.bounds, dataset.X.copy(), dataset.y.copy()), \
            "all points flagged; using the full dataset"
    keep = ~flags
    return Dataset(dataset.bounds, dataset.X[keep], dataset.y[keep]), None
